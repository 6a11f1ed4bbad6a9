"""HTTP service hosting the blinded real-vs-generated trace test.

A session is an ordered list of pairs, each holding one simulated trace and
one freshly generated trace in a random slot order. The pair-serving payload
carries the two waveforms and nothing else: no origin flag, no scenario
metadata, and both slots are normalized identically (dataset units scaled by
the dataset-wide max, display-rounded the same way). Ground truth appears
only in the results payload, and only once every pair is answered.

Endpoints:
    POST /api/session                       {"n_pairs": int?, "seed": int?}
    GET  /api/session/{id}/pair/{k}
    POST /api/session/{id}/answer           {"pair_index": int, "chosen_slot": int}
    GET  /api/session/{id}/results          (adds truth only when complete)
    GET  /api/session/{id}/results.csv
    GET  /...                               static UI bundle, when configured

Every session creation and answer is appended to a JSONL log, so a restarted
service rebuilds identical sessions (the trace content regenerates from the
logged seeds) and replays the recorded answers.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import gan, nn
from .dataset import Dataset
from .errors import ConflictError, NotFoundError, ValidationError
from .evaluation import SPECTROGRAM_OVERLAP, SPECTROGRAM_WINDOW, spectrogram
from .plots import _block_reduce

MAX_DISPLAY_POINTS = 2048
DEFAULT_PAIRS_PER_SESSION = 20
DISPLAY_DECIMALS = 6


@dataclass
class PairRecord:
    real_slot: int
    real_index: int


@dataclass
class AnswerRecord:
    pair_index: int
    chosen_slot: int
    timestamp: float


def _display(trace: np.ndarray) -> list[float]:
    factor = -(-trace.size // MAX_DISPLAY_POINTS)
    return [round(float(v), DISPLAY_DECIMALS) for v in trace[::factor]]


@dataclass
class BlindTestSession:
    session_id: str
    checkpoint_id: str
    seed: int
    pairs: list[PairRecord]
    display: list[tuple[list[float], list[float]]]
    raw: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)
    answers: dict[int, AnswerRecord] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def complete(self) -> bool:
        return len(self.answers) == self.n_pairs

    def pair_payload(self, index: int) -> dict:
        if not 0 <= index < self.n_pairs:
            raise NotFoundError(f"pair {index} does not exist")
        slot0, slot1 = self.display[index]
        return {"pair_index": index, "n_pairs": self.n_pairs,
                "sample1": slot0, "sample2": slot1,
                "answered": index in self.answers}

    def pair_spectrogram(self, index: int) -> dict:
        """Display sugar: identically computed spectrogram magnitudes for both
        slots, block-reduced for transport. Carries no origin information."""
        if not 0 <= index < self.n_pairs:
            raise NotFoundError(f"pair {index} does not exist")
        slot0, slot1 = self.raw[index]
        if slot0.size < SPECTROGRAM_WINDOW:
            raise ValidationError(
                f"traces of length {slot0.size} are shorter than the "
                f"{SPECTROGRAM_WINDOW}-sample spectrogram window")

        def reduced(trace):
            magnitude = spectrogram(trace).magnitude
            small = _block_reduce(magnitude, max_cells=96)
            return [[round(float(v), DISPLAY_DECIMALS) for v in row] for row in small]

        return {"pair_index": index, "window_len": SPECTROGRAM_WINDOW,
                "overlap": SPECTROGRAM_OVERLAP,
                "sample1": reduced(slot0), "sample2": reduced(slot1)}

    def submit_answer(self, index: int, chosen_slot: int,
                      timestamp: float | None = None) -> dict:
        if not 0 <= index < self.n_pairs:
            raise NotFoundError(f"pair {index} does not exist")
        if chosen_slot not in (0, 1):
            raise ValidationError("chosen_slot must be 0 or 1")
        with self._lock:
            if index in self.answers:
                raise ConflictError(f"pair {index} already answered")
            self.answers[index] = AnswerRecord(index, chosen_slot,
                                               time.time() if timestamp is None else timestamp)
        return {"session_id": self.session_id, "pair_index": index,
                "answered": len(self.answers), "n_pairs": self.n_pairs,
                "complete": self.complete}

    def accuracy(self) -> float:
        if not self.answers:
            return 0.0
        correct = sum(1 for a in self.answers.values()
                      if a.chosen_slot == self.pairs[a.pair_index].real_slot)
        return correct / len(self.answers)

    def results(self) -> dict:
        base = {"session_id": self.session_id, "checkpoint_id": self.checkpoint_id,
                "n_pairs": self.n_pairs, "answered": len(self.answers),
                "complete": self.complete}
        if not self.complete:
            return base
        base["accuracy"] = self.accuracy()
        base["pairs"] = [{"pair_index": k, "chosen_slot": a.chosen_slot,
                          "real_slot": self.pairs[k].real_slot,
                          "correct": a.chosen_slot == self.pairs[k].real_slot}
                         for k, a in sorted(self.answers.items())]
        return base

    def results_csv(self) -> str:
        if not self.complete:
            raise ConflictError("session incomplete")
        lines = ["pair_index,chosen_slot,real_slot,correct"]
        for k, a in sorted(self.answers.items()):
            real = self.pairs[k].real_slot
            lines.append(f"{k},{a.chosen_slot},{real},{int(a.chosen_slot == real)}")
        lines.append(f"# accuracy,{self.accuracy()}")
        return "\n".join(lines) + "\n"


def create_session(generator: nn.Network, dataset: Dataset, n_pairs: int,
                   rng: np.random.Generator, session_id: str = "local",
                   checkpoint_id: str = "generator") -> BlindTestSession:
    """Assemble a session: reals drawn without replacement, one fresh
    generated trace per pair, slot order randomized."""
    if n_pairs < 1:
        raise ValidationError("n_pairs must be >= 1")
    total = dataset.traces.shape[0]
    if n_pairs > total:
        raise ValidationError(f"dataset holds {total} traces; cannot draw {n_pairs} pairs")
    real_rows = rng.choice(total, size=n_pairs, replace=False)
    fakes = gan.generate_samples(generator, n_pairs, rng)
    normalized = dataset.normalized()
    pairs, display, raw = [], [], []
    for k in range(n_pairs):
        real_slot = int(rng.integers(0, 2))
        real_full, fake_full = normalized[real_rows[k]], fakes[k]
        real, fake = _display(real_full), _display(fake_full)
        ordered = ((real, fake), (real_full, fake_full))
        if real_slot == 1:
            ordered = ((fake, real), (fake_full, real_full))
        pairs.append(PairRecord(real_slot=real_slot, real_index=int(real_rows[k])))
        display.append(ordered[0])
        raw.append(ordered[1])
    return BlindTestSession(session_id=session_id, checkpoint_id=checkpoint_id,
                            seed=0, pairs=pairs, display=display, raw=raw)


class BlindTestService:
    """Session store shared by the HTTP handler; restart-safe via the log."""

    def __init__(self, generator: nn.Network, dataset: Dataset,
                 checkpoint_id: str = "generator", default_pairs: int = DEFAULT_PAIRS_PER_SESSION,
                 base_seed: int = 0, log_path=None):
        self.generator = generator
        self.dataset = dataset
        self.checkpoint_id = checkpoint_id
        self.default_pairs = default_pairs
        self.base_seed = base_seed
        self.log_path = Path(log_path) if log_path else None
        self.sessions: dict[str, BlindTestSession] = {}
        self._counter = 0
        self._lock = threading.RLock()
        if self.log_path and self.log_path.exists():
            self._replay_log()

    def _append_log(self, record: dict) -> None:
        if self.log_path is None:
            return
        with self._lock, open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    def _replay_log(self) -> None:
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["event"] == "create":
                    self._build_session(record["session_id"], record["seed"],
                                        record["n_pairs"])
                    self._counter = max(self._counter, int(record["session_id"][1:]) + 1)
                elif record["event"] == "answer":
                    self.sessions[record["session_id"]].submit_answer(
                        record["pair_index"], record["chosen_slot"], record["timestamp"])

    def _build_session(self, session_id: str, seed: int, n_pairs: int) -> BlindTestSession:
        session = create_session(self.generator, self.dataset, n_pairs,
                                 np.random.default_rng(seed), session_id,
                                 self.checkpoint_id)
        session.seed = seed
        self.sessions[session_id] = session
        return session

    def create(self, n_pairs: int | None = None, seed: int | None = None) -> BlindTestSession:
        with self._lock:
            session_id = f"s{self._counter:06d}"
            if seed is None:
                seed = int(np.random.SeedSequence((self.base_seed, self._counter))
                           .generate_state(1, np.uint64)[0])
            self._counter += 1
            session = self._build_session(session_id, seed,
                                          n_pairs or self.default_pairs)
        self._append_log({"event": "create", "session_id": session_id,
                          "seed": seed, "n_pairs": session.n_pairs,
                          "checkpoint_id": self.checkpoint_id})
        return session

    def get(self, session_id: str) -> BlindTestSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"no session {session_id!r}") from None

    def answer(self, session_id: str, pair_index: int, chosen_slot: int) -> dict:
        result = self.get(session_id).submit_answer(pair_index, chosen_slot)
        self._append_log({"event": "answer", "session_id": session_id,
                          "pair_index": pair_index, "chosen_slot": chosen_slot,
                          "timestamp": self.get(session_id).answers[pair_index].timestamp})
        return result


# ---------------------------------------------------------------------------
# HTTP plumbing
# ---------------------------------------------------------------------------

_ROUTES = [
    ("POST", re.compile(r"^/api/session$"), "create"),
    ("GET", re.compile(r"^/api/session/([^/]+)/pair/(\d+)$"), "pair"),
    ("GET", re.compile(r"^/api/session/([^/]+)/pair/(\d+)/spectrogram$"), "pair_spectrogram"),
    ("POST", re.compile(r"^/api/session/([^/]+)/answer$"), "answer"),
    ("GET", re.compile(r"^/api/session/([^/]+)/results$"), "results"),
    ("GET", re.compile(r"^/api/session/([^/]+)/results\.csv$"), "results_csv"),
]

_CONTENT_TYPES = {".html": "text/html", ".js": "text/javascript",
                  ".css": "text/css", ".svg": "image/svg+xml",
                  ".json": "application/json", ".map": "application/json"}


class _Handler(BaseHTTPRequestHandler):
    service: BlindTestService = None
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def _send_error_json(self, status: int, category: str, message: str) -> None:
        self._send_json({"error": {"category": category, "message": message}}, status)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad JSON body: {exc}") from exc

    def _dispatch(self, method: str) -> None:
        for verb, pattern, name in _ROUTES:
            match = pattern.match(self.path)
            if match and verb == method:
                try:
                    getattr(self, f"_route_{name}")(*match.groups())
                except NotFoundError as exc:
                    self._send_error_json(404, "not_found", str(exc))
                except ConflictError as exc:
                    self._send_error_json(409, "conflict", str(exc))
                except ValidationError as exc:
                    self._send_error_json(400, "validation", str(exc))
                return
            if match:
                self._send_error_json(405, "method", f"{method} not allowed")
                return
        if method == "GET" and self._serve_static():
            return
        self._send_error_json(404, "not_found", f"no route for {self.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def _route_create(self):
        body = self._body()
        session = self.service.create(body.get("n_pairs"), body.get("seed"))
        self._send_json({"session_id": session.session_id,
                         "n_pairs": session.n_pairs,
                         "checkpoint_id": session.checkpoint_id}, status=201)

    def _route_pair(self, session_id: str, index: str):
        self._send_json(self.service.get(session_id).pair_payload(int(index)))

    def _route_pair_spectrogram(self, session_id: str, index: str):
        self._send_json(self.service.get(session_id).pair_spectrogram(int(index)))

    def _route_answer(self, session_id: str):
        body = self._body()
        if "pair_index" not in body or "chosen_slot" not in body:
            raise ValidationError("answer needs pair_index and chosen_slot")
        self._send_json(self.service.answer(session_id, int(body["pair_index"]),
                                            int(body["chosen_slot"])))

    def _route_results(self, session_id: str):
        self._send_json(self.service.get(session_id).results())

    def _route_results_csv(self, session_id: str):
        csv = self.service.get(session_id).results_csv()
        raw = csv.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/csv")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def _serve_static(self) -> bool:
        if self.ui_dir is None:
            return False
        root = self.ui_dir.resolve()
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        candidate = (root / rel).resolve()
        if not candidate.is_relative_to(root) or not candidate.is_file():
            return False
        raw = candidate.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type",
                         _CONTENT_TYPES.get(candidate.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)
        return True


def make_server(service: BlindTestService, port: int = 0,
                ui_dir=None, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind a threading HTTP server; port 0 picks a free port."""
    handler = type("BoundHandler", (_Handler,),
                   {"service": service, "ui_dir": Path(ui_dir) if ui_dir else None})
    return ThreadingHTTPServer((host, port), handler)
