"""Scenario sampling, dataset generation, and persistence.

A dataset is a block of simulated traces per class (no object, large
object, small object) plus a JSON manifest holding every sampled scenario,
the per-sample seeds, the solver configuration, per-trace checksums, and
the dataset-wide normalization constant (max |sample|). Per-sample seeds
derive from the global seed through a counter-keyed seed sequence, so any
sample can be regenerated bit-exactly on its own and removing one sample
never changes another.

Files: ``traces.bin`` (little-endian float64 block, sample-major) and
``manifest.json``.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import json
import numpy as np

from .errors import DivergenceError, FormatError, ValidationError
from .fdtd import (AIRGAP_RANGE_CM, JACKET_RANGE_CM, LARGE_OBJECT_CENTER_RANGE_CM,
                   LARGE_OBJECT_HEIGHT_CM, LAYER_PERMITTIVITY, OBJECT_PERMITTIVITY,
                   OBJECT_THICKNESS_CM, SHIRT_RANGE_CM, SMALL_OBJECT_CENTER_RANGE_CM,
                   SMALL_OBJECT_HEIGHT_CM, ClassLabel, ScenarioParams, SimConfig,
                   run_simulation)

FORMAT_VERSION = 1
TRACES_MAGIC = b"RGTR"
TRACES_FILENAME = "traces.bin"
MANIFEST_FILENAME = "manifest.json"
WORKERS_ENV = "RADARGAN_WORKERS"

DESK_COUNTS = (200, 100, 100)      # (no object, large, small)
PAPER_COUNTS = (6000, 3000, 3000)

CLASS_ORDER = (ClassLabel.NO_OBJECT, ClassLabel.LARGE_OBJECT, ClassLabel.SMALL_OBJECT)


def sample_seed(global_seed: int, index: int) -> int:
    """64-bit per-sample seed from a splittable counter scheme."""
    ss = np.random.SeedSequence(entropy=global_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_scenario(class_label: ClassLabel, rng: np.random.Generator,
                    rng_seed: int = 0) -> ScenarioParams:
    """Draw one scenario: uniform layer thicknesses, fixed permittivities,
    and (for object classes) a uniform vertical object center."""
    jacket = float(rng.uniform(*JACKET_RANGE_CM))
    shirt = float(rng.uniform(*SHIRT_RANGE_CM))
    airgap = float(rng.uniform(*AIRGAP_RANGE_CM))
    if class_label == ClassLabel.NO_OBJECT:
        params = ScenarioParams(class_label, jacket, shirt, airgap, rng_seed=rng_seed)
    else:
        if class_label == ClassLabel.LARGE_OBJECT:
            height, center_range = LARGE_OBJECT_HEIGHT_CM, LARGE_OBJECT_CENTER_RANGE_CM
        else:
            height, center_range = SMALL_OBJECT_HEIGHT_CM, SMALL_OBJECT_CENTER_RANGE_CM
        center = float(rng.uniform(*center_range))
        params = ScenarioParams(
            class_label, jacket, shirt, airgap,
            object_thickness=OBJECT_THICKNESS_CM, object_height=height,
            object_center_y=center,
            permittivities={**LAYER_PERMITTIVITY, "object": OBJECT_PERMITTIVITY},
            rng_seed=rng_seed)
    params.validate()
    return params


def scenario_record(params: ScenarioParams, index: int) -> dict:
    record = {"index": index, "class": int(params.class_label),
              "seed": params.rng_seed,
              "jacket_cm": params.jacket_thickness,
              "shirt_cm": params.shirt_thickness,
              "airgap_cm": params.airgap_thickness}
    if params.has_object():
        record["object_center_y_cm"] = params.object_center_y
    return record


def scenario_from_record(record: dict) -> ScenarioParams:
    label = ClassLabel(record["class"])
    if label == ClassLabel.NO_OBJECT:
        return ScenarioParams(label, record["jacket_cm"], record["shirt_cm"],
                              record["airgap_cm"], rng_seed=record["seed"])
    height = LARGE_OBJECT_HEIGHT_CM if label == ClassLabel.LARGE_OBJECT else SMALL_OBJECT_HEIGHT_CM
    return ScenarioParams(label, record["jacket_cm"], record["shirt_cm"],
                          record["airgap_cm"], object_thickness=OBJECT_THICKNESS_CM,
                          object_height=height,
                          object_center_y=record["object_center_y_cm"],
                          permittivities={**LAYER_PERMITTIVITY, "object": OBJECT_PERMITTIVITY},
                          rng_seed=record["seed"])


@dataclass(frozen=True)
class DatasetSpec:
    counts: tuple[int, int, int] = DESK_COUNTS
    global_seed: int = 0
    sim_cfg: SimConfig = field(default_factory=SimConfig.desk_scale)

    def validate(self) -> None:
        if len(self.counts) != 3 or any(c < 0 for c in self.counts) or sum(self.counts) < 1:
            raise ValidationError("counts must be three non-negative ints summing to >= 1")
        self.sim_cfg.validate()


@dataclass
class Dataset:
    traces: np.ndarray            # (n, record_len) float64
    labels: np.ndarray            # (n,) uint8
    scenarios: list[ScenarioParams]
    spec: DatasetSpec
    dt_record: float
    normalization: float

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(int(np.sum(self.labels == c)) for c in CLASS_ORDER)

    def normalized(self) -> np.ndarray:
        return self.traces / self.normalization

    def class_traces(self, label: ClassLabel, normalized: bool = True) -> np.ndarray:
        rows = self.traces[self.labels == int(label)]
        return rows / self.normalization if normalized else rows

    def validate(self) -> None:
        n = self.traces.shape[0]
        if self.labels.shape != (n,) or len(self.scenarios) != n:
            raise ValidationError("trace/label/scenario counts disagree")
        if self.counts != tuple(self.spec.counts):
            raise ValidationError(f"stored counts {self.counts} != declared {self.spec.counts}")
        if not np.isfinite(self.traces).all():
            raise ValidationError("dataset contains non-finite samples")
        if self.normalization <= 0:
            raise ValidationError("normalization constant must be positive")


def _simulate_job(args) -> np.ndarray:
    params, cfg = args
    try:
        return run_simulation(params, cfg).samples
    except DivergenceError as exc:
        raise DivergenceError(f"sample with seed {params.rng_seed} diverged: {exc}",
                              exc.step_index) from exc


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, workers)


def generate_dataset(spec: DatasetSpec, workers: int | None = None,
                     progress=None) -> Dataset:
    """Simulate every scenario in the spec; results always land in index
    order no matter how the worker pool schedules them."""
    spec.validate()
    scenarios = []
    index = 0
    for label, count in zip(CLASS_ORDER, spec.counts):
        for _ in range(count):
            seed = sample_seed(spec.global_seed, index)
            rng = np.random.default_rng(seed)
            scenarios.append(sample_scenario(label, rng, rng_seed=seed))
            index += 1

    jobs = [(params, spec.sim_cfg) for params in scenarios]
    workers = resolve_workers(workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = []
            for i, samples in enumerate(pool.map(_simulate_job, jobs, chunksize=4)):
                rows.append(samples)
                if progress is not None:
                    progress(i + 1, len(jobs))
    else:
        rows = []
        for i, job in enumerate(jobs):
            rows.append(_simulate_job(job))
            if progress is not None:
                progress(i + 1, len(jobs))
    traces = np.asarray(rows, dtype=np.float64)
    labels = np.array([int(p.class_label) for p in scenarios], dtype=np.uint8)
    normalization = float(np.abs(traces).max())
    if normalization <= 0:
        raise ValidationError("all traces are zero; cannot normalize")
    ds = Dataset(traces=traces, labels=labels, scenarios=scenarios, spec=spec,
                 dt_record=spec.sim_cfg.dt_record, normalization=normalization)
    ds.validate()
    return ds


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _trace_crc(row: np.ndarray) -> int:
    return zlib.crc32(np.ascontiguousarray(row, dtype="<f8").tobytes())


def save_traces(path, traces: np.ndarray, dt_record: float) -> None:
    """Write a bare trace block (used for generated samples too)."""
    traces = np.ascontiguousarray(traces, dtype="<f8")
    n, length = traces.shape
    with open(path, "wb") as fh:
        fh.write(TRACES_MAGIC)
        fh.write(np.array([FORMAT_VERSION], "<u4").tobytes())
        fh.write(np.array([n, length], "<u8").tobytes())
        fh.write(np.array([dt_record], "<f8").tobytes())
        fh.write(traces.tobytes())


def load_traces(path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 32 or blob[:4] != TRACES_MAGIC:
        raise FormatError(f"{path}: not a trace file")
    version = int(np.frombuffer(blob, "<u4", 1, 4)[0])
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported trace format version {version}")
    n, length = (int(v) for v in np.frombuffer(blob, "<u8", 2, 8))
    dt_record = float(np.frombuffer(blob, "<f8", 1, 24)[0])
    expected = 32 + n * length * 8
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    traces = np.frombuffer(blob, "<f8", n * length, 32).reshape(n, length).copy()
    return traces, dt_record


def save_dataset(ds: Dataset, out_dir) -> None:
    ds.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_traces(out_dir / TRACES_FILENAME, ds.traces, ds.dt_record)
    cfg = ds.spec.sim_cfg
    manifest = {
        "format_version": FORMAT_VERSION,
        "counts": {"no_object": ds.spec.counts[0], "large_object": ds.spec.counts[1],
                   "small_object": ds.spec.counts[2]},
        "global_seed": ds.spec.global_seed,
        "sim": {"dx_mm": cfg.dx_mm, "courant": cfg.courant,
                "record_len": cfg.record_len, "record_every": cfg.record_every,
                "standoff_cm": cfg.standoff_cm, "source_f0_ghz": cfg.source_f0_ghz,
                "source_band_ghz": cfg.source_band_ghz},
        "dt_record": ds.dt_record,
        "normalization": ds.normalization,
        "samples": [scenario_record(p, i) for i, p in enumerate(ds.scenarios)],
        "trace_crc32": [_trace_crc(row) for row in ds.traces],
    }
    with open(out_dir / MANIFEST_FILENAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_dataset(in_dir) -> Dataset:
    in_dir = Path(in_dir)
    manifest_path = in_dir / MANIFEST_FILENAME
    if not manifest_path.exists():
        raise FormatError(f"{manifest_path}: missing manifest")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported dataset format version "
                          f"{manifest.get('format_version')}")
    traces, dt_record = load_traces(in_dir / TRACES_FILENAME)

    counts = (manifest["counts"]["no_object"], manifest["counts"]["large_object"],
              manifest["counts"]["small_object"])
    sim = manifest["sim"]
    spec = DatasetSpec(counts=counts, global_seed=manifest["global_seed"],
                       sim_cfg=SimConfig(**sim))
    scenarios = [scenario_from_record(r) for r in manifest["samples"]]
    labels = np.array([int(p.class_label) for p in scenarios], dtype=np.uint8)

    if traces.shape[0] != len(scenarios):
        raise ValidationError(f"manifest lists {len(scenarios)} samples but "
                              f"trace file holds {traces.shape[0]}")
    if traces.shape[1] != sim["record_len"]:
        raise ValidationError("trace length disagrees with manifest record_len")
    crcs = manifest["trace_crc32"]
    if len(crcs) != traces.shape[0]:
        raise ValidationError("checksum list length disagrees with trace count")
    for i, row in enumerate(traces):
        if _trace_crc(row) != crcs[i]:
            raise FormatError(f"trace {i}: checksum mismatch")

    ds = Dataset(traces=traces, labels=labels, scenarios=scenarios, spec=spec,
                 dt_record=dt_record, normalization=manifest["normalization"])
    ds.validate()
    return ds
