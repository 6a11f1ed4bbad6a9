"""Ensemble statistics, the variance-MSE model-selection metric, spectrograms,
and checkpoint ranking.

The selection metric compares two trace sets through their per-time-step
population variance curves: score = mean over time of the squared variance
difference. Spectrograms are short-time DFT magnitudes with a 700-sample
Hamming window and 680-sample overlap (hop 20), one-sided bins.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import as_strided

from . import gan, nn
from .errors import DimensionError, ValidationError

log = logging.getLogger(__name__)

SPECTROGRAM_WINDOW = 700
SPECTROGRAM_OVERLAP = 680


@dataclass
class EnsembleStats:
    """Per-time-step mean and population (1/N) variance across a trace set."""

    mean: np.ndarray
    variance: np.ndarray
    count: int


def ensemble_stats(traces: np.ndarray) -> EnsembleStats:
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 2 or traces.shape[0] < 1:
        raise DimensionError(f"expected (n, length) with n >= 1, got {traces.shape}")
    # Shifted two-pass: deviations are computed in a frame shifted by the
    # first row, so a set of identical traces yields exactly zero variance
    # for any N (a plain mean rounds by an ulp when N is not a power of two).
    shifted = traces - traces[0]
    shifted_mean = shifted.mean(axis=0)
    dev = shifted - shifted_mean
    return EnsembleStats(mean=traces[0] + shifted_mean,
                         variance=np.mean(dev * dev, axis=0),  # population (1/N)
                         count=traces.shape[0])


def variance_mse(a: EnsembleStats, b: EnsembleStats) -> float:
    if a.variance.shape != b.variance.shape:
        raise DimensionError("variance curves differ in length")
    diff = a.variance - b.variance
    # fsum gives the correctly rounded sum, so a constant variance offset
    # scores exactly offset**2 (the record length is a power of two).
    return math.fsum(diff * diff) / diff.size


# ---------------------------------------------------------------------------
# Spectrogram
# ---------------------------------------------------------------------------

@dataclass
class Spectrogram:
    magnitude: np.ndarray      # (frames, bins)
    window_len: int
    overlap: int
    dt_record: float
    window_name: str = "hamming"

    @property
    def hop(self) -> int:
        return self.window_len - self.overlap

    @property
    def frame_times(self) -> np.ndarray:
        """Center time of each frame, seconds."""
        starts = np.arange(self.magnitude.shape[0]) * self.hop
        return (starts + self.window_len / 2.0) * self.dt_record

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.rfftfreq(self.window_len, self.dt_record)


def spectrogram(samples: np.ndarray, dt_record: float = 1.0,
                window_len: int = SPECTROGRAM_WINDOW,
                overlap: int = SPECTROGRAM_OVERLAP) -> Spectrogram:
    """Magnitude of the windowed short-time DFT of one trace.

    Frames advance by ``window_len - overlap`` samples; a trailing partial
    window is dropped. Output is (frames, window_len // 2 + 1).
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise DimensionError("spectrogram expects a single 1D trace")
    if not 0 <= overlap < window_len:
        raise ValidationError("need 0 <= overlap < window_len")
    if samples.size < window_len:
        raise DimensionError(f"trace length {samples.size} < window {window_len}")
    hop = window_len - overlap
    frames = (samples.size - window_len) // hop + 1
    stride = samples.strides[0]
    framed = as_strided(samples, (frames, window_len), (stride * hop, stride))
    window = np.hamming(window_len)
    magnitude = np.abs(np.fft.rfft(framed * window, axis=1))
    return Spectrogram(magnitude=magnitude, window_len=window_len,
                       overlap=overlap, dt_record=dt_record)


# ---------------------------------------------------------------------------
# Checkpoint ranking
# ---------------------------------------------------------------------------

@dataclass
class ModelScore:
    checkpoint_id: str
    mse: float


class CheckpointSampler:
    """Draws traces from a generator checkpoint; loads lazily so ranking can
    skip unreadable files."""

    def __init__(self, path):
        self.path = Path(path)
        self.checkpoint_id = self.path.name
        self._net = None

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self._net is None:
            self._net, _ = nn.load_network(self.path)
        return gan.generate_samples(self._net, n, rng)


class ReplaySampler:
    """Test double that replays a fixed trace set (cycled to length n)."""

    def __init__(self, traces: np.ndarray, checkpoint_id: str = "replay"):
        self.traces = np.asarray(traces, dtype=np.float64)
        self.checkpoint_id = checkpoint_id

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        reps = -(-n // self.traces.shape[0])
        return np.tile(self.traces, (reps, 1))[:n]


def _as_sampler(entry):
    if isinstance(entry, (str, Path)):
        return CheckpointSampler(entry)
    if hasattr(entry, "sample") and hasattr(entry, "checkpoint_id"):
        return entry
    raise ValidationError(f"cannot rank {entry!r}: need a path or sampler")


def rank_checkpoints(entries, training_stats: EnsembleStats, n_gen: int = 3000,
                     seed: int = 0) -> list[ModelScore]:
    """Score each checkpoint by the variance-MSE of ``n_gen`` generated traces
    against the training-set statistics; ascending (best first).

    Each entry gets an RNG keyed by (seed, checkpoint id), so the ranking is
    deterministic and invariant to list order. Entries that fail to load are
    skipped with a warning.
    """
    if not entries:
        raise ValidationError("no checkpoints to rank")
    scores = []
    for entry in entries:
        sampler = _as_sampler(entry)
        key = zlib.crc32(str(sampler.checkpoint_id).encode("utf-8"))
        rng = np.random.default_rng(np.random.SeedSequence((seed, key)))
        try:
            generated = sampler.sample(n_gen, rng)
            stats = ensemble_stats(generated)
            scores.append(ModelScore(str(sampler.checkpoint_id),
                                     variance_mse(stats, training_stats)))
        except Exception as exc:  # noqa: BLE001 - ranking must survive bad files
            log.warning("skipping checkpoint %s: %s", sampler.checkpoint_id, exc)
    scores.sort(key=lambda s: (s.mse, s.checkpoint_id))
    return scores


def select_best_checkpoint(ckpt_dir, training_stats: EnsembleStats,
                           n_gen: int = 3000, seed: int = 0) -> Path:
    """Best stage checkpoint in a directory by the variance-MSE metric."""
    ckpt_dir = Path(ckpt_dir)
    paths = sorted(ckpt_dir.glob("*.ckpt"))
    if not paths:
        raise ValidationError(f"{ckpt_dir}: no checkpoints found")
    ranking = rank_checkpoints(paths, training_stats, n_gen=n_gen, seed=seed)
    if not ranking:
        raise ValidationError(f"{ckpt_dir}: no loadable checkpoints")
    return ckpt_dir / ranking[0].checkpoint_id
