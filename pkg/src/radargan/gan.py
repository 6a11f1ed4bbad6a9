"""Adversarial trace generator: network construction, two-stage training,
discriminator resets, checkpointing, and sampling.

The generator maps a latent vector through a dense projection to a
(channels, 64) feature map, then doubles the length per block with
[upsample x2 -> conv(kernel 25, stride 1) -> activation] until it emits a
single tanh channel of the target length (7 blocks for 8192 samples, 4 for
the 1024-sample desk variant). The discriminator reduces the input with
kernel-25 convolutions of stride 4,4,4,4,2 and ends in a sigmoid scalar.

Training alternates one discriminator batch with one generator batch per
step. Real batches are labeled 0.95, generated batches 0; the generator is
trained against the locked discriminator with its samples labeled 1.0.
Stage one uses an MSE loss at a 1e-3 learning rate; stage two resets the
discriminator and switches to binary cross-entropy at 1e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nn
from .errors import TrainingDivergedError, ValidationError
from .fdtd import ClassLabel

KERNEL_SIZE = 25
GENERATOR_BASE_LEN = 64
GENERATOR_CHANNELS = (512, 256, 128, 64, 32, 16, 8)   # block input channels
DISCRIMINATOR_CHANNELS = (8, 16, 32, 64, 128)
DISCRIMINATOR_STRIDES = (4, 4, 4, 4, 2)
LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class StageConfig:
    loss: str      # "mse" | "bce"
    alpha: float
    epochs: int


@dataclass(frozen=True)
class GanConfig:
    latent_dim: int = 100
    trace_len: int = 8192
    batch_size: int = 30
    real_label: float = 0.95
    beta1: float = 0.5
    beta2: float = 0.9
    epsilon: float = 1e-8
    checkpoint_interval: int = 5
    stage1: StageConfig = StageConfig("mse", 1e-3, 400)
    stage2: StageConfig = StageConfig("bce", 1e-4, 400)

    def stage(self, which: int) -> StageConfig:
        if which == 1:
            return self.stage1
        if which == 2:
            return self.stage2
        raise ValidationError(f"stage must be 1 or 2, got {which}")

    def validate(self) -> None:
        if not 0.5 < self.real_label <= 1.0:
            raise ValidationError("real_label must be in (0.5, 1]")
        if self.latent_dim < 1 or self.batch_size < 1 or self.checkpoint_interval < 1:
            raise ValidationError("latent_dim, batch_size, checkpoint_interval must be >= 1")
        generator_block_count(self.trace_len)
        for stage in (self.stage1, self.stage2):
            if stage.loss not in ("mse", "bce"):
                raise ValidationError(f"unknown loss {stage.loss!r}")

    @classmethod
    def desk_scale(cls, **overrides) -> "GanConfig":
        base = cls(trace_len=1024,
                   stage1=StageConfig("mse", 1e-3, 100),
                   stage2=StageConfig("bce", 1e-4, 100))
        return replace(base, **overrides)


def default_batch_size(class_label: ClassLabel) -> int:
    return 60 if class_label == ClassLabel.NO_OBJECT else 30


def generator_block_count(trace_len: int) -> int:
    ratio = trace_len / GENERATOR_BASE_LEN
    blocks = round(math.log2(ratio)) if ratio >= 2 else 0
    if blocks < 1 or blocks > len(GENERATOR_CHANNELS) or GENERATOR_BASE_LEN * 2 ** blocks != trace_len:
        raise ValidationError(
            f"trace_len must be 64 * 2^k for k in 1..{len(GENERATOR_CHANNELS)}, got {trace_len}")
    return blocks


def build_generator(latent_dim: int, trace_len: int, rng: np.random.Generator,
                    dtype=np.float32) -> nn.Network:
    """Latent vector -> (1, trace_len) tanh output; lengths double per block."""
    blocks = generator_block_count(trace_len)
    channels = GENERATOR_CHANNELS[len(GENERATOR_CHANNELS) - blocks:]
    layers: list[nn.Layer] = [
        nn.Dense(latent_dim, channels[0] * GENERATOR_BASE_LEN, rng, dtype),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Reshape((channels[0], GENERATOR_BASE_LEN)),
    ]
    for i in range(blocks):
        out_channels = channels[i + 1] if i + 1 < blocks else 1
        layers.append(nn.Upsample(2))
        layers.append(nn.Conv1D(channels[i], out_channels, KERNEL_SIZE, 1, "same",
                                rng, dtype))
        layers.append(nn.Tanh() if i == blocks - 1 else nn.LeakyReLU(LEAKY_SLOPE))
    return nn.Network(layers, dtype=dtype)


def build_discriminator(trace_len: int, rng: np.random.Generator,
                        dtype=np.float32) -> nn.Network:
    """(1, trace_len) input -> sigmoid probability of being real."""
    layers: list[nn.Layer] = []
    in_channels = 1
    length = trace_len
    for out_channels, stride in zip(DISCRIMINATOR_CHANNELS, DISCRIMINATOR_STRIDES):
        layers.append(nn.Conv1D(in_channels, out_channels, KERNEL_SIZE, stride,
                                "same", rng, dtype))
        layers.append(nn.LeakyReLU(LEAKY_SLOPE))
        in_channels = out_channels
        length = -(-length // stride)
    layers.append(nn.Reshape((-1,)))
    layers.append(nn.Dense(in_channels * length, 1, rng, dtype))
    layers.append(nn.Sigmoid())
    return nn.Network(layers, dtype=dtype)


def loss_ceiling(loss: str) -> float:
    """Worst-case generator loss: the value when D fully rejects its samples."""
    if loss == "mse":
        return 1.0
    if loss == "bce":
        return -math.log(nn.BCE_CLAMP)
    raise ValidationError(f"unknown loss {loss!r}")


# ---------------------------------------------------------------------------
# Bundle and training
# ---------------------------------------------------------------------------

@dataclass
class GanBundle:
    generator: nn.Network
    discriminator: nn.Network
    opt_g: nn.Adam
    opt_d: nn.Adam
    class_label: ClassLabel
    cfg: GanConfig
    stage: int = 1
    epoch: int = 0


def new_bundle(class_label: ClassLabel, cfg: GanConfig, rng: np.random.Generator,
               dtype=np.float32) -> GanBundle:
    cfg.validate()
    g = build_generator(cfg.latent_dim, cfg.trace_len, rng, dtype)
    d = build_discriminator(cfg.trace_len, rng, dtype)
    hp = nn.AdamParams(cfg.stage1.alpha, cfg.beta1, cfg.beta2, cfg.epsilon)
    return GanBundle(g, d, nn.Adam(g.params(), hp), nn.Adam(d.params(), hp),
                     class_label, cfg)


def reset_discriminator(bundle: GanBundle, rng: np.random.Generator) -> GanBundle:
    """Re-draw all discriminator weights (Glorot uniform, zero biases) and zero
    its optimizer state; the generator is untouched."""
    for layer in bundle.discriminator.layers:
        layer.reset_parameters(rng)
    hp = bundle.opt_d.hp
    bundle.opt_d = nn.Adam(bundle.discriminator.params(), hp)
    return bundle


@dataclass
class EpochStats:
    epoch: int
    d_loss: float
    g_loss: float


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    checkpoint_paths: list[Path] = field(default_factory=list)


def discriminator_step(bundle: GanBundle, real: np.ndarray, loss_fn,
                       rng: np.random.Generator) -> float:
    """One discriminator batch: real traces at the smoothed label, freshly
    generated traces at 0. The generator runs forward only; its parameters
    are untouched. Returns the summed real+fake loss."""
    cfg = bundle.cfg
    g_net, d_net = bundle.generator, bundle.discriminator
    dtype = g_net.dtype
    batch = real.shape[0]
    d_net.zero_grad()
    z = rng.standard_normal((batch, cfg.latent_dim)).astype(dtype)
    fake = g_net.forward(z)
    real_target = np.full((batch, 1), cfg.real_label, dtype=dtype)
    loss_real, grad = loss_fn(d_net.forward(real), real_target)
    d_net.backward(grad)
    loss_fake, grad = loss_fn(d_net.forward(fake), np.zeros((batch, 1), dtype=dtype))
    d_net.backward(grad)
    bundle.opt_d.step()
    return loss_real + loss_fake


def generator_step(bundle: GanBundle, batch: int, loss_fn,
                   rng: np.random.Generator) -> float:
    """One generator batch through the locked discriminator: generated
    samples labeled real (1.0). Discriminator gradients are computed as a
    byproduct but discarded, never applied."""
    cfg = bundle.cfg
    g_net, d_net = bundle.generator, bundle.discriminator
    dtype = g_net.dtype
    g_net.zero_grad()
    d_net.zero_grad()
    z = rng.standard_normal((batch, cfg.latent_dim)).astype(dtype)
    p = d_net.forward(g_net.forward(z))
    g_loss, grad = loss_fn(p, np.ones((batch, 1), dtype=dtype))
    g_net.backward(d_net.backward(grad))
    bundle.opt_g.step()
    d_net.zero_grad()
    return g_loss


def checkpoint_name(class_label: ClassLabel, stage: int, epoch: int) -> str:
    return f"gen_{class_label.name.lower()}_stage{stage}_epoch{epoch:04d}.ckpt"


def save_checkpoint(path, bundle: GanBundle, norm_const: float,
                    dt_record: float = 0.0, include_discriminator: bool = False) -> None:
    meta = {"class_label": int(bundle.class_label), "stage": bundle.stage,
            "epoch": bundle.epoch, "latent_dim": bundle.cfg.latent_dim,
            "trace_len": bundle.cfg.trace_len, "norm_const": norm_const,
            "dt_record": dt_record}
    nn.save_network(path, bundle.generator, meta)
    if include_discriminator:
        nn.save_network(str(path) + ".disc", bundle.discriminator, meta)


def train_stage(bundle: GanBundle, traces: np.ndarray, stage: int,
                rng: np.random.Generator, ckpt_dir=None, norm_const: float = 1.0,
                dt_record: float = 0.0, progress=None) -> TrainResult:
    """Run one training stage over normalized traces of shape (n, trace_len).

    Returns the per-epoch loss history and any checkpoint paths written
    (every ``checkpoint_interval`` epochs when ``ckpt_dir`` is given).
    Fresh Adam state is created for the stage's learning rate.
    """
    cfg = bundle.cfg
    stage_cfg = cfg.stage(stage)
    if traces.ndim != 2 or traces.shape[1] != cfg.trace_len:
        raise ValidationError(f"traces must be (n, {cfg.trace_len}), got {traces.shape}")
    if np.abs(traces).max() > 1.0 + 1e-6:
        raise ValidationError("traces must be normalized to [-1, 1] before training")
    loss_fn = nn.mse_loss if stage_cfg.loss == "mse" else nn.bce_loss
    hp = nn.AdamParams(stage_cfg.alpha, cfg.beta1, cfg.beta2, cfg.epsilon)
    bundle.opt_g = nn.Adam(bundle.generator.params(), hp)
    bundle.opt_d = nn.Adam(bundle.discriminator.params(), hp)
    bundle.stage = stage

    dtype = bundle.generator.dtype
    batch = cfg.batch_size
    n_batches = traces.shape[0] // batch
    if n_batches < 1:
        raise ValidationError(f"need at least {batch} traces, got {traces.shape[0]}")

    result = TrainResult()
    if ckpt_dir is not None:
        ckpt_dir = Path(ckpt_dir)
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    for epoch in range(1, stage_cfg.epochs + 1):
        order = rng.permutation(traces.shape[0])
        d_sum = g_sum = 0.0
        for b in range(n_batches):
            rows = order[b * batch:(b + 1) * batch]
            real = traces[rows].astype(dtype, copy=True)[:, None, :]
            d_loss = discriminator_step(bundle, real, loss_fn, rng)
            g_loss = generator_step(bundle, batch, loss_fn, rng)
            if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
                raise TrainingDivergedError("loss went non-finite", stage, epoch, b)
            d_sum += d_loss
            g_sum += g_loss
        stats = EpochStats(epoch, d_sum / n_batches, g_sum / n_batches)
        result.history.append(stats)
        bundle.epoch = epoch
        if progress is not None:
            progress(stats)
        last = epoch == stage_cfg.epochs
        if ckpt_dir is not None and (epoch % cfg.checkpoint_interval == 0 or last):
            path = ckpt_dir / checkpoint_name(bundle.class_label, stage, epoch)
            save_checkpoint(path, bundle, norm_const, dt_record)
            result.checkpoint_paths.append(path)
    return result


def generate_samples(generator: nn.Network, n: int, rng: np.random.Generator,
                     latent_dim: int | None = None, batch: int = 128) -> np.ndarray:
    """Draw n traces from the generator; rows are normalized to tanh range."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if latent_dim is None:
        latent_dim = generator.layers[0].n_in
    out = []
    for start in range(0, n, batch):
        count = min(batch, n - start)
        z = rng.standard_normal((count, latent_dim)).astype(generator.dtype)
        out.append(generator.forward(z)[:, 0, :].astype(np.float64))
    return np.concatenate(out, axis=0)
