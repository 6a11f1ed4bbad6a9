"""Minimal neural-network engine with hand-written backpropagation.

Implements exactly the layer set the trace generator needs: 1D convolution
(im2col + GEMM), dense, nearest-neighbor upsampling, LeakyReLU/Tanh/Sigmoid,
reshape, MSE and binary cross-entropy losses, bias-corrected Adam, and a
central-finite-difference gradient checker.

Array conventions are batch-first: dense layers see (batch, features),
convolutional layers (batch, channels, length). Networks are built in
float32 for training or float64 for gradient checking; forward passes are
pure, so identical weights and inputs give bit-identical outputs.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import DimensionError, FormatError, ValidationError

ALLOWED_STRIDES = (1, 2, 4)
BCE_CLAMP = 1e-7


class Tensor:
    """Parameter array plus an accumulated gradient of the same shape."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray):
        self.data = np.ascontiguousarray(data)
        self.grad = np.zeros_like(self.data)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def glorot_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator,
                   dtype=np.float32) -> np.ndarray:
    """Uniform on +-sqrt(6 / (fan_in + fan_out)); drawn in float64, then cast."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

class Layer:
    kind = "layer"

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Tensor]:
        return []

    def reset_parameters(self, rng: np.random.Generator) -> None:
        pass

    def config(self) -> dict:
        return {}


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None,
                 dtype=np.float32):
        self.n_in, self.n_out = n_in, n_out
        self.dtype = np.dtype(dtype)
        self.weight = Tensor(np.zeros((n_in, n_out), self.dtype))
        self.bias = Tensor(np.zeros(n_out, self.dtype))
        if rng is not None:
            self.reset_parameters(rng)
        self._x: np.ndarray | None = None

    def reset_parameters(self, rng):
        self.weight.data[...] = glorot_uniform((self.n_in, self.n_out),
                                               self.n_in, self.n_out, rng, self.dtype)
        self.bias.data[...] = 0.0

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise DimensionError(f"dense expects (batch, {self.n_in}), got {x.shape}")
        self._x = x
        return x @ self.weight.data + self.bias.data

    def backward(self, grad_out):
        self.weight.grad += self._x.T @ grad_out
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.data.T

    def params(self):
        return [self.weight, self.bias]

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}


class Conv1D(Layer):
    """Cross-correlation along the last axis.

    Padding "same" preserves length at stride 1 and gives ceil(L / stride)
    otherwise (zero padding, split left-short); "valid" applies none.
    """

    kind = "conv1d"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 25,
                 stride: int = 1, padding: str = "same",
                 rng: np.random.Generator | None = None, dtype=np.float32):
        if stride not in ALLOWED_STRIDES:
            raise ValidationError(f"stride must be one of {ALLOWED_STRIDES}")
        if padding not in ("same", "valid"):
            raise ValidationError("padding must be 'same' or 'valid'")
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel_size, self.stride, self.padding = kernel_size, stride, padding
        self.dtype = np.dtype(dtype)
        self.weight = Tensor(np.zeros((out_channels, in_channels, kernel_size), self.dtype))
        self.bias = Tensor(np.zeros(out_channels, self.dtype))
        if rng is not None:
            self.reset_parameters(rng)
        self._cols: np.ndarray | None = None
        self._meta: tuple | None = None

    def reset_parameters(self, rng):
        fan_in = self.in_channels * self.kernel_size
        fan_out = self.out_channels * self.kernel_size
        self.weight.data[...] = glorot_uniform(self.weight.shape, fan_in, fan_out,
                                               rng, self.dtype)
        self.bias.data[...] = 0.0

    def _pads(self, length: int) -> tuple[int, int]:
        if self.padding == "valid":
            return 0, 0
        out_len = -(-length // self.stride)
        total = max((out_len - 1) * self.stride + self.kernel_size - length, 0)
        return total // 2, total - total // 2

    def output_length(self, length: int) -> int:
        pl, pr = self._pads(length)
        return (length + pl + pr - self.kernel_size) // self.stride + 1

    def forward(self, x):
        batch, channels, length = x.shape
        if channels != self.in_channels:
            raise DimensionError(f"conv1d expects {self.in_channels} channels, got {channels}")
        kernel, stride = self.kernel_size, self.stride
        pl, pr = self._pads(length)
        if length + pl + pr < kernel:
            raise DimensionError(f"input length {length} shorter than kernel {kernel}")
        xp = np.pad(x, ((0, 0), (0, 0), (pl, pr))) if (pl or pr) else np.ascontiguousarray(x)
        out_len = (length + pl + pr - kernel) // stride + 1
        s0, s1, s2 = xp.strides
        window = as_strided(xp, (batch, channels, kernel, out_len),
                            (s0, s1, s2, s2 * stride))
        # One big GEMM: (out_ch, C*K) @ (C*K, batch*out_len).
        cols = window.transpose(1, 2, 0, 3).reshape(channels * kernel, batch * out_len)
        w2 = self.weight.data.reshape(self.out_channels, channels * kernel)
        out = (w2 @ cols).reshape(self.out_channels, batch, out_len).transpose(1, 0, 2)
        out += self.bias.data[:, None]
        self._cols = cols
        self._meta = (batch, channels, length, pl, pr, out_len)
        return out

    def backward(self, grad_out):
        batch, channels, length, pl, pr, out_len = self._meta
        kernel, stride = self.kernel_size, self.stride
        gm = grad_out.transpose(1, 0, 2).reshape(self.out_channels, batch * out_len)
        self.weight.grad += (gm @ self._cols.T).reshape(self.weight.shape)
        self.bias.grad += grad_out.sum(axis=(0, 2))
        w2 = self.weight.data.reshape(self.out_channels, channels * kernel)
        gcols = (w2.T @ gm).reshape(channels, kernel, batch, out_len)
        gxp = np.zeros((batch, channels, length + pl + pr), dtype=grad_out.dtype)
        for k in range(kernel):
            gxp[:, :, k:k + stride * out_len:stride] += gcols[:, k].transpose(1, 0, 2)
        return gxp[:, :, pl:pl + length]

    def params(self):
        return [self.weight, self.bias]

    def config(self):
        return {"in_channels": self.in_channels, "out_channels": self.out_channels,
                "kernel_size": self.kernel_size, "stride": self.stride,
                "padding": self.padding}


class Upsample(Layer):
    """Repeat each temporal step ``factor`` times: [a, b] -> [a, a, b, b]."""

    kind = "upsample"

    def __init__(self, factor: int = 2):
        self.factor = factor

    def forward(self, x):
        self._in_len = x.shape[-1]
        return np.repeat(x, self.factor, axis=-1)

    def backward(self, grad_out):
        batch, channels, _ = grad_out.shape
        return grad_out.reshape(batch, channels, self._in_len, self.factor).sum(axis=-1)

    def config(self):
        return {"factor": self.factor}


def mean_downsample(x: np.ndarray, factor: int = 2) -> np.ndarray:
    """Average adjacent groups of ``factor`` samples; inverse of Upsample on
    repeated data."""
    length = x.shape[-1]
    if length % factor:
        raise DimensionError(f"length {length} not divisible by factor {factor}")
    return x.reshape(*x.shape[:-1], length // factor, factor).mean(axis=-1)


class LeakyReLU(Layer):
    kind = "leaky_relu"

    def __init__(self, slope: float = 0.2):
        self.slope = slope

    def forward(self, x):
        self._gate = np.where(x > 0, x.dtype.type(1.0), x.dtype.type(self.slope))
        return x * self._gate

    def backward(self, grad_out):
        return grad_out * self._gate

    def config(self):
        return {"slope": self.slope}


class Tanh(Layer):
    kind = "tanh"

    def forward(self, x):
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad_out):
        return grad_out * (1.0 - self._y * self._y)


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, grad_out):
        return grad_out * self._y * (1.0 - self._y)


class Reshape(Layer):
    """Reshape the per-sample dimensions; the batch axis is untouched."""

    kind = "reshape"

    def __init__(self, shape: tuple[int, ...]):
        self.shape = tuple(shape)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], *self.shape)

    def backward(self, grad_out):
        return grad_out.reshape(self._in_shape)

    def config(self):
        return {"shape": list(self.shape)}


_LAYER_KINDS = {cls.kind: cls for cls in
                (Dense, Conv1D, Upsample, LeakyReLU, Tanh, Sigmoid, Reshape)}


class Network:
    """A plain sequential stack of layers."""

    def __init__(self, layers: list[Layer], dtype=np.float32):
        self.layers = list(layers)
        self.dtype = np.dtype(dtype)

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def params(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params()]

    def zero_grad(self) -> None:
        for p in self.params():
            p.zero_grad()

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params())

    def config(self) -> list[dict]:
        return [{"kind": layer.kind, **layer.config()} for layer in self.layers]


def network_from_config(layer_configs: list[dict], dtype) -> Network:
    layers = []
    for spec in layer_configs:
        spec = dict(spec)
        kind = spec.pop("kind")
        if kind not in _LAYER_KINDS:
            raise FormatError(f"unknown layer kind {kind!r}")
        cls = _LAYER_KINDS[kind]
        if kind in ("dense", "conv1d"):
            layers.append(cls(**spec, dtype=dtype))
        elif kind == "reshape":
            layers.append(cls(tuple(spec["shape"])))
        else:
            layers.append(cls(**spec))
    return Network(layers, dtype=dtype)


# ---------------------------------------------------------------------------
# Losses: each returns (scalar loss, gradient w.r.t. prediction)
# ---------------------------------------------------------------------------

def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    if pred.shape != target.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


def bce_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross-entropy, predictions clamped to [1e-7, 1 - 1e-7].

    The gradient is zero where the clamp binds, matching the implemented
    (clamped) function exactly.
    """
    if pred.shape != target.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {target.shape}")
    clamped = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    loss = float(-np.mean(target * np.log(clamped) + (1.0 - target) * np.log1p(-clamped)))
    grad = (-target / clamped + (1.0 - target) / (1.0 - clamped)) / pred.size
    grad[(pred < BCE_CLAMP) | (pred > 1.0 - BCE_CLAMP)] = 0.0
    return loss, grad.astype(pred.dtype, copy=False)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdamParams:
    alpha: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    epsilon: float = 1e-8


class Adam:
    """Bias-corrected Adam over a fixed parameter list."""

    def __init__(self, tensors: list[Tensor], hp: AdamParams = AdamParams()):
        self.tensors = list(tensors)
        self.hp = hp
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.tensors]
        self.v = [np.zeros_like(p.data) for p in self.tensors]

    def step(self) -> None:
        hp = self.hp
        self.t += 1
        bias1 = 1.0 - hp.beta1 ** self.t
        bias2 = 1.0 - hp.beta2 ** self.t
        for p, m, v in zip(self.tensors, self.m, self.v):
            g = p.grad
            m *= hp.beta1
            m += (1.0 - hp.beta1) * g
            v *= hp.beta2
            v += (1.0 - hp.beta2) * (g * g)
            p.data -= hp.alpha * (m / bias1) / (np.sqrt(v / bias2) + hp.epsilon)

    def zero_grad(self) -> None:
        for p in self.tensors:
            p.zero_grad()


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def gradient_check(net: Network, x: np.ndarray, loss_fn, target: np.ndarray,
                   rng: np.random.Generator, coords_per_layer: int = 100,
                   h: float = 1e-5) -> float:
    """Compare backpropagated parameter gradients against central finite
    differences on a random coordinate subset; returns the max relative error.

    Relative error is |a - n| / max(1e-8, |a| + |n|). Requires a float64
    network; float32 resolution is far too coarse for h = 1e-5.
    """
    if net.dtype != np.float64:
        raise ValidationError("gradient_check requires a float64 network")

    net.zero_grad()
    _, grad = loss_fn(net.forward(x), target)
    net.backward(grad)

    worst = 0.0
    for layer in net.layers:
        for tensor in layer.params():
            idx = rng.choice(tensor.size, size=min(coords_per_layer, tensor.size),
                             replace=False)
            flat = tensor.data.reshape(-1)
            for i in idx:
                saved = flat[i]
                flat[i] = saved + h
                up, _ = loss_fn(net.forward(x), target)
                flat[i] = saved - h
                down, _ = loss_fn(net.forward(x), target)
                flat[i] = saved
                numeric = (up - down) / (2.0 * h)
                analytic = tensor.grad.reshape(-1)[i]
                err = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
                worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Checkpoint serialization: versioned, layer-ordered, shape-prefixed,
# CRC32-checksummed binary
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"RGCK"
CHECKPOINT_VERSION = 1


def save_network(path, net: Network, meta: dict | None = None) -> None:
    header = {"version": CHECKPOINT_VERSION,
              "dtype": net.dtype.name,
              "layers": net.config(),
              "meta": meta or {}}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray()
    body += struct.pack("<I", len(header_bytes))
    body += header_bytes
    for p in net.params():
        body += struct.pack("<B", p.data.ndim)
        body += struct.pack(f"<{p.data.ndim}Q", *p.data.shape)
        body += np.ascontiguousarray(p.data).astype(f"<f{net.dtype.itemsize}").tobytes()
    crc = zlib.crc32(bytes(body))
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def load_network(path) -> tuple[Network, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint file")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    body, (crc,) = blob[8:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise FormatError(f"{path}: checksum mismatch")
    (header_len,) = struct.unpack("<I", body[:4])
    header = json.loads(body[4:4 + header_len].decode("utf-8"))
    dtype = np.dtype(header["dtype"])
    net = network_from_config(header["layers"], dtype)
    offset = 4 + header_len
    for p in net.params():
        (ndim,) = struct.unpack_from("<B", body, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", body, offset)
        offset += 8 * ndim
        count = int(np.prod(shape)) if ndim else 1
        raw = np.frombuffer(body, dtype=f"<f{dtype.itemsize}", count=count, offset=offset)
        offset += count * dtype.itemsize
        if tuple(shape) != p.data.shape:
            raise FormatError(f"{path}: stored shape {shape} != expected {p.data.shape}")
        p.data[...] = raw.reshape(shape)
    if offset != len(body):
        raise FormatError(f"{path}: trailing bytes in checkpoint")
    return net, header["meta"]
