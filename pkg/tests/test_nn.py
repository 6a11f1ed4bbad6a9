import math

import numpy as np
import pytest

import radargan.nn as nn
from radargan.errors import DimensionError, FormatError, ValidationError


@pytest.fixture
def rng():
    return np.random.default_rng(99)


def f64(*layers):
    return nn.Network(list(layers), dtype=np.float64)


# ---------------------------------------------------------------------------
# Forward hand values
# ---------------------------------------------------------------------------

def test_conv_hand_computation():
    conv = nn.Conv1D(1, 1, kernel_size=2, stride=1, padding="valid", dtype=np.float64)
    conv.weight.data[...] = 1.0
    out = conv.forward(np.array([[[1.0, 2.0, 3.0]]]))
    assert np.array_equal(out, [[[3.0, 5.0]]])


def test_conv_delta_kernel_is_identity(rng):
    conv = nn.Conv1D(1, 1, 25, 1, "same", dtype=np.float64)
    conv.weight.data[0, 0, 12] = 1.0
    x = rng.standard_normal((3, 1, 70))
    assert np.array_equal(conv.forward(x), x)


def test_conv_same_padding_output_lengths():
    assert nn.Conv1D(1, 1, 25, 1, "same").output_length(8192) == 8192
    assert nn.Conv1D(1, 1, 25, 4, "same").output_length(8192) == 2048
    assert nn.Conv1D(1, 1, 25, 2, "same").output_length(32) == 16


def test_conv_rejects_unknown_stride():
    with pytest.raises(ValidationError):
        nn.Conv1D(1, 1, 25, 3)


def test_conv_channel_mismatch():
    conv = nn.Conv1D(2, 1, 5)
    with pytest.raises(DimensionError):
        conv.forward(np.zeros((1, 3, 16), np.float32))


def test_upsample_repeats_each_step():
    out = nn.Upsample(2).forward(np.array([[[1.0, 2.0]]]))
    assert np.array_equal(out, [[[1.0, 1.0, 2.0, 2.0]]])


def test_upsample_then_mean_downsample_is_identity(rng):
    x = rng.standard_normal((2, 3, 8))
    up = nn.Upsample(2).forward(x)
    assert np.allclose(nn.mean_downsample(up, 2), x, atol=1e-15)


def test_leaky_relu_negative_slope():
    layer = nn.LeakyReLU(0.2)
    out = layer.forward(np.array([-1.0, 0.5]))
    assert out[0] == pytest.approx(-0.2)
    assert out[1] == pytest.approx(0.5)


def test_forward_passes_are_pure(rng):
    net = f64(nn.Dense(6, 12, rng, np.float64), nn.LeakyReLU(0.2),
              nn.Reshape((3, 4)), nn.Conv1D(3, 2, 3, 1, "same", rng, np.float64),
              nn.Tanh())
    x = rng.standard_normal((4, 6))
    assert np.array_equal(net.forward(x), net.forward(x))


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def test_bce_hand_value():
    loss, _ = nn.bce_loss(np.array([0.5]), np.array([1.0]))
    assert loss == pytest.approx(math.log(2), rel=1e-12)


def test_bce_clamps_extremes():
    loss, grad = nn.bce_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert math.isfinite(loss)
    assert np.array_equal(grad, [0.0, 0.0])  # clamp region has zero slope


def test_mse_zero_on_match(rng):
    x = rng.standard_normal(16)
    loss, grad = nn.mse_loss(x, x.copy())
    assert loss == 0.0
    assert not np.any(grad)


def test_loss_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        nn.mse_loss(np.zeros(3), np.zeros(4))


# ---------------------------------------------------------------------------
# Gradient checks (central differences, h = 1e-5, float64)
# ---------------------------------------------------------------------------

def gradcheck(net, x, rng, loss=nn.mse_loss, target=None):
    y = net.forward(x)
    if target is None:
        target = (np.random.default_rng(5).uniform(0.1, 0.9, y.shape)
                  if loss is nn.bce_loss else
                  np.random.default_rng(5).standard_normal(y.shape))
    return nn.gradient_check(net, x, loss, target, rng)


def test_dense_gradients(rng):
    net = f64(nn.Dense(8, 4, rng, np.float64))
    assert gradcheck(net, rng.standard_normal((5, 8)), rng) < 1e-4


def test_conv_gradients_stride1(rng):
    net = f64(nn.Conv1D(3, 4, 25, 1, "same", rng, np.float64))
    assert gradcheck(net, rng.standard_normal((2, 3, 40)), rng) < 1e-4


def test_conv_gradients_strided(rng):
    net = f64(nn.Conv1D(2, 3, 25, 4, "same", rng, np.float64))
    assert gradcheck(net, rng.standard_normal((2, 2, 64)), rng) < 1e-4
    net = f64(nn.Conv1D(2, 3, 5, 2, "valid", rng, np.float64))
    assert gradcheck(net, rng.standard_normal((2, 2, 30)), rng) < 1e-4


def test_upsample_gradients(rng):
    net = f64(nn.Conv1D(2, 2, 5, 1, "same", rng, np.float64), nn.Upsample(2),
              nn.Conv1D(2, 1, 5, 1, "same", rng, np.float64))
    assert gradcheck(net, rng.standard_normal((2, 2, 16)), rng) < 1e-4


def test_activation_gradients(rng):
    net = f64(nn.Dense(8, 8, rng, np.float64), nn.LeakyReLU(0.2),
              nn.Dense(8, 4, rng, np.float64), nn.Tanh())
    assert gradcheck(net, rng.standard_normal((6, 8)), rng) < 1e-4


def test_sigmoid_bce_gradients(rng):
    net = f64(nn.Dense(8, 3, rng, np.float64), nn.Sigmoid())
    assert gradcheck(net, rng.standard_normal((6, 8)), rng, loss=nn.bce_loss) < 1e-4


def test_reshape_gradients(rng):
    net = f64(nn.Dense(8, 12, rng, np.float64), nn.Reshape((3, 4)),
              nn.Conv1D(3, 2, 3, 1, "same", rng, np.float64))
    assert gradcheck(net, rng.standard_normal((4, 8)), rng) < 1e-4


def test_gradient_check_requires_float64(rng):
    net = nn.Network([nn.Dense(4, 2, rng, np.float32)], dtype=np.float32)
    with pytest.raises(ValidationError):
        nn.gradient_check(net, np.zeros((1, 4), np.float32), nn.mse_loss,
                          np.zeros((1, 2), np.float32), rng)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

def test_adam_zero_gradient_keeps_parameters():
    p = nn.Tensor(np.array([1.0, -2.0]))
    opt = nn.Adam([p], nn.AdamParams(alpha=0.01))
    opt.step()
    assert np.array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_equals_alpha():
    p = nn.Tensor(np.array([1.0]))
    opt = nn.Adam([p], nn.AdamParams(alpha=0.001, beta1=0.5, beta2=0.9))
    p.grad[...] = 1.0
    opt.step()
    delta = 1.0 - p.data[0]
    assert abs(delta - 0.001) < 1e-6
    assert p.data[0] < 1.0


def test_adam_constant_gradient_steps_stay_at_alpha():
    # bias correction makes m_hat = v_hat = 1 for a constant unit gradient
    p = nn.Tensor(np.array([0.0]))
    opt = nn.Adam([p], nn.AdamParams(alpha=0.001, beta1=0.5, beta2=0.9))
    deltas = []
    for _ in range(3):
        before = p.data[0]
        p.grad[...] = 1.0
        opt.step()
        deltas.append(before - p.data[0])
    assert abs(deltas[0] - 0.001) < 1e-6
    assert abs(deltas[1]) <= abs(deltas[0]) * (1 + 1e-9)
    assert abs(deltas[2]) <= abs(deltas[1]) * (1 + 1e-9)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def test_glorot_scalar_bound(rng):
    vals = np.array([nn.glorot_uniform((1, 1), 1, 1, rng, np.float64)[0, 0]
                     for _ in range(500)])
    bound = math.sqrt(3.0)
    assert np.all(np.abs(vals) <= bound)
    assert np.abs(vals).max() > 0.8 * bound   # actually fills the range


def test_glorot_variance(rng):
    fan_in = fan_out = 25
    draws = nn.glorot_uniform((160, 25, 25), fan_in, fan_out, rng, np.float64)
    expected = 2.0 / (fan_in + fan_out)
    assert abs(draws.var() - expected) < 0.05 * expected


def test_glorot_deterministic():
    a = nn.glorot_uniform((4, 4), 4, 4, np.random.default_rng(3), np.float32)
    b = nn.glorot_uniform((4, 4), 4, 4, np.random.default_rng(3), np.float32)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def make_net(rng, dtype=np.float32):
    return nn.Network([nn.Dense(6, 8, rng, dtype), nn.LeakyReLU(0.2),
                       nn.Reshape((2, 4)), nn.Conv1D(2, 1, 3, 1, "same", rng, dtype),
                       nn.Tanh()], dtype=dtype)


def test_checkpoint_round_trip_bit_identical(rng, tmp_path):
    net = make_net(rng)
    path = tmp_path / "net.ckpt"
    nn.save_network(path, net, {"epoch": 3})
    loaded, meta = nn.load_network(path)
    assert meta == {"epoch": 3}
    x = rng.standard_normal((4, 6)).astype(np.float32)
    assert np.array_equal(net.forward(x), loaded.forward(x))


def test_checkpoint_truncation_detected(rng, tmp_path):
    path = tmp_path / "net.ckpt"
    nn.save_network(path, make_net(rng), {})
    blob = path.read_bytes()
    path.write_bytes(blob[:-20])
    with pytest.raises(FormatError):
        nn.load_network(path)


def test_checkpoint_corruption_detected(rng, tmp_path):
    path = tmp_path / "net.ckpt"
    nn.save_network(path, make_net(rng), {})
    blob = bytearray(path.read_bytes())
    blob[60] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        nn.load_network(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "net.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(FormatError):
        nn.load_network(path)
