import numpy as np
import pytest
import torch
import torch.nn.functional as F
from hypothesis import given, settings
from hypothesis import strategies as st

from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import NonFiniteError, ShapeError
from hafpn.networks.layers import (
    Conv2dParams,
    LayerNormParams,
    LinearParams,
    MlpParams,
    avg_pool_2x,
    conv2d,
    conv2d_backward,
    conv2d_forward,
    dwconv3x3,
    global_avg_pool_h,
    global_avg_pool_w,
    hard_sigmoid,
    init_conv2d,
    init_dwconv3x3,
    init_layer_norm,
    init_linear,
    init_mlp,
    layer_norm_channels,
    linear,
    mlp,
    sigmoid,
    silu,
    tanh,
    upsample_nearest_2x,
    zero_weights,
)
from hafpn.networks.layers.conv import conv_output_size


def _t(x: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.array(x))


@pytest.fixture(scope="function")
def features() -> np.ndarray:
    return rand_uniform((2, 4, 6, 6), Rng(11), -1, 1, precision="double")


@pytest.mark.parametrize(
    "kernel_size,stride,padding,groups",
    [(1, 1, 0, 1), (3, 1, 1, 1), (3, 2, 1, 1), (3, 1, 1, 2), (3, 1, 1, 4)],
)
def test_conv2d_matches_torch(features, kernel_size, stride, padding, groups):
    p = init_conv2d(
        Rng(0), 4, 8, kernel_size, stride, padding, groups, precision="double"
    )
    expected = F.conv2d(
        _t(features), _t(p.weight), _t(p.bias), stride, padding, groups=groups
    )
    np.testing.assert_allclose(conv2d(features, p), expected.numpy(), atol=1e-12)


def test_conv2d_backward_matches_autograd(features):
    p = init_conv2d(Rng(0), 4, 6, 3, 2, 1, precision="double")
    x = _t(features).requires_grad_()
    w = _t(p.weight).requires_grad_()
    b = _t(p.bias).requires_grad_()
    y = F.conv2d(x, w, b, 2, 1)
    dy = torch.from_numpy(rand_uniform(y.shape, Rng(5), -1, 1, precision="double"))
    y.backward(dy)
    _, cache = conv2d_forward(features, p)
    dx, grads = conv2d_backward(dy.numpy(), cache)
    np.testing.assert_allclose(dx, x.grad.numpy(), atol=1e-12)
    np.testing.assert_allclose(grads.weight, w.grad.numpy(), atol=1e-12)
    np.testing.assert_allclose(grads.bias, b.grad.numpy(), atol=1e-12)


def test_conv2d_shape_errors(features):
    with pytest.raises(ShapeError):
        conv2d(features, init_conv2d(Rng(0), 3, 4, precision="double"))
    with pytest.raises(ShapeError):
        conv2d(features, init_conv2d(Rng(0), 4, 4, 9, precision="double"))
    with pytest.raises(ShapeError):
        init_conv2d(Rng(0), 4, 4, groups=3)


def test_conv2d_rejects_non_finite(features):
    bad = features.copy()
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(NonFiniteError):
        conv2d(bad, init_conv2d(Rng(0), 4, 4, precision="double"))


def test_dwconv3x3_matches_torch(features):
    p = init_dwconv3x3(Rng(1), 4, "double")
    expected = F.conv2d(_t(features), _t(p.weight), _t(p.bias), padding=1, groups=4)
    np.testing.assert_allclose(dwconv3x3(features, p), expected.numpy(), atol=1e-12)


def test_linear_matches_torch():
    x = rand_uniform((3, 5, 4), Rng(2), -1, 1, precision="double")
    p = init_linear(Rng(3), 4, 7, precision="double")
    expected = F.linear(_t(x), _t(p.weight), _t(p.bias))
    np.testing.assert_allclose(linear(x, p), expected.numpy(), atol=1e-12)


def test_layer_norm_matches_torch(features):
    p = LayerNormParams(
        gamma=rand_uniform((4,), Rng(4), 0.5, 1.5, precision="double"),
        beta=rand_uniform((4,), Rng(5), -0.5, 0.5, precision="double"),
    )
    channels_last = _t(features).permute(0, 2, 3, 1)
    expected = F.layer_norm(channels_last, (4,), _t(p.gamma), _t(p.beta), p.eps)
    np.testing.assert_allclose(
        layer_norm_channels(features, p),
        expected.permute(0, 3, 1, 2).numpy(),
        atol=1e-12,
    )


def test_layer_norm_normalizes_each_site(features):
    y = layer_norm_channels(features, init_layer_norm(4, 1e-12, "double"))
    np.testing.assert_allclose(y.mean(axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=1), 1, atol=1e-8)


def test_mlp_matches_torch():
    x = rand_uniform((2, 9, 4), Rng(6), -1, 1, precision="double")
    p = init_mlp(Rng(7), 4, 2.0, "double")
    hidden = F.silu(F.linear(_t(x), _t(p.expand.weight), _t(p.expand.bias)))
    expected = F.linear(hidden, _t(p.project.weight), _t(p.project.bias))
    np.testing.assert_allclose(mlp(x, p), expected.numpy(), atol=1e-12)


@pytest.mark.parametrize(
    "ours,theirs",
    [
        (sigmoid, torch.sigmoid),
        (silu, F.silu),
        (tanh, torch.tanh),
        (hard_sigmoid, F.hardsigmoid),
    ],
)
def test_activations_match_torch(ours, theirs):
    x = np.linspace(-8, 8, 161)
    np.testing.assert_allclose(ours(x), theirs(_t(x)).numpy(), atol=1e-12)


def test_sigmoid_saturates_without_overflow():
    y = sigmoid(np.array([-1000.0, 1000.0]))
    np.testing.assert_array_equal(y, [0.0, 1.0])


def test_directional_pooling(features):
    assert global_avg_pool_h(features).shape == (2, 4, 1, 6)
    assert global_avg_pool_w(features).shape == (2, 4, 6, 1)
    np.testing.assert_allclose(
        global_avg_pool_h(features), features.mean(axis=2, keepdims=True)
    )


def test_upsample_and_pool(features):
    up = upsample_nearest_2x(features)
    expected = F.interpolate(_t(features), scale_factor=2, mode="nearest")
    np.testing.assert_array_equal(up, expected.numpy())
    np.testing.assert_allclose(avg_pool_2x(up), features, atol=1e-15)
    np.testing.assert_allclose(
        avg_pool_2x(features), F.avg_pool2d(_t(features), 2).numpy(), atol=1e-15
    )


def test_avg_pool_needs_even_extents():
    with pytest.raises(ShapeError):
        avg_pool_2x(np.zeros((1, 1, 3, 4)))


def test_zero_weights_keeps_norm():
    p = init_layer_norm(4)
    assert zero_weights(p).gamma.sum() == 4
    conv = zero_weights(init_conv2d(Rng(0), 4, 4, 3, padding=1))
    assert not conv.weight.any() and not conv.bias.any()


def test_conv2d_hand_examples():
    x = np.ones((1, 1, 3, 3))
    identity = Conv2dParams(weight=np.ones((1, 1, 1, 1)))
    np.testing.assert_array_equal(conv2d(x, identity), x)
    box = Conv2dParams(weight=np.ones((1, 1, 3, 3)), padding=1)
    np.testing.assert_array_equal(
        conv2d(x, box)[0, 0], [[4.0, 6.0, 4.0], [6.0, 9.0, 6.0], [4.0, 6.0, 4.0]]
    )


def test_dwconv3x3_hand_examples(features):
    center = np.zeros((4, 1, 3, 3))
    center[:, :, 1, 1] = 1.0
    p = Conv2dParams(weight=center, bias=np.zeros(4), padding=1, groups=4)
    np.testing.assert_array_equal(dwconv3x3(features, p), features)
    zeroed = zero_weights(p)
    assert not dwconv3x3(features, zeroed).any()


def test_linear_hand_examples():
    x = rand_uniform((2, 3), Rng(8), -1, 1, precision="double")
    np.testing.assert_array_equal(linear(x, LinearParams(weight=np.eye(3))), x)
    b = np.array([0.5, -1.0])
    constant = linear(x, LinearParams(weight=np.zeros((2, 3)), bias=b))
    np.testing.assert_array_equal(constant, np.tile(b, (2, 1)))


def test_layer_norm_of_constant_is_zero():
    p = init_layer_norm(4, 1e-5, "double")
    y = layer_norm_channels(np.full((1, 4, 2, 2), 3.0), p)
    np.testing.assert_array_equal(y, 0.0)


def test_activation_values():
    zero = np.zeros(1)
    assert sigmoid(zero)[0] == 0.5
    assert silu(zero)[0] == 0.0
    assert tanh(zero)[0] == 0.0
    assert hard_sigmoid(zero)[0] == 0.5
    np.testing.assert_array_equal(hard_sigmoid(np.array([3.0, -3.0])), [1.0, 0.0])


def test_pool_and_upsample_hand_examples():
    rows = np.broadcast_to(np.arange(4.0)[:, None], (4, 5)).reshape(1, 1, 4, 5)
    np.testing.assert_array_equal(global_avg_pool_h(rows), np.full((1, 1, 1, 5), 1.5))
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    np.testing.assert_array_equal(
        upsample_nearest_2x(x)[0, 0],
        [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]],
    )


def test_mlp_with_zero_weights_returns_output_bias():
    p = zero_weights(init_mlp(Rng(9), 3, 2.0, "double"))
    b2 = np.array([1.0, -2.0, 0.25])
    p = MlpParams(p.expand, LinearParams(p.project.weight, b2))
    x = rand_uniform((2, 5, 3), Rng(10), -1, 1, precision="double")
    np.testing.assert_array_equal(mlp(x, p), np.broadcast_to(b2, (2, 5, 3)))


def test_hard_sigmoid_is_exact_clamp():
    x = rand_uniform((257,), Rng(12), -5, 5, precision="double")
    np.testing.assert_array_equal(hard_sigmoid(x), np.clip((x + 3) / 6, 0, 1))


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 2),
    st.sampled_from([1, 2, 4]),
    st.integers(1, 3),
    st.sampled_from([1, 3]),
    st.integers(1, 2),
    st.integers(0, 1),
    st.integers(3, 9),
    st.integers(3, 9),
)
def test_conv2d_output_shape(n, groups, width, kernel, stride, padding, h, w):
    channels = groups * width
    p = init_conv2d(Rng(0), channels, 2 * groups, kernel, stride, padding, groups)
    y = conv2d(np.zeros((n, channels, h, w), dtype=np.float32), p)
    assert y.shape == (
        n,
        2 * groups,
        conv_output_size(h, kernel, stride, padding),
        conv_output_size(w, kernel, stride, padding),
    )


def _conv2d_loop(x: np.ndarray, p: Conv2dParams) -> np.ndarray:
    """Accumulate over (input channel, kernel row, kernel column) in order."""
    n, c, h, w = x.shape
    kh, kw = p.kernel_size
    s, pad = p.stride, p.padding
    out_h = conv_output_size(h, kh, s, pad)
    out_w = conv_output_size(w, kw, s, pad)
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    in_per_group = c // p.groups
    out_per_group = p.out_channels // p.groups
    y = np.zeros((n, p.out_channels, out_h, out_w), dtype=x.dtype)
    for o in range(p.out_channels):
        first = o // out_per_group * in_per_group
        for ci in range(in_per_group):
            for ky in range(kh):
                for kx in range(kw):
                    rows = slice(ky, ky + s * (out_h - 1) + 1, s)
                    cols = slice(kx, kx + s * (out_w - 1) + 1, s)
                    patch = padded[:, first + ci, rows, cols]
                    y[:, o] += patch * p.weight[o, ci, ky, kx]
        y[:, o] += p.bias[o]
    return y


@pytest.mark.parametrize(
    "stride,padding,groups", [(1, 1, 1), (2, 1, 1), (1, 0, 2), (1, 1, 4)]
)
def test_conv2d_equals_loop_oracle_bitwise(stride, padding, groups):
    x = rand_uniform((2, 4, 7, 6), Rng(13), -1, 1)
    p = init_conv2d(Rng(14), 4, 8, 3, stride, padding, groups)
    np.testing.assert_array_equal(conv2d(x, p), _conv2d_loop(x, p))


def test_dwconv3x3_equals_loop_oracle_bitwise():
    x = rand_uniform((1, 4, 5, 5), Rng(15), -1, 1)
    p = init_dwconv3x3(Rng(16), 4)
    np.testing.assert_array_equal(dwconv3x3(x, p), _conv2d_loop(x, p))
