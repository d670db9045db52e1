"""2-D convolution as grouped im2col + ascending-k matmul.

Convolution is cross-correlation (the kernel is not flipped). Each output
value accumulates ``x * w`` over (input channel, kernel row, kernel column)
in ascending order starting from zero, then adds the bias.
"""

from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hafpn.core.tensor import ShapeError, Tensor, check_finite, matmul
from hafpn.networks.layers.params import Conv2dParams

__all__ = [
    "Conv2dCache",
    "conv2d",
    "conv2d_backward",
    "conv2d_forward",
    "conv_output_size",
    "dwconv3x3",
    "dwconv3x3_backward",
    "dwconv3x3_forward",
]


class Conv2dCache(NamedTuple):
    cols: Tensor
    input_shape: tuple[int, ...]
    params: Conv2dParams


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _im2col(x: Tensor, p: Conv2dParams) -> tuple[Tensor, int, int]:
    """Patches as (groups, C/groups * kH * kW, N * H' * W')."""
    n, c, h, w = x.shape
    kh, kw = p.kernel_size
    out_h = conv_output_size(h, kh, p.stride, p.padding)
    out_w = conv_output_size(w, kw, p.stride, p.padding)
    if out_h < 1 or out_w < 1:
        raise ShapeError(
            f"Kernel {kh}x{kw} with padding {p.padding} does not fit "
            f"input of spatial size {h}x{w}."
        )
    pad = p.padding
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    # (N, C, H', W', kH, kW)
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    windows = windows[:, :, :: p.stride, :: p.stride][:, :, :out_h, :out_w]
    # (C, kH, kW, N, H', W') -> (groups, C/groups * kH * kW, N * H' * W')
    cols = windows.transpose(1, 4, 5, 0, 2, 3).reshape(
        p.groups, c // p.groups * kh * kw, n * out_h * out_w
    )
    return np.ascontiguousarray(cols), out_h, out_w


def _check_input(x: Tensor, p: Conv2dParams) -> None:
    if x.ndim != 4:
        raise ShapeError(f"conv2d expects (N, C, H, W), got {x.shape}.")
    if x.shape[1] != p.in_channels:
        raise ShapeError(
            f"conv2d input has {x.shape[1]} channels, "
            f"weights expect {p.in_channels} (groups={p.groups})."
        )
    check_finite(x, "conv2d input")


def conv2d_forward(x: Tensor, p: Conv2dParams) -> tuple[Tensor, Conv2dCache]:
    """
    :param Tensor x: input (N, C, H, W)
    :param Conv2dParams p: convolution parameters
    :return tuple[Tensor, Conv2dCache]: output (N, outC, H', W') and cache
    """
    _check_input(x, p)
    n = x.shape[0]
    cols, out_h, out_w = _im2col(x, p)
    weight = p.weight.reshape(p.groups, p.out_channels // p.groups, -1)
    # (groups, outC/groups, N * H' * W')
    out = matmul(weight, cols)
    out = out.reshape(p.out_channels, n, out_h, out_w).transpose(1, 0, 2, 3)
    out = np.ascontiguousarray(out)
    if p.bias is not None:
        out += p.bias.reshape(1, -1, 1, 1)
    return out, Conv2dCache(cols, x.shape, p)


def conv2d_backward(dy: Tensor, cache: Conv2dCache) -> tuple[Tensor, Conv2dParams]:
    cols, (n, c, h, w), p = cache
    kh, kw = p.kernel_size
    out_h, out_w = dy.shape[2:]
    groups = p.groups
    # (groups, outC/groups, N * H' * W')
    dy_g = dy.transpose(1, 0, 2, 3).reshape(groups, p.out_channels // groups, -1)
    d_weight = np.matmul(dy_g, cols.transpose(0, 2, 1)).reshape(p.weight.shape)
    weight = p.weight.reshape(groups, p.out_channels // groups, -1)
    d_cols = np.matmul(weight.transpose(0, 2, 1), dy_g)
    # (C, kH, kW, N, H', W')
    d_cols = d_cols.reshape(c, kh, kw, n, out_h, out_w)
    pad, stride = p.padding, p.stride
    d_padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dy.dtype)
    for i in range(kh):
        for j in range(kw):
            d_padded[
                :,
                :,
                i : i + stride * out_h : stride,
                j : j + stride * out_w : stride,
            ] += d_cols[:, i, j].transpose(1, 0, 2, 3)
    dx = d_padded[:, :, pad : pad + h, pad : pad + w]
    d_bias = dy.sum(axis=(0, 2, 3)) if p.bias is not None else None
    grads = Conv2dParams(
        weight=d_weight,
        bias=d_bias,
        stride=p.stride,
        padding=p.padding,
        groups=p.groups,
    )
    return np.ascontiguousarray(dx), grads


def conv2d(x: Tensor, p: Conv2dParams) -> Tensor:
    return conv2d_forward(x, p)[0]


def _check_depthwise(x: Tensor, p: Conv2dParams) -> None:
    channels = x.shape[1] if x.ndim == 4 else None
    if not (
        p.kernel_size == (3, 3)
        and p.padding == 1
        and p.stride == 1
        and p.groups == p.in_channels == p.out_channels == channels
    ):
        raise ShapeError(
            "dwconv3x3 needs a 3x3, stride 1, padding 1 kernel with "
            f"groups == channels; got kernel {p.kernel_size}, padding {p.padding}, "
            f"stride {p.stride}, groups {p.groups} for input {x.shape}."
        )


def dwconv3x3_forward(x: Tensor, p: Conv2dParams) -> tuple[Tensor, Conv2dCache]:
    """Depthwise 3x3 convolution, output shape equals input shape."""
    _check_depthwise(x, p)
    return conv2d_forward(x, p)


dwconv3x3_backward = conv2d_backward


def dwconv3x3(x: Tensor, p: Conv2dParams) -> Tensor:
    return dwconv3x3_forward(x, p)[0]
