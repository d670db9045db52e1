from typing import NamedTuple

import numpy as np

from hafpn.core.tensor import ShapeError, Tensor, check_finite
from hafpn.networks.layers.params import LayerNormParams

__all__ = [
    "LayerNormCache",
    "layer_norm_channels",
    "layer_norm_channels_backward",
    "layer_norm_channels_forward",
]


class LayerNormCache(NamedTuple):
    normalized: Tensor
    inv_std: Tensor
    params: LayerNormParams


def _channel_view(t: Tensor) -> Tensor:
    return t.reshape(1, -1, 1, 1)


def layer_norm_channels_forward(
    x: Tensor, p: LayerNormParams
) -> tuple[Tensor, LayerNormCache]:
    """Normalize the channel vector at every (n, h, w) site.

    :param Tensor x: input (N, C, H, W)
    :param LayerNormParams p: per-channel scale and shift
    :return tuple[Tensor, LayerNormCache]: output (N, C, H, W) and cache
    """
    if x.ndim != 4 or x.shape[1] != p.channels:
        raise ShapeError(
            f"layer_norm_channels expects (N, {p.channels}, H, W), got {x.shape}."
        )
    check_finite(x, "layer_norm input")
    centered = x - x.mean(axis=1, keepdims=True)
    variance = np.mean(centered * centered, axis=1, keepdims=True)
    inv_std = 1 / np.sqrt(variance + p.eps)
    normalized = centered * inv_std
    y = normalized * _channel_view(p.gamma) + _channel_view(p.beta)
    return y.astype(x.dtype, copy=False), LayerNormCache(normalized, inv_std, p)


def layer_norm_channels_backward(
    dy: Tensor, cache: LayerNormCache
) -> tuple[Tensor, LayerNormParams]:
    normalized, inv_std, p = cache
    d_norm = dy * _channel_view(p.gamma)
    dx = inv_std * (
        d_norm
        - d_norm.mean(axis=1, keepdims=True)
        - normalized * np.mean(d_norm * normalized, axis=1, keepdims=True)
    )
    grads = LayerNormParams(
        gamma=np.sum(dy * normalized, axis=(0, 2, 3)),
        beta=np.sum(dy, axis=(0, 2, 3)),
        eps=p.eps,
    )
    return dx, grads


def layer_norm_channels(x: Tensor, p: LayerNormParams) -> Tensor:
    return layer_norm_channels_forward(x, p)[0]
