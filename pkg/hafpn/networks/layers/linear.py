from typing import NamedTuple

import numpy as np

from hafpn.core.tensor import ShapeError, Tensor, check_finite, matmul
from hafpn.networks.layers.params import LinearParams

__all__ = ["LinearCache", "linear", "linear_backward", "linear_forward"]


class LinearCache(NamedTuple):
    x: Tensor
    params: LinearParams


def linear_forward(x: Tensor, p: LinearParams) -> tuple[Tensor, LinearCache]:
    """``y = x W^T + b`` over the last axis.

    :param Tensor x: (..., in_features)
    :param LinearParams p: weights (out_features, in_features)
    :return tuple[Tensor, LinearCache]: (..., out_features) and cache
    """
    if x.ndim < 1 or x.shape[-1] != p.in_features:
        raise ShapeError(
            f"linear expects last extent {p.in_features}, got input {x.shape}."
        )
    check_finite(x, "linear input")
    flat = x.reshape(-1, p.in_features)
    y = matmul(flat, p.weight.T)
    if p.bias is not None:
        y += p.bias
    return y.reshape(*x.shape[:-1], p.out_features), LinearCache(x, p)


def linear_backward(dy: Tensor, cache: LinearCache) -> tuple[Tensor, LinearParams]:
    x, p = cache
    dy_flat = dy.reshape(-1, p.out_features)
    x_flat = x.reshape(-1, p.in_features)
    dx = np.matmul(dy_flat, p.weight).reshape(x.shape)
    grads = LinearParams(
        weight=np.matmul(dy_flat.T, x_flat),
        bias=dy_flat.sum(axis=0) if p.bias is not None else None,
    )
    return dx, grads


def linear(x: Tensor, p: LinearParams) -> Tensor:
    return linear_forward(x, p)[0]
