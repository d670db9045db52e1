import numpy as np

from hafpn.core.tensor import ShapeError, Tensor

__all__ = [
    "avg_pool_2x",
    "avg_pool_2x_backward",
    "global_avg_pool_h",
    "global_avg_pool_h_backward",
    "global_avg_pool_w",
    "global_avg_pool_w_backward",
    "upsample_nearest_2x",
    "upsample_nearest_2x_backward",
]


def _require_4d(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise ShapeError(f"{op} expects a 4-D (N, C, H, W) tensor, got {x.shape}.")


def global_avg_pool_h(x: Tensor) -> Tensor:
    """Average over height: (N, C, H, W) -> (N, C, 1, W)."""
    _require_4d(x, "global_avg_pool_h")
    return x.mean(axis=2, keepdims=True)


def global_avg_pool_h_backward(dy: Tensor, height: int) -> Tensor:
    return np.repeat(dy / height, height, axis=2)


def global_avg_pool_w(x: Tensor) -> Tensor:
    """Average over width: (N, C, H, W) -> (N, C, H, 1)."""
    _require_4d(x, "global_avg_pool_w")
    return x.mean(axis=3, keepdims=True)


def global_avg_pool_w_backward(dy: Tensor, width: int) -> Tensor:
    return np.repeat(dy / width, width, axis=3)


def upsample_nearest_2x(x: Tensor) -> Tensor:
    """Replicate every pixel into a 2x2 block."""
    _require_4d(x, "upsample_nearest_2x")
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def upsample_nearest_2x_backward(dy: Tensor) -> Tensor:
    n, c, h, w = dy.shape
    return dy.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def avg_pool_2x(x: Tensor) -> Tensor:
    """Mean over non-overlapping 2x2 blocks, the exact inverse of
    :py:func:`upsample_nearest_2x`."""
    _require_4d(x, "avg_pool_2x")
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"avg_pool_2x needs even spatial extents, got {x.shape}.")
    top = x[:, :, 0::2, 0::2] + x[:, :, 0::2, 1::2]
    bottom = x[:, :, 1::2, 0::2] + x[:, :, 1::2, 1::2]
    return (top + bottom) * 0.25


def avg_pool_2x_backward(dy: Tensor) -> Tensor:
    return upsample_nearest_2x(dy * 0.25)
