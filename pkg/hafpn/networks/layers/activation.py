"""Elementwise activations. Each ``*_forward`` returns ``(y, cache)`` and each
``*_backward(dy, cache)`` returns ``dx``."""

import numpy as np

from hafpn.core.tensor import Tensor, check_finite

__all__ = [
    "hard_sigmoid",
    "hard_sigmoid_backward",
    "hard_sigmoid_forward",
    "sigmoid",
    "sigmoid_backward",
    "sigmoid_forward",
    "silu",
    "silu_backward",
    "silu_forward",
    "tanh",
    "tanh_backward",
    "tanh_forward",
]


def sigmoid(x: Tensor) -> Tensor:
    check_finite(x, "sigmoid input")
    # tanh form does not overflow for large |x|
    return 0.5 * (1 + np.tanh(0.5 * x))


def sigmoid_forward(x: Tensor) -> tuple[Tensor, Tensor]:
    y = sigmoid(x)
    return y, y


def sigmoid_backward(dy: Tensor, y: Tensor) -> Tensor:
    return dy * y * (1 - y)


def silu(x: Tensor) -> Tensor:
    return x * sigmoid(x)


def silu_forward(x: Tensor) -> tuple[Tensor, tuple[Tensor, Tensor]]:
    s = sigmoid(x)
    return x * s, (x, s)


def silu_backward(dy: Tensor, cache: tuple[Tensor, Tensor]) -> Tensor:
    x, s = cache
    return dy * (s + x * s * (1 - s))


def tanh(x: Tensor) -> Tensor:
    check_finite(x, "tanh input")
    return np.tanh(x)


def tanh_forward(x: Tensor) -> tuple[Tensor, Tensor]:
    y = tanh(x)
    return y, y


def tanh_backward(dy: Tensor, y: Tensor) -> Tensor:
    return dy * (1 - y * y)


def hard_sigmoid(x: Tensor) -> Tensor:
    """``clamp((x + 3) / 6, 0, 1)``, piecewise linear."""
    check_finite(x, "hard_sigmoid input")
    return np.clip((x + 3) / 6, 0, 1)


def hard_sigmoid_forward(x: Tensor) -> tuple[Tensor, Tensor]:
    return hard_sigmoid(x), x


def hard_sigmoid_backward(dy: Tensor, x: Tensor) -> Tensor:
    inside = (x > -3) & (x < 3)
    return np.where(inside, dy / 6, 0).astype(dy.dtype, copy=False)
