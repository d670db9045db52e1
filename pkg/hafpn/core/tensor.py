"""Dense tensors on top of numpy.

A tensor is a C-contiguous ``numpy.ndarray`` of ``float32`` (runtime) or
``float64`` (verification). Feature maps use the (N, C, H, W) layout, so index
``(n, c, h, w)`` lives at ``((n * C + c) * H + h) * W + w``.
Nothing in this module broadcasts: every binary op demands equal shapes.
"""

from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "FormatError",
    "NonFiniteError",
    "Precision",
    "ShapeError",
    "Tensor",
    "add",
    "as_precision",
    "check_finite",
    "concat",
    "concat_backward",
    "dtype_of",
    "fill",
    "matmul",
    "matmul_backward",
    "mul_elementwise",
    "ones",
    "permute",
    "permute_backward",
    "reduce_mean",
    "reduce_mean_backward",
    "reshape",
    "zeros",
    "zeros_like",
]

Tensor = NDArray[np.floating]
Precision = Literal["single", "double"]

_DTYPES: dict[str, type[np.floating]] = {"single": np.float32, "double": np.float64}


class ShapeError(ValueError):
    """Operands violate a shape contract."""


class NonFiniteError(ValueError):
    """A tensor holds NaN or infinite values."""


class FormatError(ValueError):
    """A file does not follow its format; the message names file and line."""


def dtype_of(precision: Precision) -> type[np.floating]:
    try:
        return _DTYPES[precision]
    except KeyError:
        raise ValueError(
            f"Unknown precision '{precision}', expected one of {list(_DTYPES)}."
        ) from None


def _frozen(array: NDArray) -> Tensor:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ShapeError(f"All extents must be >= 1, got shape {shape}.")
    return shape


def zeros(shape: Sequence[int], precision: Precision = "single") -> Tensor:
    return _frozen(np.zeros(_check_shape(shape), dtype=dtype_of(precision)))


def ones(shape: Sequence[int], precision: Precision = "single") -> Tensor:
    return _frozen(np.ones(_check_shape(shape), dtype=dtype_of(precision)))


def fill(shape: Sequence[int], value: float, precision: Precision = "single") -> Tensor:
    if not np.isfinite(value):
        raise NonFiniteError(f"Fill value must be finite, got {value}.")
    return _frozen(np.full(_check_shape(shape), value, dtype=dtype_of(precision)))


def zeros_like(x: Tensor) -> Tensor:
    return _frozen(np.zeros_like(x))


def as_precision(x: Tensor, precision: Precision) -> Tensor:
    """Explicit precision conversion, the only place precision may change."""
    return _frozen(np.asarray(x, dtype=dtype_of(precision)))


def check_finite(x: Tensor, name: str = "tensor") -> Tensor:
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise NonFiniteError(f"{name} holds {bad} non-finite value(s).")
    return x


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ.")
    if a.dtype != b.dtype:
        raise TypeError(f"{op}: dtypes {a.dtype} and {b.dtype} differ.")


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return a + b


def mul_elementwise(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "mul_elementwise")
    return a * b


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, batched over equal leading axes.

    Products are accumulated in ascending ``k`` starting from zero, so the
    result is bitwise identical to a naive triple loop and independent of
    any BLAS threading.

    :param Tensor a: (..., M, K)
    :param Tensor b: (..., K, N)
    :return Tensor: (..., M, N)
    """
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2, got {a.shape} and {b.shape}.")
    if a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(
            f"matmul batch extents differ: {a.shape[:-2]} vs {b.shape[:-2]}."
        )
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}.")
    if a.dtype != b.dtype:
        raise TypeError(f"matmul dtypes differ: {a.dtype} and {b.dtype}.")
    out = np.zeros((*a.shape[:-1], b.shape[-1]), dtype=a.dtype)
    for k in range(a.shape[-1]):
        out += a[..., :, k : k + 1] * b[..., k : k + 1, :]
    return out


def matmul_backward(dy: Tensor, a: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    da = np.matmul(dy, np.swapaxes(b, -1, -2))
    db = np.matmul(np.swapaxes(a, -1, -2), dy)
    return da, db


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ValueError("concat needs at least one tensor.")
    first = tensors[0]
    axis = axis % first.ndim
    for t in tensors[1:]:
        if t.ndim != first.ndim or any(
            t.shape[i] != first.shape[i] for i in range(first.ndim) if i != axis
        ):
            raise ShapeError(
                f"concat along axis {axis}: {first.shape} and {t.shape} "
                "differ off the concat axis."
            )
    return np.concatenate(tensors, axis=axis)


def concat_backward(dy: Tensor, sizes: Sequence[int], axis: int) -> list[Tensor]:
    splits = np.cumsum(sizes)[:-1]
    return np.split(dy, splits, axis=axis)


def permute(x: Tensor, order: Sequence[int]) -> Tensor:
    if sorted(order) != list(range(x.ndim)):
        raise ShapeError(f"{tuple(order)} is not a permutation of rank {x.ndim}.")
    return np.ascontiguousarray(np.transpose(x, order))


def permute_backward(dy: Tensor, order: Sequence[int]) -> Tensor:
    return np.ascontiguousarray(np.transpose(dy, np.argsort(order)))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise ShapeError(f"Cannot reshape {x.shape} ({x.size} values) to {shape}.")
    return np.reshape(x, shape)


def reduce_mean(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(range(x.ndim)) if axes is None else tuple(a % x.ndim for a in axes)
    return np.asarray(np.mean(x, axis=axes, keepdims=True), dtype=x.dtype)


def reduce_mean_backward(
    dy: Tensor, shape: Sequence[int], axes: Sequence[int] | None = None
) -> Tensor:
    ndim = len(shape)
    axes = tuple(range(ndim)) if axes is None else tuple(a % ndim for a in axes)
    count = int(np.prod([shape[a] for a in axes]))
    return np.broadcast_to(dy / count, tuple(shape)).copy()
