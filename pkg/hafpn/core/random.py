from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hafpn.core.tensor import Precision, Tensor, _check_shape, _frozen, dtype_of

__all__ = ["Rng", "rand_uniform"]


@dataclass
class Rng:
    """Seeded random stream.

    Backed by numpy's Philox, a counter-based generator with a 64-bit seed
    whose output stream is specified independently of the platform.
    Uniform doubles are produced with 53 random bits, so the stream for a
    given seed is reproducible everywhere numpy runs.

    :param int seed: unsigned 64-bit seed
    """

    seed: int
    _generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"Seed must be an unsigned 64-bit int, got {self.seed}.")
        self._generator = np.random.Generator(np.random.Philox(self.seed))

    def uniform(self, shape: Sequence[int]) -> np.ndarray:
        """Doubles in [0, 1)."""
        return self._generator.random(tuple(shape), dtype=np.float64)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def integers(self, low: int, high: int, size: int | None = None):
        return self._generator.integers(low, high, size=size)

    def spawn(self, key: int) -> "Rng":
        """Independent child stream, e.g. one per parameter bundle."""
        return Rng((self.seed * 0x9E3779B97F4A7C15 + key + 1) % 2**64)


def rand_uniform(
    shape: Sequence[int],
    rng: Rng,
    lo: float = 0.0,
    hi: float = 1.0,
    precision: Precision = "single",
) -> Tensor:
    """Uniform draws in [lo, hi), deterministic for a given seed."""
    if not lo < hi:
        raise ValueError(f"Uniform range needs lo < hi, got [{lo}, {hi}).")
    shape = _check_shape(shape)
    dtype = dtype_of(precision)
    values = (lo + (hi - lo) * rng.uniform(shape)).astype(dtype)
    # rounding (to single precision in particular) can land exactly on hi
    values = np.minimum(values, np.nextafter(dtype(hi), dtype(lo)))
    return _frozen(values)
