"""Central finite differences as the oracle for hand-written backward passes."""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import NonFiniteError, Tensor
from hafpn.core.tree import map_tensors, named_tensors, replace_tensor

__all__ = [
    "GradCheck",
    "GradCheckResult",
    "fd_grad",
    "relative_error",
    "run_gradcheck",
]

_logger = logging.getLogger("hafpn")

_TINY = 1e-12


def fd_grad(
    f: Callable[[Tensor], float],
    x: Tensor,
    eps: float = 1e-5,
    indices: Sequence[int] | None = None,
) -> Tensor:
    """Central-difference gradient of a scalar function, in double precision.

    ``(f(x + eps * e_i) - f(x - eps * e_i)) / (2 * eps)`` for every flat
    coordinate ``i``, or only for ``indices`` (other coordinates are 0).

    :param Callable f: scalar-valued function of a tensor
    :param Tensor x: evaluation point
    :param float eps: step, must be positive
    :param Sequence[int] | None indices: flat coordinates to differentiate
    :return Tensor: float64 gradient with the shape of ``x``
    """
    if eps <= 0:
        raise ValueError(f"Finite-difference step must be positive, got {eps}.")
    base = np.array(x, dtype=np.float64)
    grad = np.zeros_like(base)
    flat_base = base.reshape(-1)
    flat_grad = grad.reshape(-1)
    coords = range(base.size) if indices is None else indices
    for i in coords:
        original = flat_base[i]
        flat_base[i] = original + eps
        f_plus = float(f(base.copy()))
        flat_base[i] = original - eps
        f_minus = float(f(base.copy()))
        flat_base[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteError(f"Function value is not finite at coordinate {i}.")
        flat_grad[i] = (f_plus - f_minus) / (2 * eps)
    return grad


def relative_error(analytic: Tensor, numeric: Tensor) -> float:
    """``max|a - n|`` scaled by the larger of the two gradients' magnitudes."""
    if analytic.shape != numeric.shape:
        raise ValueError(f"Gradient shapes differ: {analytic.shape}, {numeric.shape}.")
    if analytic.size == 0:
        return 0.0
    diff = np.max(np.abs(analytic - numeric))
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), _TINY)
    return float(diff / scale)


@dataclass(frozen=True)
class GradCheck:
    """A forward/backward pair under test.

    :param str name: op name used in reports
    :param Callable build: ``rng -> (input, params)`` in double precision
    :param Callable forward: ``(input, params) -> (output, cache)``
    :param Callable backward: ``(d_output, cache) -> (d_input, d_params)``
    :param float threshold: maximum accepted relative error
    """

    name: str
    build: Callable[[Rng], tuple[Tensor, Any]]
    forward: Callable[[Tensor, Any], tuple[Any, Any]]
    backward: Callable[[Any, Any], tuple[Tensor, Any]]
    threshold: float = 1e-5


@dataclass(frozen=True)
class GradCheckResult:
    name: str
    max_rel_error: float
    worst_tensor: str
    threshold: float
    num_seeds: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.threshold


def _flatten_output(y: Any) -> list[Tensor]:
    if isinstance(y, np.ndarray):
        return [y]
    return list(named_tensors(y).values())


def _coords(size: int, max_coords: int | None, rng: Rng) -> Sequence[int] | None:
    if max_coords is None or size <= max_coords:
        return None
    return np.sort(rng.permutation(size)[:max_coords])


def _sampled(grad: Tensor, coords: Sequence[int] | None) -> Tensor:
    if coords is None:
        return grad
    return np.asarray(grad, dtype=np.float64).reshape(-1)[coords]


def _check_one_seed(
    check: GradCheck, seed: int, eps: float, max_coords: int | None
) -> tuple[float, str]:
    rng = Rng(seed)
    x, params = check.build(rng)
    y, cache = check.forward(x, params)
    outputs = _flatten_output(y)
    proj_rng = rng.spawn(1)
    projections = [
        rand_uniform(out.shape, proj_rng, -1.0, 1.0, precision="double")
        for out in outputs
    ]

    def loss(x_: Tensor, params_: Any) -> float:
        out = _flatten_output(check.forward(x_, params_)[0])
        return float(sum(np.sum(o * p) for o, p in zip(out, projections)))

    if isinstance(y, np.ndarray):
        dy = projections[0]
    else:
        by_name = dict(zip(named_tensors(y), projections))
        dy = map_tensors(lambda name, _: by_name[name], y)
    dx, dparams = check.backward(dy, cache)

    coord_rng = rng.spawn(2)
    worst, worst_name = 0.0, ""
    coords = _coords(x.size, max_coords, coord_rng)
    numeric = fd_grad(lambda v: loss(v, params), x, eps, coords)
    err = relative_error(_sampled(dx, coords), _sampled(numeric, coords))
    if err >= worst:
        worst, worst_name = err, "input"
    analytic_params = named_tensors(dparams) if dparams is not None else {}
    for name, tensor in named_tensors(params).items():
        if name not in analytic_params:
            _logger.warning(f"{check.name}: backward returned no gradient for {name}")
            if worst < np.inf:
                worst, worst_name = np.inf, name
            continue
        coords = _coords(tensor.size, max_coords, coord_rng)
        numeric = fd_grad(
            lambda v: loss(x, replace_tensor(params, name, v)), tensor, eps, coords
        )
        err = relative_error(
            _sampled(analytic_params[name], coords), _sampled(numeric, coords)
        )
        if err >= worst:
            worst, worst_name = err, name
    return worst, worst_name


def run_gradcheck(
    check: GradCheck,
    seeds: Iterable[int] = range(20),
    eps: float = 1e-5,
    max_coords: int | None = None,
) -> GradCheckResult:
    """Compare analytic gradients with ``fd_grad`` over several seeded inputs.

    The output is contracted with a seeded random projection so every output
    coordinate contributes to the scalar under test.

    :param GradCheck check: op under test
    :param Iterable[int] seeds: one random input and parameter set per seed
    :param float eps: finite-difference step
    :param int | None max_coords: spot-check at most this many coordinates
        per tensor, defaults to None (all coordinates)
    :return GradCheckResult: worst relative error over seeds and tensors
    """
    worst, worst_name, count = 0.0, "", 0
    for seed in seeds:
        err, name = _check_one_seed(check, seed, eps, max_coords)
        _logger.debug(f"{check.name} seed={seed}: max rel. error {err:.3e} ({name})")
        count += 1
        if err >= worst:
            worst, worst_name = err, name
    return GradCheckResult(check.name, worst, worst_name, check.threshold, count)
