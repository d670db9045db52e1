"""Gradient-check suites per scope: ``layer``, ``attention`` and ``neck``."""

import logging
from dataclasses import replace
from typing import Callable, Literal

import pandas as pd

from hafpn.core.gradcheck import GradCheck, GradCheckResult, run_gradcheck
from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import (
    concat,
    concat_backward,
    matmul,
    matmul_backward,
    permute,
    permute_backward,
    reduce_mean,
    reduce_mean_backward,
)
from hafpn.networks.attention import (
    ca_backward,
    ca_forward,
    emsa_backward,
    emsa_forward,
    ham_backward,
    ham_forward,
    init_ca,
    init_emsa,
    init_ham,
)
from hafpn.networks.layers import activation, resample
from hafpn.networks.layers.conv import (
    conv2d_backward,
    conv2d_forward,
    dwconv3x3_backward,
    dwconv3x3_forward,
)
from hafpn.networks.layers.linear import linear_backward, linear_forward
from hafpn.networks.layers.mlp import mlp_backward, mlp_forward
from hafpn.networks.layers.norm import (
    layer_norm_channels_backward,
    layer_norm_channels_forward,
)
from hafpn.networks.layers.params import (
    LayerNormParams,
    init_conv2d,
    init_dwconv3x3,
    init_linear,
    init_mlp,
)
from hafpn.networks.pyramid import init_pyramid, pyramid_backward, pyramid_forward
from hafpn.utils.config import NeckConfig

__all__ = [
    "SCOPES",
    "Scope",
    "attention_checks",
    "layer_checks",
    "neck_checks",
    "run_suite",
    "suite",
    "tensor_checks",
]

_logger = logging.getLogger("hafpn")

Scope = Literal["layer", "attention", "neck"]
SCOPES: tuple[Scope, ...] = ("layer", "attention", "neck")

NECK_THRESHOLD = 1e-4


def _x(shape: tuple[int, ...], lo: float = -1.0, hi: float = 1.0):
    return lambda rng: rand_uniform(shape, rng.spawn(0), lo, hi, precision="double")


def _stateless(
    name: str,
    shape: tuple[int, ...],
    forward: Callable,
    backward: Callable,
    lo: float = -1.0,
    hi: float = 1.0,
) -> GradCheck:
    """Check for an op without parameters; ``backward(dy, cache)``."""
    make_x = _x(shape, lo, hi)
    return GradCheck(
        name,
        lambda rng: (make_x(rng), None),
        lambda x, _: forward(x),
        lambda dy, cache: (backward(dy, cache), None),
    )


def _layer_norm_params(rng: Rng, channels: int) -> LayerNormParams:
    return LayerNormParams(
        gamma=rand_uniform((channels,), rng, 0.5, 1.5, precision="double"),
        beta=rand_uniform((channels,), rng.spawn(1), -0.5, 0.5, precision="double"),
    )


def _matmul_forward(a, p):
    return matmul(a, p["b"]), (a, p["b"])


def _matmul_backward(dy, cache):
    da, db = matmul_backward(dy, *cache)
    return da, {"b": db}


def _concat_forward(x, p):
    return concat([x, p["other"]], axis=1), [x.shape[1], p["other"].shape[1]]


def _concat_backward(dy, sizes):
    dx, d_other = concat_backward(dy, sizes, axis=1)
    return dx, {"other": d_other}


def tensor_checks() -> list[GradCheck]:
    """The tensor algebra backward helpers."""
    shape = (2, 4, 3, 5)
    order = (0, 2, 3, 1)
    return [
        GradCheck(
            "matmul",
            lambda rng: (_x((2, 3, 4))(rng), {"b": _x((2, 4, 5))(rng.spawn(1))}),
            _matmul_forward,
            _matmul_backward,
        ),
        GradCheck(
            "concat",
            lambda rng: (_x(shape)(rng), {"other": _x((2, 2, 3, 5))(rng.spawn(1))}),
            _concat_forward,
            _concat_backward,
        ),
        _stateless(
            "permute",
            shape,
            lambda x: (permute(x, order), order),
            permute_backward,
        ),
        _stateless(
            "reduce_mean",
            shape,
            lambda x: (reduce_mean(x, (2, 3)), x.shape),
            lambda dy, input_shape: reduce_mean_backward(dy, input_shape, (2, 3)),
        ),
    ]


def layer_checks() -> list[GradCheck]:
    shape = (2, 4, 6, 6)
    return [
        *tensor_checks(),
        GradCheck(
            "conv2d",
            lambda rng: (
                _x(shape)(rng),
                init_conv2d(rng.spawn(1), 4, 6, 3, 2, 1, precision="double"),
            ),
            conv2d_forward,
            conv2d_backward,
        ),
        GradCheck(
            "conv2d_grouped",
            lambda rng: (
                _x(shape)(rng),
                init_conv2d(rng.spawn(1), 4, 4, 3, 1, 1, groups=2, precision="double"),
            ),
            conv2d_forward,
            conv2d_backward,
        ),
        GradCheck(
            "dwconv3x3",
            lambda rng: (_x(shape)(rng), init_dwconv3x3(rng.spawn(1), 4, "double")),
            dwconv3x3_forward,
            dwconv3x3_backward,
        ),
        GradCheck(
            "linear",
            lambda rng: (
                _x((3, 5, 4))(rng),
                init_linear(rng.spawn(1), 4, 7, precision="double"),
            ),
            linear_forward,
            linear_backward,
        ),
        GradCheck(
            "layer_norm_channels",
            lambda rng: (_x(shape)(rng), _layer_norm_params(rng.spawn(1), 4)),
            layer_norm_channels_forward,
            layer_norm_channels_backward,
        ),
        GradCheck(
            "mlp",
            lambda rng: (
                _x((2, 9, 4))(rng),
                init_mlp(rng.spawn(1), 4, 2.0, "double"),
            ),
            mlp_forward,
            mlp_backward,
        ),
        _stateless(
            "sigmoid", shape, activation.sigmoid_forward, activation.sigmoid_backward
        ),
        _stateless("silu", shape, activation.silu_forward, activation.silu_backward),
        _stateless("tanh", shape, activation.tanh_forward, activation.tanh_backward),
        # inputs stay clear of the kinks at +-3
        _stateless(
            "hard_sigmoid",
            shape,
            activation.hard_sigmoid_forward,
            activation.hard_sigmoid_backward,
            -2.5,
            2.5,
        ),
        _stateless(
            "global_avg_pool_h",
            shape,
            lambda x: (resample.global_avg_pool_h(x), x.shape[2]),
            resample.global_avg_pool_h_backward,
        ),
        _stateless(
            "global_avg_pool_w",
            shape,
            lambda x: (resample.global_avg_pool_w(x), x.shape[3]),
            resample.global_avg_pool_w_backward,
        ),
        _stateless(
            "upsample_nearest_2x",
            shape,
            lambda x: (resample.upsample_nearest_2x(x), None),
            lambda dy, _: resample.upsample_nearest_2x_backward(dy),
        ),
        _stateless(
            "avg_pool_2x",
            shape,
            lambda x: (resample.avg_pool_2x(x), None),
            lambda dy, _: resample.avg_pool_2x_backward(dy),
        ),
    ]


def attention_checks() -> list[GradCheck]:
    shape = (2, 8, 4, 4)
    tokens = shape[2] * shape[3]
    return [
        GradCheck(
            "emsa",
            lambda rng: (
                _x(shape)(rng),
                init_emsa(rng.spawn(1), 8, 2, tokens, "token", "double"),
            ),
            emsa_forward,
            emsa_backward,
        ),
        GradCheck(
            "emsa_head_mixing",
            lambda rng: (
                _x(shape)(rng),
                init_emsa(rng.spawn(1), 8, 2, mixing="head", precision="double"),
            ),
            emsa_forward,
            emsa_backward,
        ),
        GradCheck(
            "ca",
            lambda rng: (_x(shape)(rng), init_ca(rng.spawn(1), 8, 4, "double")),
            ca_forward,
            ca_backward,
        ),
        GradCheck(
            "ham",
            lambda rng: (
                _x(shape)(rng),
                init_ham(rng.spawn(1), 8, 2, 4, tokens=tokens, precision="double"),
            ),
            ham_forward,
            ham_backward,
        ),
    ]


_NECK_BASE = NeckConfig(channels=8, backbone_widths=(4, 8, 8), reduction=4)
_PLAIN = {"use_emsa": False, "use_ca": False}


def _neck_check(name: str, config: NeckConfig) -> GradCheck:
    size = (16, 16)

    def build(rng: Rng):
        seeded = replace(config, seed=int(rng.integers(0, 2**31)))
        return _x((1, 3, *size))(rng), init_pyramid(seeded, size, "double")

    return GradCheck(
        name, build, pyramid_forward, pyramid_backward, threshold=NECK_THRESHOLD
    )


def neck_checks() -> list[GradCheck]:
    return [
        _neck_check("fpn", replace(_NECK_BASE, variant="fpn", **_PLAIN)),
        _neck_check("pafpn", replace(_NECK_BASE, variant="pafpn", **_PLAIN)),
        _neck_check("hafpn", _NECK_BASE),
        _neck_check("hafpn_concat", replace(_NECK_BASE, merge="concat")),
        _neck_check("hafpn_pre_merge", replace(_NECK_BASE, ham_placement="pre_merge")),
    ]


def suite(scope: Scope) -> list[GradCheck]:
    builders = {
        "layer": layer_checks,
        "attention": attention_checks,
        "neck": neck_checks,
    }
    if scope not in builders:
        raise ValueError(f"Unknown gradient-check scope '{scope}', use {SCOPES}.")
    return builders[scope]()


def run_suite(
    scope: Scope,
    seed: int = 0,
    num_seeds: int | None = None,
    checks: list[GradCheck] | None = None,
) -> pd.DataFrame:
    """Run every check of a scope and tabulate one row per op.

    The neck scope spot-checks a sample of coordinates per tensor and uses
    fewer seeds by default; the other scopes check every coordinate.

    :param int seed: first seed; ``num_seeds`` consecutive seeds are used
    :param list[GradCheck] | None checks: run these instead of the scope's
        built-in suite
    :return pd.DataFrame: indexed by op name, columns ``max_rel_error``,
        ``worst_tensor``, ``threshold``, ``passed``
    """
    if checks is None:
        checks = suite(scope)
    if num_seeds is None:
        num_seeds = 2 if scope == "neck" else 20
    max_coords = 12 if scope == "neck" else None
    results: list[GradCheckResult] = []
    for check in checks:
        seeds = range(seed, seed + num_seeds)
        result = run_gradcheck(check, seeds, max_coords=max_coords)
        level = logging.DEBUG if result.passed else logging.WARNING
        _logger.log(
            level,
            f"{check.name}: {result.max_rel_error:.3e} ({result.worst_tensor})",
        )
        results.append(result)
    return pd.DataFrame(
        {
            "op": [r.name for r in results],
            "max_rel_error": [r.max_rel_error for r in results],
            "worst_tensor": [r.worst_tensor for r in results],
            "threshold": [r.threshold for r in results],
            "passed": [r.passed for r in results],
        }
    ).set_index("op")
