from typing import NamedTuple

from hafpn.core.tensor import ShapeError, Tensor
from hafpn.networks.layers.activation import silu_backward, silu_forward
from hafpn.networks.layers.linear import LinearCache, linear_backward, linear_forward
from hafpn.networks.layers.params import MlpParams

__all__ = ["MlpCache", "mlp", "mlp_backward", "mlp_forward"]


class MlpCache(NamedTuple):
    expand: LinearCache
    act: tuple[Tensor, Tensor]
    project: LinearCache
    params: MlpParams


def mlp_forward(x: Tensor, p: MlpParams) -> tuple[Tensor, MlpCache]:
    """``project(silu(expand(x)))`` over the last axis, shape preserving."""
    if x.shape[-1] != p.features or p.project.out_features != p.features:
        raise ShapeError(
            f"MLP maps {p.features} -> {p.project.out_features} features, "
            f"got input {x.shape}."
        )
    hidden, expand_cache = linear_forward(x, p.expand)
    act, act_cache = silu_forward(hidden)
    y, project_cache = linear_forward(act, p.project)
    return y, MlpCache(expand_cache, act_cache, project_cache, p)


def mlp_backward(dy: Tensor, cache: MlpCache) -> tuple[Tensor, MlpParams]:
    d_act, d_project = linear_backward(dy, cache.project)
    d_hidden = silu_backward(d_act, cache.act)
    dx, d_expand = linear_backward(d_hidden, cache.expand)
    return dx, MlpParams(d_expand, d_project, cache.params.hidden_ratio)


def mlp(x: Tensor, p: MlpParams) -> Tensor:
    return mlp_forward(x, p)[0]
