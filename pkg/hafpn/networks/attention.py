"""Enhanced multi-head self-attention, coordinate attention and the hybrid
attention block that runs both in parallel inside a transformer-style
residual stack.

Every op has a ``*_forward(x, p) -> (y, cache)`` and a
``*_backward(dy, cache) -> (dx, grads)`` with ``grads`` mirroring ``p``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from hafpn.core.random import Rng
from hafpn.core.tensor import Precision, ShapeError, Tensor, matmul, matmul_backward
from hafpn.networks.layers.activation import (
    hard_sigmoid_backward,
    hard_sigmoid_forward,
    silu_backward,
    silu_forward,
    tanh_backward,
    tanh_forward,
)
from hafpn.networks.layers.conv import (
    Conv2dCache,
    conv2d_backward,
    conv2d_forward,
    dwconv3x3_backward,
    dwconv3x3_forward,
)
from hafpn.networks.layers.linear import LinearCache, linear_backward, linear_forward
from hafpn.networks.layers.mlp import MlpCache, mlp_backward, mlp_forward
from hafpn.networks.layers.norm import (
    LayerNormCache,
    layer_norm_channels_backward,
    layer_norm_channels_forward,
)
from hafpn.networks.layers.params import (
    Conv2dParams,
    LayerNormParams,
    LinearParams,
    MlpParams,
    init_conv2d,
    init_dwconv3x3,
    init_layer_norm,
    init_linear,
    init_mlp,
)
from hafpn.networks.layers.resample import (
    global_avg_pool_h,
    global_avg_pool_h_backward,
    global_avg_pool_w,
    global_avg_pool_w_backward,
)

__all__ = [
    "AttentionMixing",
    "CaParams",
    "EmsaParams",
    "HamParams",
    "ca",
    "ca_backward",
    "ca_forward",
    "emsa",
    "emsa_backward",
    "emsa_forward",
    "ham",
    "ham_backward",
    "ham_forward",
    "init_ca",
    "init_emsa",
    "init_ham",
]

_logger = logging.getLogger("hafpn")

AttentionMixing = Literal["token", "head"]


# --------------------------------------------------------------------------
# Enhanced multi-head self-attention


@dataclass(frozen=True)
class EmsaParams:
    """Parameters of the enhanced multi-head self-attention.

    :param LinearParams qkv: joint projection C -> 3C producing Q, K, V
    :param LinearParams query: per-branch projection giving Q'
    :param LinearParams key: per-branch projection giving K'
    :param LinearParams value: per-branch projection giving V'
    :param LinearParams score_fc: FC applied to Q' K'^T
    :param LinearParams gate_fc: FC applied after SiLU, before the scaling
    :param LinearParams out_fc: output projection C -> C
    :param float scale: the scalar factor ``d`` (attention logits are
        divided by ``sqrt(d)``)
    :param int heads: number of heads splitting the channels
    :param AttentionMixing mixing: axis the two attention-map FCs act on,
        ``"token"`` (key tokens, weights (L, L)) or ``"head"`` (heads at
        every token pair, weights (heads, heads))
    """

    qkv: LinearParams
    query: LinearParams
    key: LinearParams
    value: LinearParams
    score_fc: LinearParams
    gate_fc: LinearParams
    out_fc: LinearParams
    scale: float
    heads: int = 2
    mixing: AttentionMixing = "token"

    def __post_init__(self) -> None:
        c = self.channels
        if self.heads < 1 or c % self.heads != 0:
            raise ShapeError(f"{c} channels cannot be split into {self.heads} heads.")
        if not self.scale > 0:
            raise ValueError(f"Scale factor d must be positive, got {self.scale}.")
        if self.qkv.out_features != 3 * c:
            raise ShapeError(
                f"QKV projection must map {c} -> {3 * c}, "
                f"got {self.qkv.in_features} -> {self.qkv.out_features}."
            )
        for name in ("query", "key", "value", "out_fc"):
            proj: LinearParams = getattr(self, name)
            if proj.weight.shape != (c, c):
                raise ShapeError(f"{name} must be {c} x {c}, got {proj.weight.shape}.")
        if self.mixing not in ("token", "head"):
            raise ValueError(f"Unknown attention mixing '{self.mixing}'.")
        width = self.mixing_width
        for name in ("score_fc", "gate_fc"):
            fc: LinearParams = getattr(self, name)
            if fc.weight.shape != (width, width):
                raise ShapeError(
                    f"{name} must be square over the mixing axis, "
                    f"got {fc.weight.shape}."
                )
        if self.mixing == "head" and width != self.heads:
            raise ShapeError(
                f"Head mixing needs {self.heads} x {self.heads} FCs, got {width}."
            )

    @property
    def channels(self) -> int:
        return self.qkv.in_features

    @property
    def mixing_width(self) -> int:
        return self.score_fc.in_features


def init_emsa(
    rng: Rng,
    channels: int,
    heads: int = 2,
    tokens: int | None = None,
    mixing: AttentionMixing = "token",
    precision: Precision = "single",
) -> EmsaParams:
    """Seeded EMSA parameters; ``d`` is the per-head key width.

    :param int tokens: number of spatial sites H * W, required for
        ``mixing="token"``
    """
    if channels % heads != 0:
        raise ShapeError(f"{channels} channels cannot be split into {heads} heads.")
    if mixing == "token":
        if not tokens:
            raise ValueError("Token mixing needs the token count H * W.")
        width = tokens
    else:
        width = heads
    return EmsaParams(
        qkv=init_linear(rng.spawn(0), channels, 3 * channels, precision=precision),
        query=init_linear(rng.spawn(1), channels, channels, precision=precision),
        key=init_linear(rng.spawn(2), channels, channels, precision=precision),
        value=init_linear(rng.spawn(3), channels, channels, precision=precision),
        score_fc=init_linear(rng.spawn(4), width, width, precision=precision),
        gate_fc=init_linear(rng.spawn(5), width, width, precision=precision),
        out_fc=init_linear(rng.spawn(6), channels, channels, precision=precision),
        scale=float(channels // heads),
        heads=heads,
        mixing=mixing,
    )


class EmsaCache(NamedTuple):
    input_shape: tuple[int, ...]
    qkv: LinearCache
    query: LinearCache
    key: LinearCache
    value: LinearCache
    q_heads: Tensor
    k_heads: Tensor
    v_heads: Tensor
    token_order: np.ndarray
    score_fc: LinearCache
    silu: tuple[Tensor, Tensor]
    gate_fc: LinearCache
    tanh: Tensor
    out_fc: LinearCache
    params: EmsaParams


def _split_heads(t: Tensor, heads: int) -> Tensor:
    # (N, L, C) -> (N, heads, L, C / heads)
    n, length, c = t.shape
    return np.ascontiguousarray(
        t.reshape(n, length, heads, c // heads).transpose(0, 2, 1, 3)
    )


def _merge_heads(t: Tensor) -> Tensor:
    # (N, heads, L, C / heads) -> (N, L, C)
    n, heads, length, dh = t.shape
    return np.ascontiguousarray(t.transpose(0, 2, 1, 3)).reshape(n, length, heads * dh)


def _token_order(tokens: Tensor) -> np.ndarray:
    """Per-sample order of the tokens (N, L, C) sorted by their features, (N, L).

    Reductions over tokens run in this order, so a permuted input gives
    bitwise permuted outputs.
    """
    return np.stack([np.lexsort(t.T[::-1]) for t in tokens])


def _order_index(order: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[0], shape[axis] = order.shape
    return order.reshape(shape)


def _take_tokens(t: Tensor, order: np.ndarray, axis: int) -> Tensor:
    return np.take_along_axis(t, _order_index(order, t.ndim, axis), axis=axis)


def _put_tokens(t: Tensor, order: np.ndarray, axis: int) -> Tensor:
    out = np.empty_like(t)
    np.put_along_axis(out, _order_index(order, t.ndim, axis), t, axis=axis)
    return out


def _mix_forward(
    scores: Tensor, p: LinearParams, mixing: AttentionMixing
) -> tuple[Tensor, LinearCache]:
    """FC over the attention map (N, heads, L, L)."""
    if mixing == "token":
        return linear_forward(scores, p)
    y, cache = linear_forward(scores.transpose(0, 2, 3, 1), p)
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2)), cache


def _mix_backward(
    dy: Tensor, cache: LinearCache, mixing: AttentionMixing
) -> tuple[Tensor, LinearParams]:
    if mixing == "token":
        return linear_backward(dy, cache)
    dx, grads = linear_backward(dy.transpose(0, 2, 3, 1), cache)
    return np.ascontiguousarray(dx.transpose(0, 3, 1, 2)), grads


def emsa_forward(x: Tensor, p: EmsaParams) -> tuple[Tensor, EmsaCache]:
    """Enhanced multi-head self-attention over the H * W spatial tokens.

    Q, K, V = FC(x); Q', K', V' = Linear(Q), Linear(K), Linear(V);
    X_m = SiLU(FC(Q' K'^T)); X_n = Tanh(FC(X_m) / sqrt(d));
    output = FC(X_n V') + x.

    :param Tensor x: input features (N, C, H, W)
    :param EmsaParams p: attention parameters
    :return tuple[Tensor, EmsaCache]: output (N, C, H, W) and cache
    """
    if x.ndim != 4 or x.shape[1] != p.channels:
        raise ShapeError(f"EMSA expects (N, {p.channels}, H, W), got {x.shape}.")
    n, c, h, w = x.shape
    length = h * w
    if length == 0:
        raise ShapeError("EMSA needs at least one spatial token.")
    if p.mixing == "token" and p.mixing_width != length:
        raise ShapeError(
            f"EMSA token mixing was built for {p.mixing_width} tokens, "
            f"input has {h} x {w} = {length}."
        )
    tokens = x.transpose(0, 2, 3, 1).reshape(n, length, c)
    qkv, qkv_cache = linear_forward(tokens, p.qkv)
    q, k, v = np.split(qkv, 3, axis=-1)
    q_prime, q_cache = linear_forward(q, p.query)
    k_prime, k_cache = linear_forward(k, p.key)
    v_prime, v_cache = linear_forward(v, p.value)
    q_heads = _split_heads(q_prime, p.heads)
    k_heads = _split_heads(k_prime, p.heads)
    v_heads = _split_heads(v_prime, p.heads)
    # (N, heads, L, L)
    scores = matmul(q_heads, np.ascontiguousarray(k_heads.swapaxes(-1, -2)))
    mixed, score_cache = _mix_forward(scores, p.score_fc, p.mixing)
    x_m, silu_cache = silu_forward(mixed)
    gated, gate_cache = _mix_forward(x_m, p.gate_fc, p.mixing)
    x_n, tanh_cache = tanh_forward(gated / math.sqrt(p.scale))
    order = _token_order(tokens)
    context = _merge_heads(
        matmul(_take_tokens(x_n, order, -1), _take_tokens(v_heads, order, -2))
    )
    out, out_cache = linear_forward(context, p.out_fc)
    out = np.ascontiguousarray(out.reshape(n, h, w, c).transpose(0, 3, 1, 2)) + x
    cache = EmsaCache(
        x.shape,
        qkv_cache,
        q_cache,
        k_cache,
        v_cache,
        q_heads,
        k_heads,
        v_heads,
        order,
        score_cache,
        silu_cache,
        gate_cache,
        tanh_cache,
        out_cache,
        p,
    )
    return out, cache


def emsa_backward(dy: Tensor, cache: EmsaCache) -> tuple[Tensor, EmsaParams]:
    n, c, h, w = cache.input_shape
    p = cache.params
    length = h * w
    d_out = dy.transpose(0, 2, 3, 1).reshape(n, length, c)
    d_context, g_out = linear_backward(d_out, cache.out_fc)
    d_context = _split_heads(d_context, p.heads)
    order = cache.token_order
    d_xn, d_v_heads = matmul_backward(
        d_context,
        _take_tokens(cache.tanh, order, -1),
        _take_tokens(cache.v_heads, order, -2),
    )
    d_xn = _put_tokens(d_xn, order, -1)
    d_v_heads = _put_tokens(d_v_heads, order, -2)
    d_gated = tanh_backward(d_xn, cache.tanh) / math.sqrt(p.scale)
    d_xm, g_gate = _mix_backward(d_gated, cache.gate_fc, p.mixing)
    d_mixed = silu_backward(d_xm, cache.silu)
    d_scores, g_score = _mix_backward(d_mixed, cache.score_fc, p.mixing)
    d_q_heads, d_k_heads_t = matmul_backward(
        d_scores, cache.q_heads, cache.k_heads.swapaxes(-1, -2)
    )
    d_k_heads = d_k_heads_t.swapaxes(-1, -2)
    d_q, g_query = linear_backward(_merge_heads(d_q_heads), cache.query)
    d_k, g_key = linear_backward(_merge_heads(d_k_heads), cache.key)
    d_v, g_value = linear_backward(_merge_heads(d_v_heads), cache.value)
    d_tokens, g_qkv = linear_backward(
        np.concatenate([d_q, d_k, d_v], axis=-1), cache.qkv
    )
    dx = d_tokens.reshape(n, h, w, c).transpose(0, 3, 1, 2) + dy
    grads = EmsaParams(
        qkv=g_qkv,
        query=g_query,
        key=g_key,
        value=g_value,
        score_fc=g_score,
        gate_fc=g_gate,
        out_fc=g_out,
        scale=p.scale,
        heads=p.heads,
        mixing=p.mixing,
    )
    return np.ascontiguousarray(dx), grads


def emsa(x: Tensor, p: EmsaParams) -> Tensor:
    return emsa_forward(x, p)[0]


# --------------------------------------------------------------------------
# Coordinate attention


@dataclass(frozen=True)
class CaParams:
    """Coordinate attention with a shared 1x1 reduction C -> C/r and one
    1x1 expansion C/r -> C per direction."""

    reduce: Conv2dParams
    expand_h: Conv2dParams
    expand_w: Conv2dParams
    reduction: int = 8

    def __post_init__(self) -> None:
        c = self.channels
        if self.reduction < 1 or c % self.reduction != 0:
            raise ShapeError(
                f"{c} channels are not divisible by reduction {self.reduction}."
            )
        mid = c // self.reduction
        for name, conv, shape in (
            ("reduce", self.reduce, (mid, c, 1, 1)),
            ("expand_h", self.expand_h, (c, mid, 1, 1)),
            ("expand_w", self.expand_w, (c, mid, 1, 1)),
        ):
            if conv.weight.shape != shape:
                raise ShapeError(
                    f"CA {name} must be a 1x1 conv of shape {shape}, "
                    f"got {conv.weight.shape}."
                )

    @property
    def channels(self) -> int:
        return self.reduce.in_channels


def init_ca(
    rng: Rng, channels: int, reduction: int = 8, precision: Precision = "single"
) -> CaParams:
    if reduction < 1 or channels % reduction != 0:
        raise ShapeError(
            f"{channels} channels are not divisible by reduction {reduction}."
        )
    mid = channels // reduction
    return CaParams(
        reduce=init_conv2d(rng.spawn(0), channels, mid, 1, precision=precision),
        expand_h=init_conv2d(rng.spawn(1), mid, channels, 1, precision=precision),
        expand_w=init_conv2d(rng.spawn(2), mid, channels, 1, precision=precision),
        reduction=reduction,
    )


class CaCache(NamedTuple):
    x: Tensor
    reduce: Conv2dCache
    silu: tuple[Tensor, Tensor]
    expand_h: Conv2dCache
    expand_w: Conv2dCache
    gate_h_input: Tensor
    gate_w_input: Tensor
    gate_h: Tensor
    gate_w: Tensor
    params: CaParams


def ca_forward(x: Tensor, p: CaParams) -> tuple[Tensor, CaCache]:
    """Coordinate attention.

    Height and width descriptors are pooled along the orthogonal axis,
    laid end to end as a (N, C, 1, H + W) strip, reduced by the shared
    1x1 conv and SiLU, split again and expanded per direction into
    hard-sigmoid gates ``a_h`` (N, C, H, 1) and ``a_w`` (N, C, 1, W).
    The output ``x * a_h * a_w`` broadcasts each gate along the other
    axis; this is the only broadcast in the library.

    :param Tensor x: input features (N, C, H, W)
    :param CaParams p: attention parameters
    :return tuple[Tensor, CaCache]: output (N, C, H, W) and cache
    """
    if x.ndim != 4 or x.shape[1] != p.channels:
        raise ShapeError(f"CA expects (N, {p.channels}, H, W), got {x.shape}.")
    h = x.shape[2]
    # (N, C, H, 1) -> (N, C, 1, H)
    along_h = global_avg_pool_w(x).transpose(0, 1, 3, 2)
    # (N, C, 1, W)
    along_w = global_avg_pool_h(x)
    strip = np.concatenate([along_h, along_w], axis=3)
    reduced, reduce_cache = conv2d_forward(strip, p.reduce)
    act, silu_cache = silu_forward(reduced)
    act_h = np.ascontiguousarray(act[..., :h].transpose(0, 1, 3, 2))
    act_w = np.ascontiguousarray(act[..., h:])
    logits_h, expand_h_cache = conv2d_forward(act_h, p.expand_h)
    logits_w, expand_w_cache = conv2d_forward(act_w, p.expand_w)
    gate_h, _ = hard_sigmoid_forward(logits_h)
    gate_w, _ = hard_sigmoid_forward(logits_w)
    out = x * gate_h * gate_w
    cache = CaCache(
        x,
        reduce_cache,
        silu_cache,
        expand_h_cache,
        expand_w_cache,
        logits_h,
        logits_w,
        gate_h,
        gate_w,
        p,
    )
    return out, cache


def ca_backward(dy: Tensor, cache: CaCache) -> tuple[Tensor, CaParams]:
    x, gate_h, gate_w = cache.x, cache.gate_h, cache.gate_w
    h, w = x.shape[2:]
    dx = dy * gate_h * gate_w
    d_gate_h = np.sum(dy * x * gate_w, axis=3, keepdims=True)
    d_gate_w = np.sum(dy * x * gate_h, axis=2, keepdims=True)
    d_logits_h = hard_sigmoid_backward(d_gate_h, cache.gate_h_input)
    d_logits_w = hard_sigmoid_backward(d_gate_w, cache.gate_w_input)
    d_act_h, g_expand_h = conv2d_backward(d_logits_h, cache.expand_h)
    d_act_w, g_expand_w = conv2d_backward(d_logits_w, cache.expand_w)
    d_act = np.concatenate([d_act_h.transpose(0, 1, 3, 2), d_act_w], axis=3)
    d_reduced = silu_backward(d_act, cache.silu)
    d_strip, g_reduce = conv2d_backward(d_reduced, cache.reduce)
    d_along_h = d_strip[..., :h].transpose(0, 1, 3, 2)
    d_along_w = d_strip[..., h:]
    dx = dx + global_avg_pool_w_backward(d_along_h, w)
    dx = dx + global_avg_pool_h_backward(d_along_w, h)
    grads = CaParams(
        reduce=g_reduce,
        expand_h=g_expand_h,
        expand_w=g_expand_w,
        reduction=cache.params.reduction,
    )
    return dx, grads


def ca(x: Tensor, p: CaParams) -> Tensor:
    return ca_forward(x, p)[0]


# --------------------------------------------------------------------------
# Hybrid attention block


@dataclass(frozen=True)
class HamParams:
    """Hybrid attention block parameters.

    Either attention branch may be ``None`` to ablate it.
    """

    dwconv: Conv2dParams
    norm1: LayerNormParams
    emsa: EmsaParams | None
    ca: CaParams | None
    norm2: LayerNormParams
    mlp: MlpParams

    def __post_init__(self) -> None:
        c = self.channels
        channel_counts = {
            "norm1": self.norm1.channels,
            "norm2": self.norm2.channels,
            "mlp": self.mlp.features,
        }
        if self.emsa is not None:
            channel_counts["emsa"] = self.emsa.channels
        if self.ca is not None:
            channel_counts["ca"] = self.ca.channels
        mismatched = {k: v for k, v in channel_counts.items() if v != c}
        if mismatched:
            raise ShapeError(
                f"HAM sub-blocks disagree with the {c}-channel depthwise conv: "
                f"{mismatched}."
            )

    @property
    def channels(self) -> int:
        return self.dwconv.out_channels

    @property
    def use_emsa(self) -> bool:
        return self.emsa is not None

    @property
    def use_ca(self) -> bool:
        return self.ca is not None


def init_ham(
    rng: Rng,
    channels: int,
    heads: int = 2,
    reduction: int = 8,
    hidden_ratio: float = 2.0,
    tokens: int | None = None,
    mixing: AttentionMixing = "token",
    use_emsa: bool = True,
    use_ca: bool = True,
    precision: Precision = "single",
) -> HamParams:
    return HamParams(
        dwconv=init_dwconv3x3(rng.spawn(0), channels, precision=precision),
        norm1=init_layer_norm(channels, precision=precision),
        emsa=(
            init_emsa(rng.spawn(1), channels, heads, tokens, mixing, precision)
            if use_emsa
            else None
        ),
        ca=init_ca(rng.spawn(2), channels, reduction, precision) if use_ca else None,
        norm2=init_layer_norm(channels, precision=precision),
        mlp=init_mlp(rng.spawn(3), channels, hidden_ratio, precision),
    )


class HamCache(NamedTuple):
    dwconv: Conv2dCache
    norm1: LayerNormCache
    emsa: EmsaCache | None
    ca: CaCache | None
    norm2: LayerNormCache
    mlp: MlpCache
    params: HamParams


def ham_forward(x: Tensor, p: HamParams) -> tuple[Tensor, HamCache]:
    """Hybrid attention block.

    X1 = X + DWConv(X); X2 = LN(X1); X3 = CA(X2) + EMSA(X2) + X1;
    Y = MLP(LN(X3)) + X3, the MLP acting on the channel vector of every
    spatial site.

    :param Tensor x: input features (N, C, H, W)
    :param HamParams p: block parameters
    :return tuple[Tensor, HamCache]: output (N, C, H, W) and cache
    """
    if x.ndim != 4 or x.shape[1] != p.channels:
        raise ShapeError(f"HAM expects (N, {p.channels}, H, W), got {x.shape}.")
    local, dw_cache = dwconv3x3_forward(x, p.dwconv)
    x1 = x + local
    x2, norm1_cache = layer_norm_channels_forward(x1, p.norm1)
    ca_out, ca_cache = ca_forward(x2, p.ca) if p.ca is not None else (None, None)
    emsa_out, emsa_cache = (
        emsa_forward(x2, p.emsa) if p.emsa is not None else (None, None)
    )
    if ca_out is not None and emsa_out is not None:
        x3 = (ca_out + emsa_out) + x1
    elif ca_out is not None:
        x3 = ca_out + x1
    elif emsa_out is not None:
        x3 = emsa_out + x1
    else:
        _logger.debug("HAM without attention branches reduces to conv + MLP.")
        x3 = x1
    normed, norm2_cache = layer_norm_channels_forward(x3, p.norm2)
    hidden, mlp_cache = mlp_forward(normed.transpose(0, 2, 3, 1), p.mlp)
    y = np.ascontiguousarray(hidden.transpose(0, 3, 1, 2)) + x3
    cache = HamCache(
        dw_cache, norm1_cache, emsa_cache, ca_cache, norm2_cache, mlp_cache, p
    )
    return y, cache


def ham_backward(dy: Tensor, cache: HamCache) -> tuple[Tensor, HamParams]:
    p = cache.params
    d_normed_cl, g_mlp = mlp_backward(dy.transpose(0, 2, 3, 1), cache.mlp)
    d_normed = np.ascontiguousarray(d_normed_cl.transpose(0, 3, 1, 2))
    d_x3_norm, g_norm2 = layer_norm_channels_backward(d_normed, cache.norm2)
    d_x3 = dy + d_x3_norm
    d_x2 = np.zeros_like(d_x3)
    g_emsa = g_ca = None
    if cache.ca is not None:
        d_ca, g_ca = ca_backward(d_x3, cache.ca)
        d_x2 = d_x2 + d_ca
    if cache.emsa is not None:
        d_emsa, g_emsa = emsa_backward(d_x3, cache.emsa)
        d_x2 = d_x2 + d_emsa
    d_x1_norm, g_norm1 = layer_norm_channels_backward(d_x2, cache.norm1)
    d_x1 = d_x3 + d_x1_norm
    d_local, g_dw = dwconv3x3_backward(d_x1, cache.dwconv)
    dx = d_x1 + d_local
    grads = HamParams(
        dwconv=g_dw,
        norm1=g_norm1,
        emsa=g_emsa,
        ca=g_ca,
        norm2=g_norm2,
        mlp=g_mlp,
    )
    return dx, grads


def ham(x: Tensor, p: HamParams) -> Tensor:
    return ham_forward(x, p)[0]
