"""Toy backbone and the FPN, PAFPN and HAFPN necks.

The backbone emits three levels at strides 2, 4 and 8 with a unified
channel count. The necks share one top-down node::

    o5 = HAM(p5)
    o4 = fuse(merge(p4, up2(o5)))
    o3 = fuse(merge(p3, up2(o4)))

where HAM (when enabled) runs after each merge and before the fusion conv,
or on the lateral input before merging (``ham_placement="pre_merge"``).
PAFPN appends the bottom-up path ``n3 = o3``,
``n4 = fuse(merge(o4, down2(n3)))``, ``n5 = fuse(merge(o5, down2(n4)))``.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from hafpn.core.random import Rng
from hafpn.core.tensor import Precision, ShapeError, Tensor
from hafpn.networks.attention import (
    HamCache,
    HamParams,
    ham_backward,
    ham_forward,
    init_ham,
)
from hafpn.networks.layers.activation import silu_backward, silu_forward
from hafpn.networks.layers.conv import Conv2dCache, conv2d_backward, conv2d_forward
from hafpn.networks.layers.params import Conv2dParams, init_conv2d
from hafpn.networks.layers.resample import (
    upsample_nearest_2x,
    upsample_nearest_2x_backward,
)
from hafpn.utils.config import ConfigError, NeckConfig

__all__ = [
    "BackboneParams",
    "FeatureLevels",
    "NeckParams",
    "PyramidParams",
    "as_fpn",
    "fpn_fuse",
    "hafpn_fuse",
    "init_backbone",
    "init_neck",
    "init_pyramid",
    "level_sizes",
    "neck_backward",
    "neck_forward",
    "neck_fuse",
    "pafpn_fuse",
    "pyramid_backward",
    "pyramid_forward",
    "toy_backbone",
    "toy_backbone_backward",
    "toy_backbone_forward",
]

_logger = logging.getLogger("hafpn")

LEVEL_NAMES = ("p3", "p4", "p5")

Block = Callable[[Tensor], Tensor]


@dataclass(frozen=True)
class FeatureLevels:
    """Three pyramid levels, finest first; each halves the previous extents."""

    p3: Tensor
    p4: Tensor
    p5: Tensor

    def __post_init__(self) -> None:
        levels = (self.p3, self.p4, self.p5)
        if any(t.ndim != 4 for t in levels):
            raise ShapeError(
                f"Levels must be (N, C, H, W), got {[t.shape for t in levels]}."
            )
        for fine, coarse in zip(levels, levels[1:]):
            n, c, h, w = fine.shape
            if coarse.shape != (n, c, h // 2, w // 2) or h % 2 or w % 2:
                raise ShapeError(
                    f"Level {coarse.shape} is not the exact half of {fine.shape}."
                )

    def as_tuple(self) -> tuple[Tensor, Tensor, Tensor]:
        return self.p3, self.p4, self.p5

    @property
    def shapes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(t.shape for t in self.as_tuple())


def level_sizes(height: int, width: int) -> list[tuple[int, int]]:
    """Spatial extents of p3, p4 and p5 for an input image."""
    if height % 8 or width % 8 or height < 8 or width < 8:
        raise ShapeError(
            f"Image extents must be positive multiples of 8, got {height}x{width}."
        )
    return [(height >> k, width >> k) for k in (1, 2, 3)]


# --------------------------------------------------------------------------
# Toy backbone


@dataclass(frozen=True)
class BackboneParams:
    """Three conv3x3/stride-2 + SiLU stages and their 1x1 laterals."""

    stage1: Conv2dParams
    stage2: Conv2dParams
    stage3: Conv2dParams
    lateral3: Conv2dParams
    lateral4: Conv2dParams
    lateral5: Conv2dParams

    @property
    def stages(self) -> tuple[Conv2dParams, Conv2dParams, Conv2dParams]:
        return self.stage1, self.stage2, self.stage3

    @property
    def laterals(self) -> tuple[Conv2dParams, Conv2dParams, Conv2dParams]:
        return self.lateral3, self.lateral4, self.lateral5


def init_backbone(
    rng: Rng, config: NeckConfig, precision: Precision = "single"
) -> BackboneParams:
    widths = (3, *config.backbone_widths)
    stages = [
        init_conv2d(
            rng.spawn(i), widths[i], widths[i + 1], 3, 2, 1, precision=precision
        )
        for i in range(3)
    ]
    laterals = [
        init_conv2d(
            rng.spawn(3 + i), widths[i + 1], config.channels, 1, precision=precision
        )
        for i in range(3)
    ]
    return BackboneParams(*stages, *laterals)


class BackboneCache(NamedTuple):
    stages: list[Conv2dCache]
    acts: list[tuple[Tensor, Tensor]]
    laterals: list[Conv2dCache]
    params: BackboneParams


def toy_backbone_forward(
    image: Tensor, p: BackboneParams
) -> tuple[FeatureLevels, BackboneCache]:
    """
    :param Tensor image: (N, 3, H, W) with H and W multiples of 8
    :param BackboneParams p: backbone parameters
    :return tuple[FeatureLevels, BackboneCache]: levels at H/2, H/4, H/8
    """
    if image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError(f"Backbone expects (N, 3, H, W), got {image.shape}.")
    level_sizes(*image.shape[2:])
    stage_caches, act_caches, lateral_caches, outputs = [], [], [], []
    x = image
    for stage, lateral in zip(p.stages, p.laterals):
        pre, stage_cache = conv2d_forward(x, stage)
        x, act_cache = silu_forward(pre)
        out, lateral_cache = conv2d_forward(x, lateral)
        stage_caches.append(stage_cache)
        act_caches.append(act_cache)
        lateral_caches.append(lateral_cache)
        outputs.append(out)
    levels = FeatureLevels(*outputs)
    return levels, BackboneCache(stage_caches, act_caches, lateral_caches, p)


def toy_backbone_backward(
    d_levels: FeatureLevels, cache: BackboneCache
) -> tuple[Tensor, BackboneParams]:
    d_stage_out = None
    stage_grads: list[Conv2dParams] = [None] * 3
    lateral_grads: list[Conv2dParams] = [None] * 3
    for i in reversed(range(3)):
        d_act, lateral_grads[i] = conv2d_backward(
            d_levels.as_tuple()[i], cache.laterals[i]
        )
        if d_stage_out is not None:
            d_act = d_act + d_stage_out
        d_pre = silu_backward(d_act, cache.acts[i])
        d_stage_out, stage_grads[i] = conv2d_backward(d_pre, cache.stages[i])
    return d_stage_out, BackboneParams(*stage_grads, *lateral_grads)


def toy_backbone(image: Tensor, p: BackboneParams) -> FeatureLevels:
    return toy_backbone_forward(image, p)[0]


# --------------------------------------------------------------------------
# Necks


@dataclass(frozen=True)
class NeckParams:
    """Fusion convs, optional bottom-up path and optional HAM blocks.

    ``ham3``/``ham4``/``ham5`` are present iff the config enables HAM;
    ``down*``/``fuse_b*`` are present iff the variant is ``pafpn``.
    """

    config: NeckConfig
    fuse4: Conv2dParams
    fuse3: Conv2dParams
    ham5: HamParams | None = None
    ham4: HamParams | None = None
    ham3: HamParams | None = None
    down4: Conv2dParams | None = None
    down5: Conv2dParams | None = None
    fuse_b4: Conv2dParams | None = None
    fuse_b5: Conv2dParams | None = None

    def __post_init__(self) -> None:
        hams = [h is not None for h in (self.ham5, self.ham4, self.ham3)]
        if hams != [self.config.ham_enabled] * 3:
            raise ConfigError(
                f"HAM blocks {hams} do not match "
                f"use_emsa={self.config.use_emsa}, use_ca={self.config.use_ca}."
            )
        bottom_up = (self.down4, self.down5, self.fuse_b4, self.fuse_b5)
        present = [b is not None for b in bottom_up]
        if any(present) != (self.config.variant == "pafpn") or len(set(present)) > 1:
            raise ConfigError(
                f"Bottom-up convs {present} do not match variant "
                f"'{self.config.variant}'."
            )


def _fuse_conv(rng: Rng, config: NeckConfig, precision: Precision) -> Conv2dParams:
    k = config.fuse_kernel
    return init_conv2d(
        rng,
        config.merged_channels,
        config.channels,
        k,
        padding=k // 2,
        precision=precision,
    )


def init_neck(
    rng: Rng,
    config: NeckConfig,
    image_size: tuple[int, int],
    precision: Precision = "single",
) -> NeckParams:
    """Seeded neck parameters.

    :param tuple[int, int] image_size: (H, W) of the backbone input; token
        mixing in EMSA ties the attention FCs to each level's H * W
    """
    sizes = level_sizes(*image_size)
    hams: dict[str, HamParams | None] = {"ham3": None, "ham4": None, "ham5": None}
    if config.ham_enabled:
        for i, name in enumerate(("ham3", "ham4", "ham5")):
            h, w = sizes[i]
            merged = name != "ham5" and config.ham_placement == "post_merge"
            hams[name] = init_ham(
                rng.spawn(10 + i),
                config.merged_channels if merged else config.channels,
                heads=config.heads,
                reduction=config.reduction,
                hidden_ratio=config.mlp_ratio,
                tokens=h * w,
                mixing=config.attention_mixing,
                use_emsa=config.use_emsa,
                use_ca=config.use_ca,
                precision=precision,
            )
    bottom_up = {}
    if config.variant == "pafpn":
        c = config.channels
        bottom_up = {
            "down4": init_conv2d(rng.spawn(20), c, c, 3, 2, 1, precision=precision),
            "down5": init_conv2d(rng.spawn(21), c, c, 3, 2, 1, precision=precision),
            "fuse_b4": _fuse_conv(rng.spawn(22), config, precision),
            "fuse_b5": _fuse_conv(rng.spawn(23), config, precision),
        }
    return NeckParams(
        config=config,
        fuse4=_fuse_conv(rng.spawn(0), config, precision),
        fuse3=_fuse_conv(rng.spawn(1), config, precision),
        **hams,
        **bottom_up,
    )


HamFn = Callable[[Tensor, HamParams], tuple[Tensor, HamCache | None]]


def _block_fn(block: Block | None) -> HamFn:
    if block is None:
        return ham_forward
    return lambda x, _: (block(x), None)


def _merge(lateral: Tensor, other: Tensor, mode: str) -> Tensor:
    if lateral.shape != other.shape:
        raise ShapeError(f"Cannot merge {lateral.shape} with {other.shape}.")
    if mode == "concat":
        return np.concatenate([lateral, other], axis=1)
    return lateral + other


def _merge_backward(dm: Tensor, mode: str) -> tuple[Tensor, Tensor]:
    if mode == "concat":
        d_lateral, d_other = np.split(dm, 2, axis=1)
        return d_lateral, d_other
    return dm, dm


class NodeCache(NamedTuple):
    ham: HamCache | None
    fuse: Conv2dCache


def _node_forward(
    lateral: Tensor,
    other: Tensor,
    fuse: Conv2dParams,
    ham: HamParams | None,
    config: NeckConfig,
    ham_fn: HamFn,
) -> tuple[Tensor, NodeCache]:
    ham_cache = None
    if ham is not None and config.ham_placement == "pre_merge":
        lateral, ham_cache = ham_fn(lateral, ham)
    merged = _merge(lateral, other, config.merge)
    if ham is not None and config.ham_placement == "post_merge":
        merged, ham_cache = ham_fn(merged, ham)
    out, fuse_cache = conv2d_forward(merged, fuse)
    return out, NodeCache(ham_cache, fuse_cache)


def _ham_backward(dy: Tensor, cache: HamCache | None) -> tuple[Tensor, HamParams]:
    if cache is None:
        raise ValueError("No backward pass through a substituted HAM block.")
    return ham_backward(dy, cache)


def _node_backward(
    dy: Tensor, cache: NodeCache, has_ham: bool, config: NeckConfig
) -> tuple[Tensor, Tensor, Conv2dParams, HamParams | None]:
    d_merged, g_fuse = conv2d_backward(dy, cache.fuse)
    g_ham = None
    if has_ham and config.ham_placement == "post_merge":
        d_merged, g_ham = _ham_backward(d_merged, cache.ham)
    d_lateral, d_other = _merge_backward(d_merged, config.merge)
    if has_ham and config.ham_placement == "pre_merge":
        d_lateral, g_ham = _ham_backward(d_lateral, cache.ham)
    return d_lateral, d_other, g_fuse, g_ham


class NeckCache(NamedTuple):
    ham5: HamCache | None
    node4: NodeCache
    node3: NodeCache
    down4: Conv2dCache | None
    node_b4: NodeCache | None
    down5: Conv2dCache | None
    node_b5: NodeCache | None
    params: NeckParams


def neck_forward(
    levels: FeatureLevels, p: NeckParams, block: Block | None = None
) -> tuple[FeatureLevels, NeckCache]:
    """Run the neck selected by ``p.config.variant``.

    :param FeatureLevels levels: backbone output
    :param NeckParams p: neck parameters
    :param Block | None block: replaces every HAM application with this
        shape-preserving callable (forward only), defaults to None
    :return tuple[FeatureLevels, NeckCache]: fused levels and cache
    """
    config = p.config
    if levels.p3.shape[1] != config.channels:
        raise ShapeError(
            f"Neck built for {config.channels} channels, got levels {levels.shapes}."
        )
    ham_fn = _block_fn(block)
    ham5_cache = None
    o5 = levels.p5
    if p.ham5 is not None:
        o5, ham5_cache = ham_fn(o5, p.ham5)
    o4, node4 = _node_forward(
        levels.p4, upsample_nearest_2x(o5), p.fuse4, p.ham4, config, ham_fn
    )
    o3, node3 = _node_forward(
        levels.p3, upsample_nearest_2x(o4), p.fuse3, p.ham3, config, ham_fn
    )
    if config.variant != "pafpn":
        cache = NeckCache(ham5_cache, node4, node3, None, None, None, None, p)
        return FeatureLevels(o3, o4, o5), cache
    n3 = o3
    down4_out, down4 = conv2d_forward(n3, p.down4)
    n4, node_b4 = _node_forward(o4, down4_out, p.fuse_b4, None, config, ham_fn)
    down5_out, down5 = conv2d_forward(n4, p.down5)
    n5, node_b5 = _node_forward(o5, down5_out, p.fuse_b5, None, config, ham_fn)
    cache = NeckCache(ham5_cache, node4, node3, down4, node_b4, down5, node_b5, p)
    return FeatureLevels(n3, n4, n5), cache


def neck_backward(
    d_out: FeatureLevels, cache: NeckCache
) -> tuple[FeatureLevels, NeckParams]:
    p = cache.params
    config = p.config
    bottom_up = {}
    if config.variant == "pafpn":
        d_o5, d_down5, g_fb5, _ = _node_backward(
            d_out.p5, cache.node_b5, False, config
        )
        d_n4, g_down5 = conv2d_backward(d_down5, cache.down5)
        d_n4 = d_n4 + d_out.p4
        d_o4, d_down4, g_fb4, _ = _node_backward(d_n4, cache.node_b4, False, config)
        d_n3, g_down4 = conv2d_backward(d_down4, cache.down4)
        d_o3 = d_n3 + d_out.p3
        bottom_up = {
            "down4": g_down4,
            "down5": g_down5,
            "fuse_b4": g_fb4,
            "fuse_b5": g_fb5,
        }
    else:
        d_o3, d_o4, d_o5 = d_out.as_tuple()
    d_p3, d_up4, g_fuse3, g_ham3 = _node_backward(
        d_o3, cache.node3, p.ham3 is not None, config
    )
    d_o4 = d_o4 + upsample_nearest_2x_backward(d_up4)
    d_p4, d_up5, g_fuse4, g_ham4 = _node_backward(
        d_o4, cache.node4, p.ham4 is not None, config
    )
    d_o5 = d_o5 + upsample_nearest_2x_backward(d_up5)
    g_ham5 = None
    if p.ham5 is not None:
        d_p5, g_ham5 = _ham_backward(d_o5, cache.ham5)
    else:
        d_p5 = d_o5
    grads = NeckParams(
        config=config,
        fuse4=g_fuse4,
        fuse3=g_fuse3,
        ham5=g_ham5,
        ham4=g_ham4,
        ham3=g_ham3,
        **bottom_up,
    )
    return FeatureLevels(d_p3, d_p4, d_p5), grads


def neck_fuse(
    levels: FeatureLevels, p: NeckParams, block: Block | None = None
) -> FeatureLevels:
    return neck_forward(levels, p, block)[0]


def _require_variant(p: NeckParams, variant: str) -> None:
    if p.config.variant != variant:
        raise ConfigError(
            f"Parameters were built for '{p.config.variant}', not '{variant}'."
        )


def fpn_fuse(
    levels: FeatureLevels, p: NeckParams, block: Block | None = None
) -> FeatureLevels:
    """Top-down FPN, with HAM blocks if the config enables them."""
    _require_variant(p, "fpn")
    return neck_fuse(levels, p, block)


def pafpn_fuse(
    levels: FeatureLevels, p: NeckParams, block: Block | None = None
) -> FeatureLevels:
    """FPN followed by the bottom-up path aggregation."""
    _require_variant(p, "pafpn")
    return neck_fuse(levels, p, block)


def hafpn_fuse(
    levels: FeatureLevels, p: NeckParams, block: Block | None = None
) -> FeatureLevels:
    """FPN dataflow with a hybrid attention block at every level.

    :param Block | None block: substitute for HAM, e.g. the identity to
        recover plain FPN bit for bit
    """
    _require_variant(p, "hafpn")
    return neck_fuse(levels, p, block)


def as_fpn(p: NeckParams) -> NeckParams:
    """The same fusion convs as a plain FPN without HAM."""
    config = replace(p.config, variant="fpn", use_emsa=False, use_ca=False)
    return NeckParams(config=config, fuse4=p.fuse4, fuse3=p.fuse3)


# --------------------------------------------------------------------------
# Backbone + neck


@dataclass(frozen=True)
class PyramidParams:
    backbone: BackboneParams
    neck: NeckParams


def init_pyramid(
    config: NeckConfig,
    image_size: tuple[int, int],
    precision: Precision = "single",
) -> PyramidParams:
    """Backbone and neck seeded from ``config.seed``."""
    rng = Rng(config.seed)
    return PyramidParams(
        backbone=init_backbone(rng.spawn(0), config, precision),
        neck=init_neck(rng.spawn(1), config, image_size, precision),
    )


class PyramidCache(NamedTuple):
    backbone: BackboneCache
    neck: NeckCache


def pyramid_forward(
    image: Tensor, p: PyramidParams, block: Block | None = None
) -> tuple[FeatureLevels, PyramidCache]:
    levels, backbone_cache = toy_backbone_forward(image, p.backbone)
    fused, neck_cache = neck_forward(levels, p.neck, block)
    _logger.debug(f"{p.neck.config.variant} levels: {fused.shapes}")
    return fused, PyramidCache(backbone_cache, neck_cache)


def pyramid_backward(
    d_levels: FeatureLevels, cache: PyramidCache
) -> tuple[Tensor, PyramidParams]:
    d_backbone_levels, g_neck = neck_backward(d_levels, cache.neck)
    d_image, g_backbone = toy_backbone_backward(d_backbone_levels, cache.backbone)
    return d_image, PyramidParams(backbone=g_backbone, neck=g_neck)
