from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import ShapeError
from hafpn.networks.layers import (
    Conv2dParams,
    conv2d,
    init_layer_norm,
    layer_norm_channels,
    upsample_nearest_2x,
    zero_weights,
)
from hafpn.networks.pyramid import (
    FeatureLevels,
    as_fpn,
    fpn_fuse,
    hafpn_fuse,
    init_backbone,
    init_neck,
    init_pyramid,
    level_sizes,
    neck_backward,
    neck_forward,
    pafpn_fuse,
    pyramid_backward,
    pyramid_forward,
    toy_backbone,
)
from hafpn.utils.config import ConfigError, NeckConfig

PLAIN = {"use_emsa": False, "use_ca": False}


def _levels(
    config: NeckConfig, size=(16, 16), seed=0, precision="double"
) -> FeatureLevels:
    image = rand_uniform((1, 3, *size), Rng(seed), precision=precision)
    return toy_backbone(image, init_backbone(Rng(1), config, precision))


def test_level_sizes():
    assert level_sizes(32, 32) == [(16, 16), (8, 8), (4, 4)]
    assert level_sizes(16, 24) == [(8, 12), (4, 6), (2, 3)]
    with pytest.raises(ShapeError):
        level_sizes(12, 16)


def test_feature_levels_need_exact_halving():
    p3, p4 = np.zeros((1, 4, 8, 8)), np.zeros((1, 4, 4, 4))
    with pytest.raises(ShapeError):
        FeatureLevels(p3, p4, np.zeros((1, 4, 3, 2)))
    with pytest.raises(ShapeError):
        FeatureLevels(p3, np.zeros((1, 2, 4, 4)), np.zeros((1, 2, 2, 2)))


@pytest.mark.parametrize("variant", ["fpn", "pafpn", "hafpn"])
def test_pyramid_shapes(small_config, variant):
    flags = {} if variant == "hafpn" else PLAIN
    config = replace(small_config, variant=variant, **flags)
    image = rand_uniform((1, 3, 32, 32), Rng(0))
    levels, _ = pyramid_forward(image, init_pyramid(config, (32, 32)))
    assert levels.shapes == ((1, 8, 16, 16), (1, 8, 8, 8), (1, 8, 4, 4))
    assert levels.p3.dtype == np.float32


@pytest.mark.parametrize(
    "merge,placement",
    [("add", "pre_merge"), ("concat", "post_merge"), ("concat", "pre_merge")],
)
def test_hafpn_merge_and_placement_options(small_config, merge, placement):
    config = replace(small_config, merge=merge, ham_placement=placement)
    levels = _levels(config)
    p = init_neck(Rng(2), config, (16, 16), "double")
    assert hafpn_fuse(levels, p).shapes == levels.shapes


def test_pyramid_is_deterministic(small_config, small_image):
    a, _ = pyramid_forward(small_image, init_pyramid(small_config, (16, 16)))
    b, _ = pyramid_forward(small_image, init_pyramid(small_config, (16, 16)))
    for x, y in zip(a.as_tuple(), b.as_tuple()):
        np.testing.assert_array_equal(x, y)


def test_pyramid_rejects_bad_images(small_config):
    p = init_pyramid(small_config, (16, 16))
    with pytest.raises(ShapeError):
        pyramid_forward(np.zeros((1, 3, 12, 16), dtype=np.float32), p)
    with pytest.raises(ShapeError):
        pyramid_forward(np.zeros((1, 1, 16, 16), dtype=np.float32), p)


def test_zero_fuse_convs_zero_the_fused_levels(small_config):
    config = replace(small_config, variant="fpn", **PLAIN)
    levels = _levels(config)
    p = init_neck(Rng(3), config, (16, 16), "double")
    p = replace(p, fuse4=zero_weights(p.fuse4), fuse3=zero_weights(p.fuse3))
    out = fpn_fuse(levels, p)
    np.testing.assert_array_equal(out.p5, levels.p5)
    assert not out.p4.any() and not out.p3.any()


@pytest.mark.parametrize("placement", ["post_merge", "pre_merge"])
def test_identity_ham_reproduces_fpn_bitwise(small_config, placement):
    config = replace(small_config, ham_placement=placement)
    levels = _levels(config, precision="single")
    p = init_neck(Rng(4), config, (16, 16), "single")
    expected = fpn_fuse(levels, as_fpn(p))
    actual = hafpn_fuse(levels, p, block=lambda x: x)
    for x, y in zip(actual.as_tuple(), expected.as_tuple()):
        assert x.dtype == np.float32
        np.testing.assert_array_equal(x, y)


def test_pafpn_keeps_fpn_top_down_and_zero_bottom_up(small_config):
    fpn_config = replace(small_config, variant="fpn", **PLAIN)
    pafpn_config = replace(fpn_config, variant="pafpn")
    levels = _levels(fpn_config)
    top_down = fpn_fuse(levels, init_neck(Rng(5), fpn_config, (16, 16), "double"))
    p = init_neck(Rng(5), pafpn_config, (16, 16), "double")
    p = replace(p, down4=zero_weights(p.down4), down5=zero_weights(p.down5))
    out = pafpn_fuse(levels, p)
    np.testing.assert_array_equal(out.p3, top_down.p3)
    np.testing.assert_array_equal(out.p4, conv2d(top_down.p4, p.fuse_b4))
    np.testing.assert_array_equal(out.p5, conv2d(top_down.p5, p.fuse_b5))


def test_ablation_rows_run_on_fpn_and_pafpn(small_config):
    for variant in ("fpn", "pafpn"):
        for flags in ({"use_ca": False}, {}):
            config = replace(small_config, variant=variant, **flags)
            p = init_neck(Rng(6), config, (16, 16), "double")
            assert p.ham3 is not None and p.ham3.use_ca is config.use_ca
            levels = _levels(config)
            assert neck_forward(levels, p)[0].shapes == levels.shapes


def test_hafpn_without_attention_is_rejected():
    with pytest.raises(ConfigError):
        NeckConfig(variant="hafpn", use_emsa=False, use_ca=False)


def test_variant_mismatch(small_config):
    p = init_neck(Rng(0), small_config, (16, 16))
    with pytest.raises(ConfigError):
        fpn_fuse(_levels(small_config), p)


def test_neck_rejects_wrong_channels(small_config):
    p = init_neck(Rng(0), small_config, (16, 16), "double")
    with pytest.raises(ShapeError):
        neck_forward(_levels(replace(small_config, channels=4, heads=1)), p)


def test_no_backward_through_substituted_block(small_config):
    levels = _levels(small_config)
    p = init_neck(Rng(0), small_config, (16, 16), "double")
    out, cache = neck_forward(levels, p, block=lambda x: x)
    with pytest.raises(ValueError):
        neck_backward(out, cache)


def test_pyramid_backward_shapes(small_config):
    image = rand_uniform((1, 3, 16, 16), Rng(0), precision="double")
    p = init_pyramid(small_config, (16, 16), "double")
    out, cache = pyramid_forward(image, p)
    d_image, grads = pyramid_backward(out, cache)
    assert d_image.shape == image.shape
    assert grads.neck.ham3.emsa.qkv.weight.shape == p.neck.ham3.emsa.qkv.weight.shape


def test_fpn_identity_fuse_hand_trace(small_config):
    config = replace(small_config, variant="fpn", fuse_kernel=1, **PLAIN)
    levels = _levels(config)
    identity = Conv2dParams(weight=np.eye(8)[:, :, None, None], bias=np.zeros(8))
    p = replace(init_neck(Rng(0), config, (16, 16), "double"), fuse4=identity)
    p = replace(p, fuse3=identity)
    out = fpn_fuse(levels, p)
    o4 = levels.p4 + upsample_nearest_2x(levels.p5)
    np.testing.assert_allclose(out.p4, o4, atol=1e-15)
    np.testing.assert_allclose(
        out.p3, levels.p3 + upsample_nearest_2x(o4), atol=1e-15
    )


def test_hafpn_with_zero_hams_follows_hand_trace(small_config):
    levels = _levels(small_config)
    p = init_neck(Rng(8), small_config, (16, 16), "double")
    hams = {name: zero_weights(getattr(p, name)) for name in ("ham3", "ham4", "ham5")}
    p = replace(p, **hams)

    def zero_ham(x):
        norm = init_layer_norm(x.shape[1], precision="double")
        normed = layer_norm_channels(x, norm)
        return (0.25 * normed + normed) + x

    expected = hafpn_fuse(levels, p, block=zero_ham)
    for x, y in zip(hafpn_fuse(levels, p).as_tuple(), expected.as_tuple()):
        np.testing.assert_allclose(x, y, atol=1e-12)


def test_pafpn_zero_bottom_up_fuse_zeroes_n4_n5(small_config):
    config = replace(small_config, variant="pafpn", **PLAIN)
    levels = _levels(config)
    p = init_neck(Rng(9), config, (16, 16), "double")
    p = replace(p, fuse_b4=zero_weights(p.fuse_b4), fuse_b5=zero_weights(p.fuse_b5))
    out = pafpn_fuse(levels, p)
    assert not out.p4.any() and not out.p5.any()
    np.testing.assert_array_equal(out.p3, fpn_fuse(levels, as_fpn(p)).p3)


@settings(max_examples=20, deadline=None)
@given(
    st.sampled_from(["fpn", "pafpn", "hafpn"]),
    st.sampled_from(["add", "concat"]),
    st.sampled_from(["post_merge", "pre_merge"]),
    st.sampled_from([4, 8]),
    st.sampled_from([1, 2]),
    st.sampled_from([8, 16]),
    st.sampled_from([8, 24]),
)
def test_random_configs_preserve_level_shapes(
    variant, merge, placement, channels, heads, h, w
):
    config = NeckConfig(
        variant=variant,
        channels=channels,
        heads=heads,
        reduction=2,
        merge=merge,
        ham_placement=placement,
        backbone_widths=(4, 4, 8),
    )
    levels, _ = pyramid_forward(
        rand_uniform((1, 3, h, w), Rng(0)), init_pyramid(config, (h, w))
    )
    expected = tuple((1, channels, *size) for size in level_sizes(h, w))
    assert levels.shapes == expected
