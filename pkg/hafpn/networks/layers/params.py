"""Learnable parameter bundles and their seeded initialization."""

import math
from dataclasses import dataclass

import numpy as np

from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import Precision, ShapeError, Tensor, ones, zeros
from hafpn.core.tree import map_tensors

__all__ = [
    "Conv2dParams",
    "LayerNormParams",
    "LinearParams",
    "MlpParams",
    "init_conv2d",
    "init_dwconv3x3",
    "init_layer_norm",
    "init_linear",
    "init_mlp",
    "zero_weights",
]


@dataclass(frozen=True)
class Conv2dParams:
    """Convolution weights.

    :param Tensor weight: (out_channels, in_channels // groups, kH, kW)
    :param Tensor | None bias: (out_channels,), defaults to None
    :param int stride: defaults to 1
    :param int padding: zero padding on every side, defaults to 0
    :param int groups: defaults to 1, depthwise when equal to in_channels
    """

    weight: Tensor
    bias: Tensor | None = None
    stride: int = 1
    padding: int = 0
    groups: int = 1

    def __post_init__(self) -> None:
        if self.weight.ndim != 4:
            raise ShapeError(f"Conv weight must be 4-D, got {self.weight.shape}.")
        if self.groups < 1 or self.stride < 1 or self.padding < 0:
            raise ValueError(
                f"Invalid conv settings: groups={self.groups}, "
                f"stride={self.stride}, padding={self.padding}."
            )
        if self.out_channels % self.groups != 0:
            raise ShapeError(
                f"Output channels {self.out_channels} not divisible by "
                f"groups {self.groups}."
            )
        if self.bias is not None and self.bias.shape != (self.out_channels,):
            raise ShapeError(
                f"Conv bias shape {self.bias.shape} does not match "
                f"{self.out_channels} output channels."
            )

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]


@dataclass(frozen=True)
class LinearParams:
    """:param Tensor weight: (out_features, in_features)
    :param Tensor | None bias: (out_features,)"""

    weight: Tensor
    bias: Tensor | None = None

    def __post_init__(self) -> None:
        if self.weight.ndim != 2:
            raise ShapeError(f"Linear weight must be 2-D, got {self.weight.shape}.")
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"Linear bias shape {self.bias.shape} does not match "
                f"weight {self.weight.shape}."
            )

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class LayerNormParams:
    gamma: Tensor
    beta: Tensor
    eps: float = 1e-5

    def __post_init__(self) -> None:
        if self.gamma.ndim != 1 or self.gamma.shape != self.beta.shape:
            raise ShapeError(
                f"LayerNorm gamma {self.gamma.shape} and beta {self.beta.shape} "
                "must be matching vectors."
            )
        if not self.eps > 0:
            raise ValueError(f"LayerNorm eps must be positive, got {self.eps}.")

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class MlpParams:
    """Two-layer perceptron: ``project(silu(expand(x)))``."""

    expand: LinearParams
    project: LinearParams
    hidden_ratio: float = 2.0

    def __post_init__(self) -> None:
        if self.expand.out_features != self.project.in_features:
            raise ShapeError(
                f"MLP hidden width mismatch: expand gives {self.expand.out_features}, "
                f"project takes {self.project.in_features}."
            )
        if not self.hidden_ratio > 0:
            raise ValueError(f"Hidden ratio must be positive, got {self.hidden_ratio}.")

    @property
    def features(self) -> int:
        return self.expand.in_features


def _uniform_fan_in(
    shape: tuple[int, ...], fan_in: int, rng: Rng, precision: Precision
) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return rand_uniform(shape, rng, -bound, bound, precision=precision)


def init_conv2d(
    rng: Rng,
    in_channels: int,
    out_channels: int,
    kernel_size: int = 1,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
    bias: bool = True,
    precision: Precision = "single",
) -> Conv2dParams:
    """Seeded uniform init in ``[-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
    if in_channels % groups != 0:
        raise ShapeError(
            f"Input channels {in_channels} not divisible by groups {groups}."
        )
    fan_in = in_channels // groups * kernel_size**2
    shape = (out_channels, in_channels // groups, kernel_size, kernel_size)
    return Conv2dParams(
        weight=_uniform_fan_in(shape, fan_in, rng, precision),
        bias=_uniform_fan_in((out_channels,), fan_in, rng, precision) if bias else None,
        stride=stride,
        padding=padding,
        groups=groups,
    )


def init_dwconv3x3(
    rng: Rng, channels: int, precision: Precision = "single"
) -> Conv2dParams:
    return init_conv2d(
        rng, channels, channels, 3, padding=1, groups=channels, precision=precision
    )


def init_linear(
    rng: Rng,
    in_features: int,
    out_features: int,
    bias: bool = True,
    precision: Precision = "single",
) -> LinearParams:
    return LinearParams(
        weight=_uniform_fan_in(
            (out_features, in_features), in_features, rng, precision
        ),
        bias=(
            _uniform_fan_in((out_features,), in_features, rng, precision)
            if bias
            else None
        ),
    )


def init_layer_norm(
    channels: int, eps: float = 1e-5, precision: Precision = "single"
) -> LayerNormParams:
    return LayerNormParams(
        gamma=ones((channels,), precision), beta=zeros((channels,), precision), eps=eps
    )


def init_mlp(
    rng: Rng,
    features: int,
    hidden_ratio: float = 2.0,
    precision: Precision = "single",
) -> MlpParams:
    hidden = max(1, round(features * hidden_ratio))
    return MlpParams(
        expand=init_linear(rng, features, hidden, precision=precision),
        project=init_linear(rng, hidden, features, precision=precision),
        hidden_ratio=hidden_ratio,
    )


def zero_weights(bundle):
    """Zero every convolution/linear weight and bias.

    Layer-norm ``gamma``/``beta`` keep their values, so normalization
    still normalizes.
    """

    def _zero(name: str, tensor: np.ndarray) -> np.ndarray:
        if name.rsplit(".", 1)[-1] in ("weight", "bias"):
            return np.zeros_like(tensor)
        return tensor

    return map_tensors(_zero, bundle)
