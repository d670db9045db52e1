"""Wall-clock timing of backbone + neck forward passes."""

import logging
import time
from dataclasses import replace
from typing import Sequence

import numpy as np
import pandas as pd

from hafpn.core.random import Rng, rand_uniform
from hafpn.networks.pyramid import init_pyramid, pyramid_forward
from hafpn.utils.config import NeckConfig

__all__ = ["bench_forward", "variant_config"]

_logger = logging.getLogger("hafpn")


def variant_config(config: NeckConfig, variant: str) -> NeckConfig:
    """``config`` as the given neck: plain FPN/PAFPN, or HAFPN with the
    configured attention branches (both when none are set)."""
    if variant == "hafpn":
        if config.ham_enabled:
            return replace(config, variant=variant)
        return replace(config, variant=variant, use_emsa=True, use_ca=True)
    return replace(config, variant=variant, use_emsa=False, use_ca=False)


def bench_forward(
    config: NeckConfig,
    input_shape: tuple[int, int, int, int] = (1, 3, 32, 32),
    repeat: int = 5,
    variants: Sequence[str] = ("fpn", "pafpn", "hafpn"),
) -> pd.DataFrame:
    """Mean and standard deviation of the forward time per variant.

    Timings depend on the machine and load; nothing is asserted about them.

    :return pd.DataFrame: indexed by variant, columns ``mean_s``, ``std_s``,
        ``repeat``
    """
    if repeat < 1:
        raise ValueError(f"repeat must be at least 1, got {repeat}.")
    image = rand_uniform(input_shape, Rng(config.seed))
    rows = []
    for variant in variants:
        params = init_pyramid(variant_config(config, variant), input_shape[2:])
        times = []
        for _ in range(repeat):
            start = time.perf_counter()
            pyramid_forward(image, params)
            times.append(time.perf_counter() - start)
        rows.append(
            {
                "variant": variant,
                "mean_s": float(np.mean(times)),
                "std_s": float(np.std(times)),
                "repeat": repeat,
            }
        )
        _logger.debug(f"{variant}: {rows[-1]['mean_s']:.4f} s per forward")
    return pd.DataFrame(rows).set_index("variant")
