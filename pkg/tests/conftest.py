import logging
from pathlib import Path

import numpy as np
from pytest import TempPathFactory, fixture

from hafpn.core.random import Rng, rand_uniform
from hafpn.data.synthetic import make_defect_samples, write_defect_dataset
from hafpn.data.typing import DetBox, GtBox
from hafpn.utils.config import NeckConfig

classes = {0: "insufficient", 1: "shifting"}


@fixture(autouse=True)
def restore_logger():
    """``setup_logger`` detaches the package logger; give caplog it back."""
    logger = logging.getLogger("hafpn")
    handlers, level, propagate = logger.handlers[:], logger.level, logger.propagate
    yield
    for handler in logger.handlers:
        if handler not in handlers:
            handler.close()
    logger.handlers = handlers
    logger.setLevel(level)
    logger.propagate = propagate


@fixture(scope="function")
def rng() -> Rng:
    return Rng(1234)


@fixture(scope="session")
def small_config() -> NeckConfig:
    """Desk-sized HAFPN with both attention branches."""
    return NeckConfig(channels=8, backbone_widths=(4, 8, 8), heads=2, reduction=4)


@fixture(scope="function")
def small_image() -> np.ndarray:
    return rand_uniform((1, 3, 16, 16), Rng(7))


@fixture(scope="session")
def two_class_fixture() -> tuple[list[DetBox], list[GtBox]]:
    """Two images, two classes, with misses, duplicates and a false alarm."""
    gts = [
        GtBox("a", 0, 0.0, 0.0, 10.0, 10.0),
        GtBox("a", 0, 20.0, 20.0, 30.0, 30.0),
        GtBox("a", 1, 40.0, 0.0, 44.0, 20.0),
        GtBox("b", 0, 5.0, 5.0, 15.0, 15.0),
        GtBox("b", 1, 0.0, 30.0, 20.0, 34.0),
    ]
    dets = [
        DetBox("a", 0, 0.9, 0.0, 0.0, 10.0, 10.0),
        # duplicate of the first box
        DetBox("a", 0, 0.8, 1.0, 1.0, 10.0, 10.0),
        DetBox("a", 0, 0.3, 21.0, 21.0, 31.0, 31.0),
        DetBox("a", 1, 0.7, 40.0, 1.0, 44.0, 21.0),
        DetBox("b", 0, 0.6, 50.0, 50.0, 60.0, 60.0),
        DetBox("b", 1, 0.95, 0.0, 30.0, 20.0, 34.0),
        DetBox("b", 1, 0.2, 30.0, 30.0, 40.0, 40.0),
    ]
    return dets, gts


@fixture(scope="session")
def synthetic_dataset(tmp_path_factory: TempPathFactory) -> Path:
    """Dataset directory written by the synthetic generator."""
    out_dir = tmp_path_factory.mktemp("synthetic")
    write_defect_dataset(make_defect_samples(4, (32, 32), seed=3), out_dir)
    return out_dir
