"""Activation-magnitude heatmaps of feature maps."""

import logging
from pathlib import Path

import matplotlib
import numpy as np

from hafpn.core.tensor import ShapeError, Tensor, check_finite

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "activation_magnitude",
    "encode_pgm",
    "to_gray",
    "write_pgm",
    "write_png",
]

_logger = logging.getLogger("hafpn")


def activation_magnitude(features: Tensor) -> np.ndarray:
    """Mean absolute activation over channels.

    :param Tensor features: (1, C, H, W)
    :return np.ndarray: float64 map (H, W)
    :raises NonFiniteError: NaN or infinite activations
    """
    if features.ndim != 4 or features.shape[0] != 1:
        raise ShapeError(f"Heatmaps need a (1, C, H, W) tensor, got {features.shape}.")
    check_finite(features, "heatmap features")
    return np.abs(np.asarray(features[0], dtype=np.float64)).mean(axis=0)


def to_gray(magnitude: np.ndarray) -> np.ndarray:
    """Min-max scale to 0..255; a constant map becomes mid-gray 128."""
    lo, hi = float(magnitude.min()), float(magnitude.max())
    if hi == lo:
        return np.full(magnitude.shape, 128, dtype=np.uint8)
    return np.rint((magnitude - lo) / (hi - lo) * 255).astype(np.uint8)


def encode_pgm(gray: np.ndarray) -> bytes:
    """Binary graymap: ``P5\\n<W> <H>\\n255\\n`` then row-major bytes."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ShapeError(f"PGM needs a 2-D uint8 image, got {gray.dtype}{gray.shape}.")
    height, width = gray.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + gray.tobytes(order="C")


def write_pgm(path: str | Path, features: Tensor) -> np.ndarray:
    gray = to_gray(activation_magnitude(features))
    Path(path).write_bytes(encode_pgm(gray))
    return gray


def write_png(path: str | Path, features: Tensor, colormap: str = "viridis") -> None:
    """Colour rendering of the same normalized map."""
    gray = to_gray(activation_magnitude(features))
    plt.imsave(path, gray, cmap=colormap, vmin=0, vmax=255)
    _logger.debug(f"Wrote {colormap} heatmap {gray.shape} to {path}.")
