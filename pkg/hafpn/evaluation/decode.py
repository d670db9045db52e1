"""Turn activation-magnitude maps into scored boxes.

Stands in for a detection head at desk scale: the normalized magnitude map
is thresholded, connected regions become boxes, and the box shape decides
the class.
"""

import logging

import numpy as np
from skimage.measure import label, regionprops

from hafpn.core.tensor import ShapeError
from hafpn.data.typing import DetBox

__all__ = ["decode_boxes"]

_logger = logging.getLogger("hafpn")


def decode_boxes(
    magnitude: np.ndarray,
    image_size: tuple[int, int],
    image_id: str,
    threshold: float = 0.5,
    elongation: float = 2.0,
) -> list[DetBox]:
    """Boxes from one (H', W') activation-magnitude map.

    :param np.ndarray magnitude: non-negative map at feature resolution
    :param tuple[int, int] image_size: (H, W) of the image, for scaling
    :param str image_id: id written into the detections
    :param float threshold: fraction of the map's range a pixel must reach
    :param float elongation: long/short side ratio from which a region is
        class 1 (``shifting``) instead of class 0 (``insufficient``)
    :return list[DetBox]: one detection per connected region, scored by the
        region's mean normalized magnitude
    """
    if magnitude.ndim != 2:
        raise ShapeError(f"Expected a 2-D map, got {magnitude.shape}.")
    lo, hi = float(magnitude.min()), float(magnitude.max())
    if hi == lo:
        return []
    normalized = (magnitude - lo) / (hi - lo)
    scale_y = image_size[0] / magnitude.shape[0]
    scale_x = image_size[1] / magnitude.shape[1]
    dets = []
    regions = regionprops(label(normalized >= threshold), intensity_image=normalized)
    for region in regions:
        min_row, min_col, max_row, max_col = region.bbox
        h, w = max_row - min_row, max_col - min_col
        class_id = int(max(h, w) / min(h, w) >= elongation)
        score = float(np.clip(region.intensity_mean, 0.0, 1.0))
        dets.append(
            DetBox(
                image_id,
                class_id,
                score,
                min_col * scale_x,
                min_row * scale_y,
                max_col * scale_x,
                max_row * scale_y,
            )
        )
    _logger.debug(f"{image_id}: decoded {len(dets)} boxes.")
    return dets
