"""Synthetic defect images for desk-scale runs.

Each image is dim noise with a few bright rectangles: compact ones are
``insufficient`` (class 0), elongated ones ``shifting`` (class 1).
"""

import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from hafpn.core.random import Rng
from hafpn.core.tensor import Tensor, _frozen
from hafpn.data.dataset import DEFAULT_CLASSES, box_to_annotation, format_annotations
from hafpn.data.tensor_io import save_tensor
from hafpn.data.typing import DatasetIndex, GtBox, IndexEntry

__all__ = ["SyntheticSample", "make_defect_samples", "write_defect_dataset"]

_logger = logging.getLogger("hafpn")

# (short side range, long side range) in pixels, per class
_SHAPES = {0: ((4, 6), (4, 6)), 1: ((2, 3), (8, 12))}


class SyntheticSample(NamedTuple):
    image_id: str
    # (1, 3, H, W) single precision
    image: Tensor
    boxes: list[GtBox]


def _place(
    rng: Rng, occupied: np.ndarray, h: int, w: int, attempts: int = 50
) -> tuple[int, int] | None:
    height, width = occupied.shape
    for _ in range(attempts):
        y = int(rng.integers(0, height - h + 1))
        x = int(rng.integers(0, width - w + 1))
        # one pixel of clearance so blobs stay separate components
        y0, x0 = max(y - 1, 0), max(x - 1, 0)
        if not occupied[y0 : y + h + 1, x0 : x + w + 1].any():
            return y, x
    return None


def make_defect_samples(
    num_images: int,
    size: tuple[int, int] = (32, 32),
    max_defects: int = 3,
    seed: int = 0,
) -> list[SyntheticSample]:
    """Seeded synthetic images with matching ground truth.

    :param int num_images: number of images
    :param tuple[int, int] size: (H, W), multiples of 8 for the backbone
    :param int max_defects: at most this many blobs per image (at least one)
    :param int seed: generator seed
    :return list[SyntheticSample]: images ``img0000``, ``img0001``, ...
    """
    if num_images < 1 or max_defects < 1:
        raise ValueError(
            f"Need at least one image and defect, got {num_images}, {max_defects}."
        )
    height, width = size
    rng = Rng(seed)
    samples = []
    for index in range(num_images):
        image_id = f"img{index:04d}"
        image = 0.1 * rng.uniform((3, height, width))
        occupied = np.zeros((height, width), dtype=bool)
        boxes = []
        for _ in range(int(rng.integers(1, max_defects + 1))):
            class_id = int(rng.integers(0, 2))
            (short_lo, short_hi), (long_lo, long_hi) = _SHAPES[class_id]
            short = int(rng.integers(short_lo, short_hi + 1))
            long = int(rng.integers(long_lo, long_hi + 1))
            h, w = (short, long) if rng.uniform((1,))[0] < 0.5 else (long, short)
            spot = _place(rng, occupied, h, w)
            if spot is None:
                continue
            y, x = spot
            occupied[y : y + h, x : x + w] = True
            image[:, y : y + h, x : x + w] = 0.8 + 0.2 * rng.uniform((3, h, w))
            corners = (float(x), float(y), float(x + w), float(y + h))
            boxes.append(GtBox(image_id, class_id, *corners))
        image = _frozen(image[None].astype(np.float32))
        samples.append(SyntheticSample(image_id, image, boxes))
    return samples


def write_defect_dataset(
    samples: list[SyntheticSample], out_dir: str | Path
) -> DatasetIndex:
    """Write ``index.txt``, ``classes.txt``, ``labels/<id>.txt`` and
    ``images/<id>.htsr``."""
    out_dir = Path(out_dir)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    entries = []
    for sample in samples:
        _, _, height, width = sample.image.shape
        label_path = Path("labels") / f"{sample.image_id}.txt"
        (out_dir / label_path).write_text(
            format_annotations(
                box_to_annotation(box, width, height) for box in sample.boxes
            )
        )
        save_tensor(out_dir / "images" / f"{sample.image_id}.htsr", sample.image)
        entries.append(IndexEntry(sample.image_id, width, height, str(label_path)))
    (out_dir / "index.txt").write_text(
        "".join(
            f"{e.image_id} {e.width} {e.height} {e.annotation_path}\n"
            for e in entries
        )
    )
    (out_dir / "classes.txt").write_text(
        "".join(f"{k} {v}\n" for k, v in DEFAULT_CLASSES.items())
    )
    _logger.info(f"Wrote {len(samples)} synthetic images to {out_dir}.")
    return DatasetIndex(
        [e._replace(annotation_path=str(out_dir / e.annotation_path)) for e in entries],
        dict(DEFAULT_CLASSES),
    )
