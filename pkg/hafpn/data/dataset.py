"""Dataset index, class table, annotation and detection files, and the
seeded train/val/test split.

File formats (whitespace separated, one record per line):

* index: ``image_id width height annotation_path``
* class table: ``class_id name``
* annotation: ``class_id cx cy w h``, center box normalized to [0, 1]
* detections: ``image_id class_id score x1 y1 x2 y2`` in pixels
"""

import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from hafpn.core.random import Rng
from hafpn.core.tensor import FormatError
from hafpn.data.typing import (
    Annotation,
    DatasetIndex,
    DetBox,
    GtBox,
    IndexEntry,
    Split,
    SplitSpec,
)

__all__ = [
    "DEFAULT_CLASSES",
    "annotation_to_box",
    "box_to_annotation",
    "format_annotations",
    "format_detections",
    "load_ground_truth",
    "parse_annotation_file",
    "parse_annotations",
    "parse_detections",
    "read_class_table",
    "read_detections",
    "read_index",
    "split_dataset",
    "write_detections",
    "write_split",
]

_logger = logging.getLogger("hafpn")

DEFAULT_CLASSES = {0: "insufficient", 1: "shifting"}

# accepted spellings -> canonical class name
_CLASS_ALIASES = {"ineffective": "insufficient", "foot_shifting": "shifting"}

T = TypeVar("T")


def _records(
    text: str, fields: int, parse: Callable[[list[str]], T], source: str
) -> list[T]:
    """Split ``text`` into whitespace-separated records of ``fields`` tokens;
    blank lines are skipped and every failure names ``source`` and line."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != fields:
            raise FormatError(
                f"{source}:{lineno}: expected {fields} fields, got {len(tokens)}."
            )
        try:
            records.append(parse(tokens))
        except ValueError as e:
            raise FormatError(f"{source}:{lineno}: {e}") from e
    return records


def _finite(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(f"'{token}' is not a finite number")
    return value


def read_class_table(path: str | Path) -> dict[int, str]:
    """``class_id name`` lines; ``ineffective`` is read as ``insufficient``."""
    path = Path(path)

    def parse(tokens: list[str]) -> tuple[int, str]:
        name = tokens[1].lower()
        return int(tokens[0]), _CLASS_ALIASES.get(name, name)

    table: dict[int, str] = {}
    for class_id, name in _records(path.read_text(), 2, parse, str(path)):
        if class_id in table:
            raise FormatError(f"{path}: class id {class_id} is listed twice.")
        table[class_id] = name
    if not table:
        raise FormatError(f"{path}: empty class table.")
    return table


def read_index(
    path: str | Path, class_table: str | Path | None = None
) -> DatasetIndex:
    """Read a dataset index.

    :param str | Path path: index file
    :param str | Path | None class_table: class table file, defaults to
        None (insufficient = 0, shifting = 1)
    :return DatasetIndex: entries with annotation paths resolved against
        the index file's directory
    """
    path = Path(path)

    def parse(tokens: list[str]) -> IndexEntry:
        width, height = int(tokens[1]), int(tokens[2])
        if width < 1 or height < 1:
            raise ValueError(f"dimensions must be positive, got {width}x{height}")
        annotation = Path(tokens[3])
        if not annotation.is_absolute():
            annotation = path.parent / annotation
        return IndexEntry(tokens[0], width, height, str(annotation))

    entries = _records(path.read_text(), 4, parse, str(path))
    seen: set[str] = set()
    for entry in entries:
        if entry.image_id in seen:
            raise FormatError(f"{path}: duplicate image id '{entry.image_id}'.")
        seen.add(entry.image_id)
    classes = read_class_table(class_table) if class_table else dict(DEFAULT_CLASSES)
    _logger.debug(f"Read {len(entries)} images and {len(classes)} classes.")
    return DatasetIndex(entries, classes)


def _parse_annotation(tokens: list[str]) -> Annotation:
    class_id = int(tokens[0])
    if class_id < 0:
        raise ValueError(f"class id must be non-negative, got {class_id}")
    cx, cy, w, h = (_finite(t) for t in tokens[1:])
    for name, value in (("cx", cx), ("cy", cy), ("w", w), ("h", h)):
        if not 0 <= value <= 1:
            raise ValueError(f"{name}={value} is outside [0, 1]")
    if w == 0 or h == 0:
        raise ValueError(f"box has zero extent (w={w}, h={h})")
    return Annotation(class_id, cx, cy, w, h)


def parse_annotations(text: str, source: str = "<annotations>") -> list[Annotation]:
    return _records(text, 5, _parse_annotation, source)


def format_annotations(annotations: Iterable[Annotation]) -> str:
    """Inverse of :py:func:`parse_annotations`, floats in round-trip form."""
    return "".join(
        f"{a.class_id} {a.cx!r} {a.cy!r} {a.w!r} {a.h!r}\n" for a in annotations
    )


def annotation_to_box(
    a: Annotation, image_id: str, width: int, height: int
) -> GtBox:
    return GtBox(
        image_id,
        a.class_id,
        (a.cx - a.w / 2) * width,
        (a.cy - a.h / 2) * height,
        (a.cx + a.w / 2) * width,
        (a.cy + a.h / 2) * height,
    )


def box_to_annotation(box: GtBox, width: int, height: int) -> Annotation:
    return Annotation(
        box.class_id,
        (box.x1 + box.x2) / 2 / width,
        (box.y1 + box.y2) / 2 / height,
        (box.x2 - box.x1) / width,
        (box.y2 - box.y1) / height,
    )


def parse_annotation_file(
    path: str | Path, width: int, height: int, image_id: str | None = None
) -> list[GtBox]:
    """Ground-truth boxes in pixel corners for one image.

    :param str | Path path: annotation file
    :param int width: image width in pixels
    :param int height: image height in pixels
    :param str | None image_id: defaults to the file stem
    :return list[GtBox]: boxes in file order
    """
    path = Path(path)
    image_id = path.stem if image_id is None else image_id
    return [
        annotation_to_box(a, image_id, width, height)
        for a in parse_annotations(path.read_text(), str(path))
    ]


def load_ground_truth(index: DatasetIndex) -> list[GtBox]:
    boxes = []
    for entry in index.entries:
        for box in parse_annotation_file(
            entry.annotation_path, entry.width, entry.height, entry.image_id
        ):
            if box.class_id not in index.classes:
                raise FormatError(
                    f"{entry.annotation_path}: unknown class {box.class_id}."
                )
            boxes.append(box)
    return boxes


def _parse_detection(tokens: list[str]) -> DetBox:
    score = _finite(tokens[2])
    if not 0 <= score <= 1:
        raise ValueError(f"score {score} is outside [0, 1]")
    x1, y1, x2, y2 = (_finite(t) for t in tokens[3:])
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"degenerate box ({x1}, {y1}, {x2}, {y2})")
    return DetBox(tokens[0], int(tokens[1]), score, x1, y1, x2, y2)


def parse_detections(text: str, source: str = "<detections>") -> list[DetBox]:
    return _records(text, 7, _parse_detection, source)


def read_detections(path: str | Path) -> list[DetBox]:
    path = Path(path)
    dets = parse_detections(path.read_text(), str(path))
    if not dets:
        _logger.warning(f"{path} holds no detections.")
    return dets


def format_detections(dets: Iterable[DetBox]) -> str:
    return "".join(
        f"{d.image_id} {d.class_id} {d.score!r} "
        f"{d.x1!r} {d.y1!r} {d.x2!r} {d.y2!r}\n"
        for d in dets
    )


def write_detections(path: str | Path, dets: Iterable[DetBox]) -> None:
    Path(path).write_text(format_detections(dets))


def _exact_fraction(value: float, name: str) -> Fraction:
    # decimal text of the float, so 0.1 is 1/10 rather than its binary value
    fraction = Fraction(str(value))
    if not 0 <= fraction <= 1:
        raise ValueError(f"{name} fraction {value} is outside [0, 1].")
    return fraction


def split_dataset(ids: DatasetIndex | Sequence[str], spec: SplitSpec) -> Split:
    """Seeded train/val/test partition.

    Sizes are ``floor(n * f)`` per part; the leftover ids go one each to
    train, val, test, train, ... Fractions must sum to exactly 1 as decimals.

    :param DatasetIndex | Sequence[str] ids: image ids, order is significant
    :param SplitSpec spec: fractions and shuffle seed
    :return Split: disjoint id lists covering the input
    """
    if isinstance(ids, DatasetIndex):
        ids = ids.ids
    ids = list(ids)
    if not ids:
        raise ValueError("Cannot split an empty dataset.")
    if len(set(ids)) != len(ids):
        raise ValueError("Image ids must be unique.")
    fractions = [
        _exact_fraction(f, name)
        for f, name in ((spec.train, "train"), (spec.val, "val"), (spec.test, "test"))
    ]
    if sum(fractions) != 1:
        raise ValueError(
            f"Split fractions {spec.train}/{spec.val}/{spec.test} do not sum to 1."
        )
    n = len(ids)
    sizes = [math.floor(n * f) for f in fractions]
    for i in range(n - sum(sizes)):
        sizes[i % 3] += 1
    order = Rng(spec.seed).permutation(n)
    shuffled = [ids[i] for i in order]
    train_end, val_end = sizes[0], sizes[0] + sizes[1]
    split = Split(
        shuffled[:train_end], shuffled[train_end:val_end], shuffled[val_end:]
    )
    sizes_text = "/".join(str(len(part)) for part in split)
    _logger.info(f"Split {n} images into {sizes_text}.")
    return split


def write_split(split: Split, out_dir: str | Path) -> list[Path]:
    """Write ``train.txt``, ``val.txt`` and ``test.txt``, one id per line."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, part in split._asdict().items():
        path = out_dir / f"{name}.txt"
        path.write_text("".join(f"{image_id}\n" for image_id in part))
        paths.append(path)
    return paths
