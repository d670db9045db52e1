from typing import NamedTuple

# (x1, y1, x2, y2) in pixels
Box = tuple[float, float, float, float]


class GtBox(NamedTuple):
    """Ground-truth box in pixel corners."""

    image_id: str
    class_id: int
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def box(self) -> Box:
        return self.x1, self.y1, self.x2, self.y2


class DetBox(NamedTuple):
    """Scored detection in pixel corners."""

    image_id: str
    class_id: int
    score: float
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def box(self) -> Box:
        return self.x1, self.y1, self.x2, self.y2


class IndexEntry(NamedTuple):
    """One image of a dataset index."""

    image_id: str
    width: int
    height: int
    # relative paths resolve against the index file's directory
    annotation_path: str


class DatasetIndex(NamedTuple):
    entries: list[IndexEntry]
    # class id -> canonical name
    classes: dict[int, str]

    @property
    def ids(self) -> list[str]:
        return [e.image_id for e in self.entries]


class SplitSpec(NamedTuple):
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0


class Split(NamedTuple):
    train: list[str]
    val: list[str]
    test: list[str]


class Annotation(NamedTuple):
    """One annotation line: class and normalized center box."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float
