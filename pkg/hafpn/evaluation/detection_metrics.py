"""Detection metrics: IoU matching, precision, recall, AP and mAP."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, NamedTuple, Sequence
from warnings import warn

import numpy as np
import pandas as pd

from hafpn.core.tensor import FormatError
from hafpn.data.typing import Box, DetBox, GtBox

__all__ = [
    "ApMode",
    "ClassMetrics",
    "EvalReport",
    "MatchResult",
    "average_precision",
    "evaluate",
    "iou",
    "match",
    "pr_curve",
    "precision",
    "recall",
]

_logger = logging.getLogger("hafpn")

ApMode = Literal["all_points", "101_point"]


def _check_box(box: Box) -> None:
    x1, y1, x2, y2 = box
    if not all(math.isfinite(v) for v in box):
        raise ValueError(f"Box {box} has non-finite coordinates.")
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"Degenerate box {box}, need x1 < x2 and y1 < y2.")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two corner boxes, 0 when disjoint."""
    _check_box(a)
    _check_box(b)
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


class MatchResult(NamedTuple):
    # indices into dets, score descending then det index
    order: list[int]
    # per det, in input order
    tp: list[bool]
    # per gt, in input order
    gt_matched: list[bool]


def match(
    dets: Sequence[DetBox], gts: Sequence[GtBox], iou_thr: float = 0.5
) -> MatchResult:
    """Greedy one-to-one matching of one image's detections of one class.

    Detections are visited by descending score (ties by index). Each takes
    the unmatched ground truth of highest IoU (ties to the lowest gt index)
    and is a true positive iff that IoU reaches ``iou_thr``.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    tp = [False] * len(dets)
    gt_matched = [False] * len(gts)
    for i in order:
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts):
            if gt_matched[j]:
                continue
            overlap = iou(dets[i].box, gt.box)
            if overlap > best_iou:
                best, best_iou = j, overlap
        if best >= 0 and best_iou >= iou_thr:
            tp[i] = True
            gt_matched[best] = True
    return MatchResult(order, tp, gt_matched)


def precision(tp: int, fp: int) -> float:
    """``TP / (TP + FP)``, 0 when there are no detections."""
    if tp < 0 or fp < 0:
        raise ValueError(f"Counts must be non-negative, got TP={tp}, FP={fp}.")
    return tp / (tp + fp) if tp + fp else 0.0


def recall(tp: int, fn: int) -> float:
    """``TP / (TP + FN)``, 0 when there is no ground truth."""
    if tp < 0 or fn < 0:
        raise ValueError(f"Counts must be non-negative, got TP={tp}, FN={fn}.")
    return tp / (tp + fn) if tp + fn else 0.0


def pr_curve(labels: Sequence[bool], num_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """Running precision and recall after each ranked detection."""
    hits = np.asarray(labels, dtype=bool)
    tp = np.cumsum(hits)
    ranks = np.arange(1, hits.size + 1)
    prec = tp / ranks
    rec = tp / num_gt if num_gt else np.zeros(hits.size)
    return prec, rec


def average_precision(
    labels: Sequence[bool], num_gt: int, mode: ApMode = "all_points"
) -> float:
    """Area under the precision envelope.

    :param Sequence[bool] labels: TP flags of detections sorted by score
    :param int num_gt: number of ground-truth boxes
    :param ApMode mode: ``all_points`` sums ``delta_recall * max precision
        at recall >= r`` over every recall step; ``101_point`` averages the
        envelope sampled at recall 0, 0.01, ..., 1
    :return float: AP in [0, 1], 0 without ground truth (with a warning)
    """
    if num_gt < 0:
        raise ValueError(f"Ground-truth count must be non-negative, got {num_gt}.")
    if num_gt == 0:
        warn("No ground truth for this class, AP is defined as 0.", stacklevel=2)
        return 0.0
    if len(labels) == 0:
        return 0.0
    prec, rec = pr_curve(labels, num_gt)
    # running maximum from the right
    envelope = np.maximum.accumulate(prec[::-1])[::-1]
    if mode == "all_points":
        steps = np.diff(rec, prepend=0.0)
        return float(np.sum(steps * envelope))
    if mode == "101_point":
        total = 0.0
        for r in np.linspace(0.0, 1.0, 101):
            reached = np.nonzero(rec >= r)[0]
            total += envelope[reached[0]] if reached.size else 0.0
        return total / 101
    raise ValueError(f"Unknown AP mode '{mode}'.")


@dataclass(frozen=True)
class ClassMetrics:
    class_id: int
    name: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    ap: float
    # ranked detections: score, TP flag, running precision and recall
    scores: tuple[float, ...] = ()
    labels: tuple[bool, ...] = ()

    @property
    def num_gt(self) -> int:
        return self.tp + self.fn

    def curve_frame(self) -> pd.DataFrame:
        prec, rec = pr_curve(self.labels, self.num_gt)
        return pd.DataFrame(
            {
                "rank": np.arange(1, len(self.labels) + 1),
                "score": np.asarray(self.scores, dtype=float),
                "tp": np.asarray(self.labels, dtype=bool),
                "precision": prec,
                "recall": rec,
            }
        )


@dataclass(frozen=True)
class EvalReport:
    """Per-class and overall detection metrics.

    ``precision.all``/``recall.all`` pool TP/FP/FN over classes;
    ``precision.macro``/``recall.macro`` average the per-class values;
    ``map.all`` is the unweighted mean of per-class AP.
    """

    classes: tuple[ClassMetrics, ...]
    iou_thr: float = 0.5
    mode: ApMode = "all_points"
    _by_id: dict[int, ClassMetrics] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {c.class_id: c for c in self.classes})

    def __getitem__(self, class_id: int) -> ClassMetrics:
        return self._by_id[class_id]

    @property
    def precision_all(self) -> float:
        tp = sum(c.tp for c in self.classes)
        return precision(tp, sum(c.fp for c in self.classes))

    @property
    def recall_all(self) -> float:
        tp = sum(c.tp for c in self.classes)
        return recall(tp, sum(c.fn for c in self.classes))

    @property
    def precision_macro(self) -> float:
        return _mean([c.precision for c in self.classes])

    @property
    def recall_macro(self) -> float:
        return _mean([c.recall for c in self.classes])

    @property
    def map(self) -> float:
        return _mean([c.ap for c in self.classes])

    def to_frame(self) -> pd.DataFrame:
        """One row per class plus the pooled ``all`` row."""
        rows = [
            {
                "class": c.name,
                "tp": c.tp,
                "fp": c.fp,
                "fn": c.fn,
                "precision": c.precision,
                "recall": c.recall,
                "ap": c.ap,
            }
            for c in self.classes
        ]
        rows.append(
            {
                "class": "all",
                "tp": sum(c.tp for c in self.classes),
                "fp": sum(c.fp for c in self.classes),
                "fn": sum(c.fn for c in self.classes),
                "precision": self.precision_all,
                "recall": self.recall_all,
                "ap": self.map,
            }
        )
        return pd.DataFrame(rows).set_index("class")

    def pr_curve_frame(self, class_id: int) -> pd.DataFrame:
        return self[class_id].curve_frame()

    def to_key_values(self) -> str:
        """Machine-readable ``key=value`` report, floats in shortest
        round-trip form."""
        lines = [
            f"iou_thr={self.iou_thr!r}",
            f"ap_mode={self.mode}",
            f"precision.all={self.precision_all!r}",
            f"recall.all={self.recall_all!r}",
            f"precision.macro={self.precision_macro!r}",
            f"recall.macro={self.recall_macro!r}",
            f"map.all={self.map!r}",
        ]
        for c in self.classes:
            lines += [
                f"class_id.{c.name}={c.class_id}",
                f"tp.{c.name}={c.tp}",
                f"fp.{c.name}={c.fp}",
                f"fn.{c.name}={c.fn}",
                f"precision.{c.name}={c.precision!r}",
                f"recall.{c.name}={c.recall!r}",
                f"ap.{c.name}={c.ap!r}",
            ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_key_values(cls, text: str, source: str = "<report>") -> "EvalReport":
        """Parse :py:meth:`to_key_values` output (curves are not stored)."""
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            key, sep, value = raw.partition("=")
            if not sep or not key:
                raise FormatError(
                    f"{source}:{lineno}: expected key=value, got '{raw}'."
                )
            values[key.strip()] = value.strip()
        try:
            names = [k.split(".", 1)[1] for k in values if k.startswith("class_id.")]
            classes = tuple(
                ClassMetrics(
                    class_id=int(values[f"class_id.{n}"]),
                    name=n,
                    tp=int(values[f"tp.{n}"]),
                    fp=int(values[f"fp.{n}"]),
                    fn=int(values[f"fn.{n}"]),
                    precision=float(values[f"precision.{n}"]),
                    recall=float(values[f"recall.{n}"]),
                    ap=float(values[f"ap.{n}"]),
                )
                for n in names
            )
            return cls(classes, float(values["iou_thr"]), values["ap_mode"])
        except (KeyError, ValueError) as e:
            raise FormatError(f"{source}: incomplete or invalid report ({e}).") from e


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def evaluate(
    dets: Iterable[DetBox],
    gts: Iterable[GtBox],
    classes: Mapping[int, str],
    iou_thr: float = 0.5,
    mode: ApMode = "all_points",
) -> EvalReport:
    """Match detections to ground truth per (image, class) and summarize.

    :param Iterable[DetBox] dets: detections of all images
    :param Iterable[GtBox] gts: ground truth of all images
    :param Mapping[int, str] classes: class table, id -> name
    :param float iou_thr: IoU a detection needs to count as TP
    :param ApMode mode: AP integration mode
    :raises ValueError: detection or ground truth of an unknown class
    :return EvalReport: metrics for every class of the table
    """
    if not 0 < iou_thr <= 1:
        raise ValueError(f"IoU threshold must be in (0, 1], got {iou_thr}.")
    if mode not in ("all_points", "101_point"):
        raise ValueError(f"Unknown AP mode '{mode}'.")
    dets, gts = list(dets), list(gts)
    for kind, boxes in (("Detection", dets), ("Ground truth", gts)):
        for box in boxes:
            if box.class_id not in classes:
                raise ValueError(
                    f"{kind} in image '{box.image_id}' has unknown class "
                    f"{box.class_id}, known: {sorted(classes)}."
                )
            _check_box(box.box)
    for d in dets:
        if not 0 <= d.score <= 1:
            raise ValueError(f"Detection score {d.score} is outside [0, 1].")
    if not dets:
        _logger.warning("No detections to evaluate.")

    grouped_dets: dict[tuple[int, str], list[int]] = defaultdict(list)
    grouped_gts: dict[tuple[int, str], list[GtBox]] = defaultdict(list)
    for i, d in enumerate(dets):
        grouped_dets[d.class_id, d.image_id].append(i)
    for g in gts:
        grouped_gts[g.class_id, g.image_id].append(g)

    is_tp = [False] * len(dets)
    matched_gts: dict[int, int] = defaultdict(int)
    for key, det_ids in grouped_dets.items():
        result = match([dets[i] for i in det_ids], grouped_gts.get(key, []), iou_thr)
        for local, flag in enumerate(result.tp):
            is_tp[det_ids[local]] = flag
        matched_gts[key[0]] += sum(result.gt_matched)

    num_gts: dict[int, int] = defaultdict(int)
    for g in gts:
        num_gts[g.class_id] += 1

    metrics = []
    for class_id in sorted(classes):
        ranked = sorted(
            (i for i, d in enumerate(dets) if d.class_id == class_id),
            key=lambda i: (-dets[i].score, i),
        )
        labels = tuple(is_tp[i] for i in ranked)
        tp = sum(labels)
        fp = len(labels) - tp
        fn = num_gts[class_id] - matched_gts[class_id]
        metrics.append(
            ClassMetrics(
                class_id=class_id,
                name=classes[class_id],
                tp=tp,
                fp=fp,
                fn=fn,
                precision=precision(tp, fp),
                recall=recall(tp, fn),
                ap=average_precision(labels, num_gts[class_id], mode),
                scores=tuple(dets[i].score for i in ranked),
                labels=labels,
            )
        )
    return EvalReport(tuple(metrics), iou_thr, mode)
