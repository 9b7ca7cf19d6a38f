"""Evaluation metrics for subject selection and crop trajectories.

Image-level metrics compare one predicted box against the ground-truth
subject boxes of that image (best match wins, so any main subject counts).
Video-level metrics score a crop-window trajectory: average center error,
accumulated jitter, and how much of each frame's crop is subject coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MetricError
from .geometry import BBox, intersect_area, iou


# ---------------------------------------------------------------------------
# image-level


def max_iou(pred: BBox, gts: Sequence[BBox]) -> float:
    """Best overlap between the prediction and any ground-truth box."""
    if not gts:
        raise MetricError("max_iou needs at least one ground-truth box")
    return max(iou(pred, g) for g in gts)


def min_cdr(pred: BBox, gts: Sequence[BBox], frame_width: float) -> float:
    """Smallest center distance to any ground-truth box, over frame width."""
    if not gts:
        raise MetricError("min_cdr needs at least one ground-truth box")
    if frame_width <= 0:
        raise MetricError(f"frame width must be positive, got {frame_width}")
    px, py = pred.center()
    best = math.inf
    for g in gts:
        gx, gy = g.center()
        best = min(best, math.hypot(px - gx, py - gy))
    return best / frame_width


def min_bde(pred: BBox, gts: Sequence[BBox], frame: tuple[float, float]) -> float:
    """Smallest mean displacement of the four box edges, per-axis normalized.

    Left/right offsets are divided by frame width, top/bottom by frame
    height, then the four are averaged.
    """
    if not gts:
        raise MetricError("min_bde needs at least one ground-truth box")
    w, h = frame
    if w <= 0 or h <= 0:
        raise MetricError(f"frame dimensions must be positive, got {frame}")
    best = math.inf
    for g in gts:
        d = (
            abs(pred.x - g.x) / w
            + abs(pred.right - g.right) / w
            + abs(pred.y - g.y) / h
            + abs(pred.bottom - g.bottom) / h
        ) / 4.0
        best = min(best, d)
    return best


def map_at(max_ious: Sequence[float], threshold: float = 0.5) -> float:
    """Fraction of images whose best overlap reaches the threshold."""
    if not max_ious:
        raise MetricError("map_at needs at least one per-image result")
    hits = sum(1 for v in max_ious if v >= threshold)
    return hits / len(max_ious)


# ---------------------------------------------------------------------------
# video-level


def jdr(centers: Sequence[tuple[float, float]], frame_width: float) -> float:
    """Accumulated frame-to-frame center displacement over frame width.

    This is a sum over the T-1 steps, not a mean, so longer videos can
    report larger values.
    """
    if frame_width <= 0:
        raise MetricError(f"frame width must be positive, got {frame_width}")
    if len(centers) < 2:
        return 0.0
    total = 0.0
    for (x0, y0), (x1, y1) in zip(centers[:-1], centers[1:]):
        total += math.hypot(x1 - x0, y1 - y0)
    return total / frame_width


def recall(
    crops: Sequence[BBox],
    gts_per_frame: Sequence[Sequence[BBox]],
    gt_normalized: bool = False,
) -> float:
    """Mean per-frame overlap ratio between the crop and its best subject.

    By default the intersection is divided by the crop area; with
    gt_normalized=True it is divided by the matched subject area instead
    (how much of the subject survives the crop).
    """
    if len(crops) != len(gts_per_frame):
        raise MetricError(
            f"recall length mismatch: {len(crops)} crops vs "
            f"{len(gts_per_frame)} ground-truth frames"
        )
    if not crops:
        raise MetricError("recall needs at least one frame")
    total = 0.0
    for crop, gts in zip(crops, gts_per_frame):
        best = 0.0
        for g in gts:
            inter = intersect_area(crop, g)
            denom = g.area() if gt_normalized else crop.area()
            if denom > 0:
                best = max(best, inter / denom)
        total += best
    return total / len(crops)


def avg_min_cdr(
    crops: Sequence[BBox],
    gts_per_frame: Sequence[Sequence[BBox]],
    frame_width: float,
) -> float:
    """Mean over frames of the minimum center-distance ratio."""
    if len(crops) != len(gts_per_frame):
        raise MetricError(
            f"avg_min_cdr length mismatch: {len(crops)} crops vs "
            f"{len(gts_per_frame)} ground-truth frames"
        )
    if not crops:
        raise MetricError("avg_min_cdr needs at least one frame")
    return sum(
        min_cdr(c, g, frame_width) for c, g in zip(crops, gts_per_frame)
    ) / len(crops)


def gt_crop_window(
    subject: BBox, frame_w: float, frame_h: float, aspect: tuple[int, int] = (9, 16)
) -> BBox:
    """Ground-truth vertical window for a subject: full height, horizontally
    centered on the subject (clamped to the frame)."""
    aw, ah = aspect
    w = frame_h * aw / ah
    if w >= frame_w:
        return BBox(0.0, 0.0, frame_w, frame_h)
    cx, _ = subject.center()
    x = min(max(cx - w / 2.0, 0.0), frame_w - w)
    return BBox(x, 0.0, w, frame_h)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class ImageEvalResult:
    image_id: str
    max_iou: float
    min_cdr: float
    min_bde: float
    hit: bool


@dataclass
class ImageReport:
    results: list[ImageEvalResult]
    mean_max_iou: float
    mean_min_cdr: float
    mean_min_bde: float
    map50: float

    def as_dict(self) -> dict:
        return {
            "mode": "image",
            "count": len(self.results),
            "max_iou": self.mean_max_iou,
            "min_cdr": self.mean_min_cdr,
            "min_bde": self.mean_min_bde,
            "map@0.5": self.map50,
            "per_image": [
                {
                    "id": r.image_id,
                    "max_iou": r.max_iou,
                    "min_cdr": r.min_cdr,
                    "min_bde": r.min_bde,
                    "hit@0.5": r.hit,
                }
                for r in self.results
            ],
        }


def evaluate_images(
    predictions: dict[str, BBox],
    gt_boxes: dict[str, list[BBox]],
    frame_dims: dict[str, tuple[float, float]],
    iou_threshold: float = 0.5,
) -> ImageReport:
    """Score one predicted subject box per image against its ground truth."""
    missing = sorted(set(predictions) - set(gt_boxes))
    if missing:
        raise MetricError(f"predictions reference unknown image ids: {missing}")
    if not predictions:
        raise MetricError("no predictions to evaluate")
    results = []
    for image_id in sorted(predictions):
        pred = predictions[image_id]
        gts = gt_boxes[image_id]
        w, h = frame_dims[image_id]
        mi = max_iou(pred, gts)
        results.append(
            ImageEvalResult(
                image_id=image_id,
                max_iou=mi,
                min_cdr=min_cdr(pred, gts, w),
                min_bde=min_bde(pred, gts, (w, h)),
                hit=mi >= iou_threshold,
            )
        )
    n = len(results)
    return ImageReport(
        results=results,
        mean_max_iou=sum(r.max_iou for r in results) / n,
        mean_min_cdr=sum(r.min_cdr for r in results) / n,
        mean_min_bde=sum(r.min_bde for r in results) / n,
        map50=sum(r.hit for r in results) / n,
    )


@dataclass
class VideoEvalResult:
    frames: int
    avg_min_cdr: float
    jdr: float
    recall: float

    def as_dict(self) -> dict:
        return {
            "mode": "video",
            "frames": self.frames,
            "avg_min_cdr": self.avg_min_cdr,
            "jdr": self.jdr,
            "recall": self.recall,
        }


def evaluate_video(
    crops: Sequence[BBox],
    gts_per_frame: Sequence[Sequence[BBox]],
    frame_width: float,
    gt_normalized_recall: bool = False,
) -> VideoEvalResult:
    centers = [c.center() for c in crops]
    return VideoEvalResult(
        frames=len(crops),
        avg_min_cdr=avg_min_cdr(crops, gts_per_frame, frame_width),
        jdr=jdr(centers, frame_width),
        recall=recall(crops, gts_per_frame, gt_normalized=gt_normalized_recall),
    )


def report_csv(rows: list[dict], columns: list[str]) -> str:
    """Aligned CSV-ish table used for eval summaries."""
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    table = [columns] + [[fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    lines = [
        ",".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in table
    ]
    return "\n".join(lines) + "\n"
