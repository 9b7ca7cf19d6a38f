"""Axis-aligned boxes in pixel coordinates.

Convention everywhere: top-left origin, (x, y, w, h), half-open pixel
intervals [x, x+w) x [y, y+h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"non-finite box field {name}={v}")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"degenerate box w={self.w} h={self.h}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return self.w * self.h

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @staticmethod
    def from_list(v) -> "BBox":
        if not isinstance(v, (list, tuple)) or len(v) != 4:
            raise GeometryError(f"box must be a 4-element [x,y,w,h] list, got {v!r}")
        return BBox(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    def clamped(self, width: float, height: float) -> "BBox":
        """Clip to the frame rectangle; fully-outside boxes raise."""
        x0 = max(self.x, 0.0)
        y0 = max(self.y, 0.0)
        x1 = min(self.right, float(width))
        y1 = min(self.bottom, float(height))
        if x1 <= x0 or y1 <= y0:
            raise GeometryError(
                f"box {self.as_list()} lies outside frame {width}x{height}"
            )
        return BBox(x0, y0, x1 - x0, y1 - y0)

    def inside(self, width: float, height: float) -> bool:
        return self.x >= 0 and self.y >= 0 and self.right <= width and self.bottom <= height


def intersect_area(a: BBox, b: BBox) -> float:
    iw = min(a.right, b.right) - max(a.x, b.x)
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def union_area(a: BBox, b: BBox) -> float:
    return a.area() + b.area() - intersect_area(a, b)


def iou(a: BBox, b: BBox) -> float:
    inter = intersect_area(a, b)
    if inter <= 0:
        return 0.0
    return inter / union_area(a, b)
