"""Box arithmetic against a pixel-rasterization oracle."""

import numpy as np
import pytest

from h2v.errors import GeometryError
from h2v.geometry import BBox, intersect_area, iou, union_area


def raster_areas(a: BBox, b: BBox, scale: int = 10) -> tuple[float, float]:
    """Count subpixel cells covered by both / either box.

    Boxes are drawn on an integer grid at `scale` cells per unit, so any
    box with coordinates that are multiples of 1/scale rasterizes exactly.
    """
    x1 = int(round(max(a.right, b.right) * scale)) + 1
    y1 = int(round(max(a.bottom, b.bottom) * scale)) + 1
    grid_a = np.zeros((y1, x1), dtype=bool)
    grid_b = np.zeros((y1, x1), dtype=bool)
    for box, grid in ((a, grid_a), (b, grid_b)):
        grid[int(round(box.y * scale)):int(round(box.bottom * scale)),
             int(round(box.x * scale)):int(round(box.right * scale))] = True
    inter = float(np.count_nonzero(grid_a & grid_b)) / scale**2
    union = float(np.count_nonzero(grid_a | grid_b)) / scale**2
    return inter, union


def random_box(rng, scale: int = 10) -> BBox:
    x = rng.integers(0, 50 * scale) / scale
    y = rng.integers(0, 50 * scale) / scale
    w = rng.integers(1, 30 * scale) / scale
    h = rng.integers(1, 30 * scale) / scale
    return BBox(x, y, w, h)


class TestRasterOracle:
    def test_random_pairs_match_rasterization(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a, b = random_box(rng), random_box(rng)
            inter_o, union_o = raster_areas(a, b)
            assert intersect_area(a, b) == pytest.approx(inter_o, abs=1e-6)
            assert union_area(a, b) == pytest.approx(union_o, abs=1e-6)
            expect = inter_o / union_o if inter_o > 0 else 0.0
            assert iou(a, b) == pytest.approx(expect, abs=1e-6)

    def test_known_values(self):
        a = BBox(0, 0, 2, 2)
        assert iou(a, a) == 1.0
        assert iou(a, BBox(2, 0, 2, 2)) == 0.0
        assert iou(a, BBox(1, 0, 2, 2)) == pytest.approx(1 / 3)
        assert intersect_area(a, BBox(1, 1, 4, 4)) == 1.0


class TestBBox:
    def test_accessors(self):
        b = BBox(2, 3, 4, 6)
        assert (b.right, b.bottom) == (6, 9)
        assert b.center() == (4.0, 6.0)
        assert b.area() == 24
        assert BBox.from_list(b.as_list()) == b

    def test_degenerate_rejected(self):
        with pytest.raises(GeometryError):
            BBox(0, 0, 0, 5)
        with pytest.raises(GeometryError):
            BBox(0, 0, 5, -1)
        with pytest.raises(GeometryError):
            BBox(float("nan"), 0, 5, 5)
        with pytest.raises(GeometryError):
            BBox.from_list([1, 2, 3])

    def test_clamped(self):
        assert BBox(-5, -5, 20, 20).clamped(10, 10) == BBox(0, 0, 10, 10)
        assert BBox(2, 2, 4, 4).clamped(10, 10) == BBox(2, 2, 4, 4)
        with pytest.raises(GeometryError):
            BBox(20, 20, 5, 5).clamped(10, 10)

    def test_inside(self):
        assert BBox(0, 0, 10, 10).inside(10, 10)
        assert not BBox(1, 1, 10, 10).inside(10, 10)

    def test_iou_symmetry_and_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = random_box(rng), random_box(rng)
            v = iou(a, b)
            assert v == iou(b, a)
            assert 0.0 <= v <= 1.0
            contained = BBox(a.x + a.w / 4, a.y + a.h / 4, a.w / 2, a.h / 2)
            assert intersect_area(a, contained) == pytest.approx(
                contained.area())
