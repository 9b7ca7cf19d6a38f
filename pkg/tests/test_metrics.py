"""Selection and trajectory metrics against closed-form worked values."""

import math

import numpy as np
import pytest

from h2v.errors import MetricError
from h2v.geometry import BBox
from h2v.metrics import (
    avg_min_cdr,
    evaluate_images,
    evaluate_video,
    gt_crop_window,
    jdr,
    map_at,
    max_iou,
    min_bde,
    min_cdr,
    recall,
    report_csv,
)


def box_at(cx, cy, w=10.0, h=10.0):
    return BBox(cx - w / 2, cy - h / 2, w, h)


class TestImageMetrics:
    def test_max_iou_worked_values(self):
        b = BBox(0, 0, 10, 10)
        assert max_iou(b, [b]) == 1.0
        assert max_iou(BBox(0, 0, 10, 10), [BBox(5, 0, 10, 10)]) == \
            pytest.approx(1.0 / 3.0)
        assert max_iou(b, [BBox(50, 50, 10, 10)]) == 0.0
        # best match over multiple subjects
        assert max_iou(b, [BBox(50, 50, 10, 10), b]) == 1.0
        with pytest.raises(MetricError):
            max_iou(b, [])

    def test_min_cdr_worked_values(self):
        assert min_cdr(box_at(50, 50), [box_at(50, 50)], 100) == 0.0
        assert min_cdr(box_at(50, 50), [box_at(80, 50)], 100) == \
            pytest.approx(0.30)
        assert min_cdr(box_at(50, 50), [box_at(80, 90)], 100) == \
            pytest.approx(0.50)          # offset (30, 40) is a 3-4-5 triangle
        with pytest.raises(MetricError):
            min_cdr(box_at(0, 0), [box_at(0, 0)], 0)

    def test_min_cdr_takes_minimum(self):
        v = min_cdr(box_at(50, 50), [box_at(80, 50), box_at(60, 50)], 100)
        assert v == pytest.approx(0.10)

    def test_min_bde_worked_values(self):
        pred = BBox(0, 0, 10, 10)
        assert min_bde(pred, [pred], (100, 100)) == 0.0
        assert min_bde(pred, [BBox(2, 2, 10, 10)], (100, 100)) == \
            pytest.approx(0.02)
        assert min_bde(pred, [BBox(2, 2, 10, 10), pred], (100, 100)) == 0.0

    def test_min_bde_per_axis_normalization(self):
        pred = BBox(0, 0, 10, 10)
        gt = BBox(4, 8, 10, 10)
        # left/right offsets 4 / width 200, top/bottom offsets 8 / height 100
        want = (4 / 200 + 4 / 200 + 8 / 100 + 8 / 100) / 4
        assert min_bde(pred, [gt], (200, 100)) == pytest.approx(want)

    def test_map_at(self):
        assert map_at([1.0, 1.0]) == 1.0
        assert map_at([0.9, 0.6, 0.5, 0.2]) == 0.75
        assert map_at([0.999], threshold=1.0) == 0.0
        with pytest.raises(MetricError):
            map_at([])

    def test_metric_scale_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            x, y, w, h = rng.uniform(1, 50, 4)
            gx, gy, gw, gh = rng.uniform(1, 50, 4)
            pred, gt = BBox(x, y, w, h), BBox(gx, gy, gw, gh)
            s = 7.0
            scaled_pred = BBox(x * s, y * s, w * s, h * s)
            scaled_gt = BBox(gx * s, gy * s, gw * s, gh * s)
            assert max_iou(pred, [gt]) == pytest.approx(
                max_iou(scaled_pred, [scaled_gt]))
            assert min_cdr(pred, [gt], 100) == pytest.approx(
                min_cdr(scaled_pred, [scaled_gt], 100 * s))
            assert min_bde(pred, [gt], (100, 60)) == pytest.approx(
                min_bde(scaled_pred, [scaled_gt], (100 * s, 60 * s)))

    def test_min_over_gt_monotonicity(self):
        rng = np.random.default_rng(9)
        pred = BBox(10, 10, 20, 20)
        gts = [BBox(*rng.uniform(1, 40, 4)) for _ in range(5)]
        for k in range(1, len(gts)):
            assert min_cdr(pred, gts[: k + 1], 100) <= \
                min_cdr(pred, gts[:k], 100) + 1e-12
            assert min_bde(pred, gts[: k + 1], (100, 100)) <= \
                min_bde(pred, gts[:k], (100, 100)) + 1e-12
            assert max_iou(pred, gts[: k + 1]) >= max_iou(pred, gts[:k])


class TestVideoMetrics:
    def test_jdr_worked_values(self):
        assert jdr([(10, 0), (13, 4), (13, 4)], 100) == pytest.approx(0.05)
        assert jdr([(42, 17)], 100) == 0.0
        assert jdr([(5, 5)] * 8, 100) == 0.0

    def test_jdr_accumulates_over_length(self):
        # a sum over steps: doubling the walk doubles the value
        walk = [(float(i), 0.0) for i in range(11)]
        assert jdr(walk, 100) == pytest.approx(0.10)
        walk2 = [(float(i), 0.0) for i in range(21)]
        assert jdr(walk2, 100) == pytest.approx(0.20)

    def test_recall_worked_values(self):
        crop = BBox(0, 0, 90, 160)
        assert recall([crop] * 3, [[crop]] * 3) == 1.0
        half = BBox(0, 0, 45, 160)
        assert recall([crop] * 3, [[half]] * 3) == pytest.approx(0.5)
        far = BBox(1000, 0, 10, 10)
        assert recall([crop], [[far]]) == 0.0
        with pytest.raises(MetricError):
            recall([crop], [[half], [half]])

    def test_recall_gt_normalized_variant(self):
        crop = BBox(0, 0, 90, 160)
        small = BBox(10, 10, 9, 16)     # fully inside the crop
        assert recall([crop], [[small]], gt_normalized=True) == 1.0
        assert recall([crop], [[small]]) == pytest.approx(
            (9 * 16) / (90 * 160))

    def test_avg_min_cdr(self):
        crops = [box_at(50, 50), box_at(50, 50)]
        gts = [[box_at(80, 50)], [box_at(50, 50)]]
        assert avg_min_cdr(crops, gts, 100) == pytest.approx(0.15)

    def test_evaluate_video_bundle(self):
        crop = BBox(0, 0, 90, 160)
        out = evaluate_video([crop, crop], [[crop], [crop]], 90)
        assert out.frames == 2
        assert out.avg_min_cdr == 0.0
        assert out.jdr == 0.0
        assert out.recall == 1.0


class TestGtCropWindow:
    def test_centered_full_height(self):
        win = gt_crop_window(box_at(960, 500, 100, 300), 1920, 1080)
        assert win.h == 1080 and win.y == 0
        assert win.w == pytest.approx(1080 * 9 / 16)
        assert win.center()[0] == pytest.approx(960)

    def test_clamped_at_edges(self):
        win = gt_crop_window(box_at(5, 500), 1920, 1080)
        assert win.x == 0.0
        win = gt_crop_window(box_at(1915, 500), 1920, 1080)
        assert win.right == pytest.approx(1920)

    def test_narrow_frame_falls_back_to_full(self):
        win = gt_crop_window(box_at(50, 50), 100, 400)
        assert (win.x, win.y, win.w, win.h) == (0.0, 0.0, 100.0, 400.0)


class TestAggregation:
    def test_evaluate_images_report(self):
        preds = {"a": BBox(0, 0, 10, 10), "b": BBox(0, 0, 10, 10)}
        gts = {"a": [BBox(0, 0, 10, 10)], "b": [BBox(5, 0, 10, 10)]}
        dims = {"a": (100.0, 100.0), "b": (100.0, 100.0)}
        rep = evaluate_images(preds, gts, dims)
        assert rep.mean_max_iou == pytest.approx((1.0 + 1 / 3) / 2)
        assert rep.map50 == 0.5
        d = rep.as_dict()
        assert d["count"] == 2
        assert [r["id"] for r in d["per_image"]] == ["a", "b"]

    def test_evaluate_images_unknown_id(self):
        with pytest.raises(MetricError):
            evaluate_images({"zz": BBox(0, 0, 1, 1)}, {"a": []}, {"a": (1, 1)})

    def test_report_csv_alignment(self):
        rows = [
            {"method": "nss", "max_iou": 1 / 3, "map@0.5": 0.5},
            {"method": "rank_hard", "max_iou": 0.925, "map@0.5": 1.0},
        ]
        text = report_csv(rows, ["method", "max_iou", "map@0.5"])
        lines = text.splitlines()
        assert lines[0].split(",")[0].strip() == "method"
        assert lines[1].split(",")[1].strip() == "0.3333"
        assert lines[2].split(",")[0].strip() == "rank_hard"
        assert text.endswith("\n")
