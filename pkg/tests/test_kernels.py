"""Hot-kernel contracts: independent oracles, then backend parity."""

import numpy as np
import pytest

from h2v import _kernels
from h2v._kernels import reference

try:
    from h2v._kernels import _native as native
except ImportError:
    native = None

needs_native = pytest.mark.skipif(native is None,
                                  reason="compiled extension not built")


# ---------------------------------------------------------------------------
# independent oracles


def bilinear_at(plane: np.ndarray, y: float, x: float) -> float:
    """Scalar bilinear sample with the same out-of-range cutoff as the
    kernel contract: points more than one cell outside contribute 0."""
    h, w = plane.shape
    if y <= -1.0 or y >= h or x <= -1.0 or x >= w:
        return 0.0
    y = max(y, 0.0)
    x = max(x, 0.0)
    yl, xl = int(y), int(x)
    yl, xl = min(yl, h - 1), min(xl, w - 1)
    yh, xh = min(yl + 1, h - 1), min(xl + 1, w - 1)
    ly = 0.0 if (yl >= h - 1 and y >= h - 1) else min(y - yl, 1.0)
    lx = 0.0 if (xl >= w - 1 and x >= w - 1) else min(x - xl, 1.0)
    return float(
        plane[yl, xl] * (1 - ly) * (1 - lx)
        + plane[yl, xh] * (1 - ly) * lx
        + plane[yh, xl] * ly * (1 - lx)
        + plane[yh, xh] * ly * lx
    )


def roi_align_loops(fmap, rois, oh, ow, ratio):
    """Nested-loop re-derivation of the pooled output."""
    k = rois.shape[0]
    c = fmap.shape[1]
    out = np.zeros((k, c, oh, ow))
    for r in range(k):
        b = int(rois[r, 0])
        x0, y0, x1, y1 = rois[r, 1:]
        bw = max(x1 - x0, 1.0) / ow
        bh = max(y1 - y0, 1.0) / oh
        for ch in range(c):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for si in range(ratio):
                        for sj in range(ratio):
                            y = y0 + (i + (si + 0.5) / ratio) * bh
                            x = x0 + (j + (sj + 0.5) / ratio) * bw
                            acc += bilinear_at(fmap[b, ch], y, x)
                    out[r, ch, i, j] = acc / ratio**2
    return out


class TestRoiAlignOracle:
    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(11)
        fmap = rng.standard_normal((2, 3, 9, 7))
        rois = np.array([
            [0, 0.0, 0.0, 7.0, 9.0],
            [0, 1.3, 2.1, 5.9, 6.4],
            [1, 0.2, 0.7, 2.2, 3.1],
            [1, -0.5, -0.5, 8.0, 10.0],   # spills outside the map
            [0, 3.0, 3.0, 3.5, 3.5],      # smaller than one cell
        ])
        got = reference.roi_align_forward(fmap, rois, 4, 4, 2)
        want = roi_align_loops(fmap, rois, 4, 4, 2)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_constant_map_pools_constant(self):
        fmap = np.full((1, 2, 8, 8), 3.25)
        rois = np.array([[0, 1.0, 1.0, 6.0, 6.0]])
        out = reference.roi_align_forward(fmap, rois, 14, 14, 2)
        np.testing.assert_allclose(out, 3.25, atol=1e-12)

    def test_backward_is_adjoint(self):
        # <forward(x), g> == <x, backward(g)> for random x, g
        rng = np.random.default_rng(5)
        fmap = rng.standard_normal((1, 2, 6, 6))
        rois = np.array([[0, 0.5, 0.8, 4.7, 5.2], [0, 1.0, 1.0, 3.0, 4.0]])
        g = rng.standard_normal((2, 2, 3, 3))
        fwd = reference.roi_align_forward(fmap, rois, 3, 3, 2)
        back = reference.roi_align_backward(g, rois, 1, 2, 6, 6, 2)
        assert np.vdot(fwd, g) == pytest.approx(np.vdot(fmap, back),
                                                rel=1e-12)


class TestIm2col:
    def test_round_trip_counts_overlaps(self):
        # col2im(im2col(x)) multiplies each pixel by its patch multiplicity
        x = np.arange(2 * 1 * 4 * 4, dtype=np.float64).reshape(2, 1, 4, 4)
        cols = reference.im2col(x, 3, 3, 1, 1)
        ones = reference.im2col(np.ones_like(x), 3, 3, 1, 1)
        back = reference.col2im(cols, 1, 4, 4, 3, 3, 1, 1)
        mult = reference.col2im(ones, 1, 4, 4, 3, 3, 1, 1)
        np.testing.assert_allclose(back, x * mult, atol=1e-12)

    def test_patch_content(self):
        x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
        cols = reference.im2col(x, 2, 2, 2, 2)
        # stride 2 tiles: top-left patch is rows 0-1, cols 0-1
        np.testing.assert_array_equal(cols[0, :, 0], [0, 1, 4, 5])
        np.testing.assert_array_equal(cols[0, :, 3], [10, 11, 14, 15])


class TestNcc:
    def test_recovers_known_shift(self):
        rng = np.random.default_rng(21)
        image = rng.standard_normal((40, 50))
        template = image[12:20, 30:38].copy()
        out = reference.ncc_match(image, template, 0, 0, 42, 32)
        peak = np.unravel_index(np.argmax(out), out.shape)
        assert peak == (12, 30)
        assert out[peak] == pytest.approx(1.0, abs=1e-9)

    def test_bounded_and_shifted(self):
        rng = np.random.default_rng(22)
        image = rng.standard_normal((30, 30))
        template = rng.standard_normal((6, 6))
        out = reference.ncc_match(image, template, 3, 2, 20, 18)
        assert out.shape == (17, 18)
        assert np.all(out <= 1.0) and np.all(out >= -1.0)

    def test_flat_window_scores_zero(self):
        image = np.ones((20, 20))
        rng = np.random.default_rng(23)
        template = rng.standard_normal((5, 5))
        out = reference.ncc_match(image, template, 0, 0, 10, 10)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_brightness_and_contrast_invariant(self):
        rng = np.random.default_rng(24)
        image = rng.standard_normal((25, 25))
        template = image[5:12, 8:16].copy()
        shifted = 4.0 + 2.5 * image
        out = reference.ncc_match(shifted, template, 0, 0, 17, 18)
        assert out[5, 8] == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# backend parity: the compiled kernels must agree with the reference


@needs_native
class TestNativeParity:
    def test_im2col_col2im(self):
        rng = np.random.default_rng(31)
        for kh, kw, sh, sw in ((3, 3, 1, 1), (2, 4, 2, 1), (1, 1, 1, 1)):
            x = rng.standard_normal((2, 3, 10, 9))
            a = reference.im2col(x, kh, kw, sh, sw)
            b = native.im2col(x, kh, kw, sh, sw)
            np.testing.assert_allclose(a, b, atol=1e-12)
            back_a = reference.col2im(a, 3, 10, 9, kh, kw, sh, sw)
            back_b = native.col2im(b, 3, 10, 9, kh, kw, sh, sw)
            np.testing.assert_allclose(back_a, back_b, atol=1e-12)

    def test_roi_align(self):
        rng = np.random.default_rng(32)
        fmap = rng.standard_normal((2, 4, 12, 10))
        rois = np.column_stack([
            rng.integers(0, 2, 25).astype(float),
            rng.uniform(-1, 8, 25), rng.uniform(-1, 9, 25),
            rng.uniform(2, 11, 25), rng.uniform(2, 13, 25),
        ])
        for ratio in (1, 2, 3):
            a = reference.roi_align_forward(fmap, rois, 5, 4, ratio)
            b = native.roi_align_forward(fmap, rois, 5, 4, ratio)
            np.testing.assert_allclose(a, b, atol=1e-10)
            g = rng.standard_normal(a.shape)
            ga = reference.roi_align_backward(g, rois, 2, 4, 12, 10, ratio)
            gb = native.roi_align_backward(g, rois, 2, 4, 12, 10, ratio)
            np.testing.assert_allclose(ga, gb, atol=1e-10)

    def test_ncc(self):
        rng = np.random.default_rng(33)
        image = rng.standard_normal((36, 44))
        template = rng.standard_normal((7, 9))
        a = reference.ncc_match(image, template, 2, 1, 30, 25)
        b = native.ncc_match(image, template, 2, 1, 30, 25)
        np.testing.assert_allclose(a, b, atol=1e-10)


class TestDispatch:
    def test_backend_reports_a_valid_name(self):
        assert _kernels.backend() in ("native", "numpy")

    def test_wrapper_accepts_non_contiguous(self):
        rng = np.random.default_rng(41)
        x = rng.standard_normal((2, 3, 12, 12))[:, :, ::2, ::2]
        out = _kernels.im2col(x, 2, 2, 1, 1)
        np.testing.assert_allclose(
            out, reference.im2col(np.ascontiguousarray(x), 2, 2, 1, 1),
            atol=1e-12)
