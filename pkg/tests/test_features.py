"""Cue maps (saliency, sharpness), grid pooling, and scoring terms."""

import numpy as np
import pytest

from h2v.errors import ConfigError, GeometryError
from h2v.features import (
    CELL,
    FeatureEncoder,
    box_cell_mean,
    build_feature_stack,
    candidate_descriptor,
    detect_bright_regions,
    grid_dims,
    loc_prior,
    position_term,
    resize_plane,
    size_term,
    spectral_residual_saliency,
    tenengrad_map,
)
from h2v.geometry import BBox
from h2v.media import Frame


def rgb(plane):
    return Frame(np.repeat(np.clip(plane, 0.0, 1.0)[:, :, None], 3, axis=2))


class TestGrid:
    def test_grid_dims_ceil(self):
        assert grid_dims(32, 32) == (2, 2)
        assert grid_dims(33, 31) == (3, 2)
        assert grid_dims(16, 17) == (1, 2)

    def test_resize_plane_constant_and_identity(self):
        p = np.full((20, 30), 0.37)
        assert resize_plane(p, 7, 11) == pytest.approx(np.full((7, 11), 0.37))
        q = np.arange(12.0).reshape(3, 4)
        np.testing.assert_allclose(resize_plane(q, 3, 4), q)

    def test_resize_plane_preserves_monotone_ramp(self):
        ramp = np.tile(np.linspace(0, 1, 16), (16, 1))
        up = resize_plane(ramp, 16, 64)
        assert (np.diff(up, axis=1) >= -1e-12).all()
        assert up[:, 0] == pytest.approx(0.0)
        assert up[:, -1] == pytest.approx(1.0)


class TestSharpness:
    def test_constant_frame_zero(self):
        t = tenengrad_map(rgb(np.full((32, 32), 0.5)))
        assert t == pytest.approx(np.zeros((2, 2)))

    def test_full_step_edge_saturates(self):
        plane = np.zeros((32, 32))
        plane[:, 16:] = 1.0
        t = tenengrad_map(rgb(plane))
        # a black/white vertical step measures 1.0 in every cell it crosses
        assert t == pytest.approx(np.ones((2, 2)))

    def test_threshold_suppresses_weak_gradients(self):
        plane = np.full((32, 32), 0.5)
        plane[:, 16:] = 0.52          # gradient magnitude below 0.05
        t = tenengrad_map(rgb(plane), grad_threshold=0.05)
        assert t == pytest.approx(np.zeros((2, 2)))

    def test_sharp_half_beats_softened_half(self):
        checker = (np.indices((64, 64)).sum(0) // 8 % 2).astype(float)
        soft = np.clip(resize_plane(resize_plane(checker, 16, 16), 64, 64),
                       0.0, 1.0)
        plane = np.concatenate([checker, soft], axis=1)
        t = tenengrad_map(rgb(plane))
        assert t[:, :4].mean() > t[:, 4:].mean()

    def test_range(self):
        rng = np.random.default_rng(2)
        t = tenengrad_map(rgb(rng.uniform(0, 1, (48, 64))))
        assert t.min() >= 0.0 and t.max() <= 1.0 + 1e-12


class TestSaliency:
    def test_flat_frame_zero(self):
        s = spectral_residual_saliency(rgb(np.full((64, 64), 0.3)))
        assert s == pytest.approx(np.zeros((4, 4)))

    def test_bright_square_on_black_pops_out(self):
        plane = np.zeros((64, 64))
        plane[24:32, 32:40] = 1.0
        s = spectral_residual_saliency(rgb(plane))
        inside = s[1, 2]                 # the cell containing the square
        mask = np.ones_like(s, dtype=bool)
        mask[1, 2] = False
        assert inside > s[mask].mean()

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(11)
        plane = rng.uniform(0, 1, (64, 96))
        a = spectral_residual_saliency(rgb(plane))
        b = spectral_residual_saliency(rgb(plane[:, ::-1]))
        np.testing.assert_allclose(a, b[:, ::-1], atol=1e-5)

    def test_textured_patch_pops_out(self):
        rng = np.random.default_rng(1)
        plane = np.full((128, 128), 0.4)
        plane[48:80, 64:96] = rng.uniform(0.1, 0.9, (32, 32))
        s = spectral_residual_saliency(rgb(plane))
        inside = s[3:5, 4:6].mean()
        outside = np.concatenate([
            s[:2].ravel(), s[6:].ravel(),
            s[2:6, :2].ravel(), s[2:6, 7:].ravel(),
        ]).mean()
        assert inside > 10 * outside

    def test_normalized_range(self):
        rng = np.random.default_rng(4)
        s = spectral_residual_saliency(rgb(rng.uniform(0, 1, (64, 96))))
        assert s.shape == grid_dims(64, 96)
        assert s.min() == pytest.approx(0.0)
        assert s.max() == pytest.approx(1.0)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        f = rgb(rng.uniform(0, 1, (64, 64)))
        np.testing.assert_array_equal(spectral_residual_saliency(f),
                                      spectral_residual_saliency(f))


class TestBoxCellMean:
    plane = np.array([[1.0, 3.0], [5.0, 7.0]])

    def test_exact_cell(self):
        assert box_cell_mean(self.plane, BBox(0, 0, 16, 16), 32, 32) == 1.0
        assert box_cell_mean(self.plane, BBox(16, 16, 16, 16), 32, 32) == 7.0

    def test_fractional_coverage(self):
        # straddles cell columns 0 and 1 equally on the top row
        v = box_cell_mean(self.plane, BBox(8, 0, 16, 16), 32, 32)
        assert v == pytest.approx((1.0 + 3.0) / 2.0)
        # quarter overlap of each of the four cells
        v = box_cell_mean(self.plane, BBox(8, 8, 16, 16), 32, 32)
        assert v == pytest.approx((1.0 + 3.0 + 5.0 + 7.0) / 4.0)

    def test_uneven_weights(self):
        # 12 px in column 0, 4 px in column 1
        v = box_cell_mean(self.plane, BBox(4, 0, 16, 16), 32, 32)
        assert v == pytest.approx((1.0 * 12 + 3.0 * 4) / 16)

    def test_out_of_frame_clamped(self):
        v = box_cell_mean(self.plane, BBox(24, 24, 32, 32), 32, 32)
        assert v == 7.0
        with pytest.raises(GeometryError):
            box_cell_mean(self.plane, BBox(40, 40, 8, 8), 32, 32)


class TestScoringTerms:
    def test_loc_prior_values(self):
        v = loc_prior(BBox(16, 8, 32, 24), 64, 48)
        np.testing.assert_allclose(v, [0.25, 1 / 6, 0.5, 0.5])
        v = loc_prior(BBox(0, 0, 128, 96), 64, 48)
        np.testing.assert_allclose(v, [0.0, 0.0, 1.0, 1.0])

    def test_position_term_center_and_corner(self):
        assert position_term(BBox(28, 20, 8, 8), 64, 48) == pytest.approx(1.0)
        corner = position_term(BBox(0, 0, 2, 2), 64, 48)
        assert corner == pytest.approx(0.0, abs=0.05)
        near = position_term(BBox(24, 16, 8, 8), 64, 48)
        far = position_term(BBox(2, 2, 8, 8), 64, 48)
        assert near > far

    def test_size_term(self):
        assert size_term(BBox(0, 0, 32, 24), 64, 48) == pytest.approx(0.25)
        assert size_term(BBox(0, 0, 640, 480), 64, 48) == 1.0


class TestFeatureStack:
    def test_descriptor_composition(self):
        rng = np.random.default_rng(6)
        frame = rgb(rng.uniform(0, 1, (48, 64)))
        stack = build_feature_stack(frame)
        assert stack.embed is None
        assert stack.channels == 2
        box = BBox(10, 10, 30, 20)
        d = candidate_descriptor(stack, box)
        assert d.shape == (6,)
        assert d[0] == pytest.approx(box_cell_mean(stack.sal, box, 64, 48))
        assert d[1] == pytest.approx(box_cell_mean(stack.sharp, box, 64, 48))
        np.testing.assert_allclose(d[2:], loc_prior(box, 64, 48))

    def test_stack_with_encoder(self):
        rng = np.random.default_rng(7)
        frame = rgb(rng.uniform(0, 1, (48, 64)))
        enc = FeatureEncoder(4, np.random.default_rng(0))
        stack = build_feature_stack(frame, enc)
        gh, gw = grid_dims(48, 64)
        assert stack.embed.data.shape == (1, 4, gh, gw)
        assert stack.channels == 6
        assert stack.concat().data.shape == (1, 6, gh, gw)

    def test_encoder_seeded_and_validated(self):
        a = FeatureEncoder(4, np.random.default_rng(3))
        b = FeatureEncoder(4, np.random.default_rng(3))
        for (na, pa), (nb, pb) in zip(a.named_parameters(),
                                      b.named_parameters()):
            assert na == nb
            np.testing.assert_array_equal(pa.data, pb.data)
        with pytest.raises(ConfigError):
            FeatureEncoder(0)


class TestFallbackDetector:
    def test_finds_bright_actor(self):
        plane = np.full((64, 64), 0.1)
        plane[20:44, 24:40] = 0.9
        dets = detect_bright_regions(rgb(plane))
        assert dets
        box = dets[0].primary_box
        got = (box.x, box.y, box.right, box.bottom)
        assert got == pytest.approx((24, 20, 40, 44), abs=1.5)

    def test_flat_frame_yields_nothing(self):
        assert detect_bright_regions(rgb(np.full((64, 64), 0.5))) == []
