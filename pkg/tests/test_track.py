"""Template tracking, Kalman filtering and verification events."""

import numpy as np
import pytest

from h2v.errors import ConfigError, GeometryError
from h2v.geometry import BBox, iou
from h2v.media import Frame
from h2v.track import (
    KalmanBox,
    ShotTracker,
    TrackerParams,
    VerificationEvent,
    kalman_smooth,
)
from h2v.synth import make_tracking_video


def run_tracker(kind: str, seed: int = 3, params: TrackerParams | None = None):
    video = make_tracking_video(kind, seed=seed)
    tracker = ShotTracker(video.seq.frames[0], [video.boxes[0]], 0, params)
    return video, tracker


class TestTrackerParams:
    def test_confidence_threshold_range(self):
        with pytest.raises(ConfigError):
            TrackerParams(tau_conf=1.5)

    def test_noise_must_be_positive(self):
        with pytest.raises(ConfigError):
            TrackerParams(sigma_p=0.0)
        with pytest.raises(ConfigError):
            TrackerParams(sigma_m=-1.0)


class TestKalmanBox:
    def test_initial_box_round_trip(self):
        box = BBox(10, 20, 30, 40)
        kf = KalmanBox(box, sigma_p=1.0, sigma_m=2.0)
        got = kf.box()
        assert got.center() == pytest.approx(box.center())
        assert (got.w, got.h) == pytest.approx((box.w, box.h))

    def test_repeated_updates_converge_to_measurement(self):
        kf = KalmanBox(BBox(0, 0, 10, 10), sigma_p=0.5, sigma_m=2.0)
        for _ in range(50):
            kf.predict()
            kf.update(40.0, 25.0, 12.0, 14.0)
        got = kf.box()
        assert got.center() == pytest.approx((40.0, 25.0), abs=0.5)
        assert (got.w, got.h) == pytest.approx((12.0, 14.0), abs=0.5)

    def test_prediction_carries_velocity(self):
        kf = KalmanBox(BBox(0, 0, 10, 10), sigma_p=0.5, sigma_m=1.0)
        for t in range(1, 20):
            kf.predict()
            kf.update(5.0 + 3.0 * t, 5.0, 10.0, 10.0)
        pred = kf.predict()
        # next center continues the 3 px/frame motion
        assert pred[0] == pytest.approx(5.0 + 3.0 * 20, abs=1.0)

    def test_covariance_stays_symmetric_psd(self):
        rng = np.random.default_rng(8)
        kf = KalmanBox(BBox(5, 5, 20, 20), sigma_p=1.0, sigma_m=2.0)
        for _ in range(200):
            kf.predict()
            kf.update(15.0 + rng.normal(0, 2), 15.0 + rng.normal(0, 2),
                      20.0, 20.0)
            assert np.allclose(kf.P, kf.P.T)
            assert np.linalg.eigvalsh(kf.P).min() > -1e-9

    def test_degenerate_size_floored(self):
        kf = KalmanBox(BBox(0, 0, 10, 10), sigma_p=1.0, sigma_m=1.0)
        kf.x[2] = -3.0
        kf.x[3] = 0.0
        got = kf.box()
        assert got.w == 1.0 and got.h == 1.0


class TestKalmanSmooth:
    def test_short_inputs_pass_through(self):
        assert kalman_smooth([]) == []
        assert kalman_smooth([(3.0, 4.0)]) == [(3.0, 4.0)]

    def test_constant_trajectory_unchanged(self):
        centers = [(50.0, 30.0)] * 12
        out = kalman_smooth(centers)
        assert out == pytest.approx(centers, abs=1e-9)

    def test_first_point_kept(self):
        out = kalman_smooth([(1.0, 2.0), (9.0, 7.0), (3.0, 4.0)])
        assert out[0] == (1.0, 2.0)
        assert len(out) == 3

    def test_reduces_jitter_on_noisy_line(self):
        rng = np.random.default_rng(4)
        true = [(20.0 + 3.0 * t, 54.0) for t in range(40)]
        noisy = [(x + rng.normal(0, 2.0), y + rng.normal(0, 2.0))
                 for x, y in true]
        smoothed = kalman_smooth(noisy)
        mse = lambda pts: np.mean([(a - x) ** 2 + (b - y) ** 2
                                   for (a, b), (x, y) in zip(pts, true)])
        assert mse(smoothed) < 0.6 * mse(noisy)

    def test_tracks_linear_motion_without_runaway_lag(self):
        rng = np.random.default_rng(4)
        true = [(20.0 + 3.0 * t, 54.0) for t in range(40)]
        noisy = [(x + rng.normal(0, 2.0), y + rng.normal(0, 2.0))
                 for x, y in true]
        smoothed = kalman_smooth(noisy)
        assert abs(smoothed[-1][0] - true[-1][0]) < 4.0


class TestShotTracker:
    def test_static_subject_full_confidence(self):
        video, tracker = run_tracker("static")
        window = BBox(0, 0, video.seq.frames[0].width,
                      video.seq.frames[0].height)
        for t in range(1, len(video.seq.frames)):
            tracker.step(video.seq.frames[t])
            assert tracker.primary.confidence >= 0.99
            assert iou(tracker.primary.box, video.boxes[t]) >= 0.9
            assert tracker.needs_reselection(t, window) is None

    def test_linear_motion_followed(self):
        video, tracker = run_tracker("linear")
        for t in range(1, len(video.seq.frames)):
            tracker.step(video.seq.frames[t])
            assert tracker.primary.confidence >= 0.9
            gx, gy = video.boxes[t].center()
            px, py = tracker.primary.box.center()
            assert abs(gx - px) <= 1.5 and abs(gy - py) <= 1.5

    def test_disappearing_subject_flags_loss(self):
        video, tracker = run_tracker("disappear")
        window = BBox(0, 0, video.seq.frames[0].width,
                      video.seq.frames[0].height)
        event = None
        for t in range(1, len(video.seq.frames)):
            tracker.step(video.seq.frames[t])
            event = tracker.needs_reselection(t, window)
            if event is not None:
                break
        assert isinstance(event, VerificationEvent)
        assert event.frame == 15  # subject removed from frame 15 on
        assert event.cause in ("low_confidence", "track_lost")

    def test_coverage_violation_when_window_misses_subjects(self):
        video, tracker = run_tracker("static")
        tracker.step(video.seq.frames[1])
        # a window far from the tracked box leaves it uncovered
        narrow = BBox(0, 0, 20, video.seq.frames[0].height)
        event = tracker.needs_reselection(1, narrow)
        assert event is not None and event.cause == "coverage_violation"

    def test_needs_at_least_one_box(self):
        video = make_tracking_video("static", seed=1)
        with pytest.raises(GeometryError):
            ShotTracker(video.seq.frames[0], [], 0)

    def test_primary_index_in_range(self):
        video = make_tracking_video("static", seed=1)
        with pytest.raises(GeometryError):
            ShotTracker(video.seq.frames[0], [video.boxes[0]], 3)

    def test_template_larger_than_frame_is_lost(self):
        rng = np.random.default_rng(2)
        frames = [Frame(rng.random((24, 24, 3))) for _ in range(2)]
        tracker = ShotTracker(frames[0], [BBox(0, 0, 24, 24)], 0)
        tracker.step(frames[1])
        assert tracker.primary.lost
        assert tracker.primary.confidence == 0.0

    def test_secondary_tracks_do_not_issue_primary_events(self):
        video = make_tracking_video("static", seed=3)
        far = BBox(150, 80, 20, 16)  # empty background corner
        tracker = ShotTracker(video.seq.frames[0], [video.boxes[0], far], 0)
        window = BBox(0, 0, video.seq.frames[0].width,
                      video.seq.frames[0].height)
        for t in range(1, 6):
            tracker.step(video.seq.frames[t])
        event = tracker.needs_reselection(5, window)
        # low-texture secondary may drift, but the primary stays valid
        assert event is None or event.cause == "coverage_violation"
