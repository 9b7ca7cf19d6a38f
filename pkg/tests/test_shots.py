"""Shot boundary detection on synthetic cuts and gradual transitions."""

import numpy as np
import pytest

from h2v.errors import ConfigError, EmptyInputError
from h2v.media import Frame, FrameSequence
from h2v.shots import SbdParams, detect_shots, frame_distances, shot_of
from h2v.synth import make_crossfade_video, make_multishot_video


def solid(level, tint=(1.0, 1.0, 1.0), n=1, w=48, h=32, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n):
        data = np.empty((h, w, 3))
        for c in range(3):
            data[:, :, c] = level * tint[c]
        if noise:
            data += rng.uniform(-noise, noise, data.shape)
        frames.append(Frame(np.clip(data, 0.0, 1.0)))
    return frames


class TestDistances:
    def test_identical_frames_zero_distance(self):
        seq = FrameSequence(solid(0.5, n=4))
        d = frame_distances(seq)
        assert d == pytest.approx(np.zeros(3))

    def test_cut_produces_spike(self):
        frames = solid(0.2, n=6, noise=0.01, seed=1) + \
            solid(0.8, (0.4, 0.9, 0.5), n=6, noise=0.01, seed=2)
        d = frame_distances(FrameSequence(frames))
        assert np.argmax(d) == 5
        assert d[5] > 10 * np.median(np.delete(d, 5))

    def test_single_frame_sequence(self):
        seq = FrameSequence(solid(0.5))
        assert frame_distances(seq).size == 0
        assert detect_shots(seq) == [(0, 1)]


class TestDetection:
    def test_exact_boundaries_on_solid_cuts(self):
        frames = (solid(0.15, n=10, noise=0.005, seed=3)
                  + solid(0.6, (0.9, 0.5, 0.4), n=9, noise=0.005, seed=4)
                  + solid(0.35, (0.3, 0.6, 1.0), n=11, noise=0.005, seed=5))
        shots = detect_shots(FrameSequence(frames))
        assert shots == [(0, 10), (10, 19), (19, 30)]

    def test_static_scene_single_shot(self):
        shots = detect_shots(FrameSequence(solid(0.4, n=40, noise=0.01)))
        assert shots == [(0, 40)]

    def test_tiling_property(self):
        video = make_multishot_video(seed=5, n_shots=4)
        shots = detect_shots(video.seq)
        assert shots[0][0] == 0
        assert shots[-1][1] == len(video.seq)
        for (s0, e0), (s1, e1) in zip(shots, shots[1:]):
            assert e0 == s1
            assert e1 > s1

    def test_recovers_generated_boundaries(self):
        video = make_multishot_video(seed=11, n_shots=3)
        assert detect_shots(video.seq) == video.shots

    def test_crossfade_is_one_shot(self):
        seq = make_crossfade_video(seed=2)
        assert detect_shots(seq) == [(0, len(seq))]

    def test_min_len_merges_short_tail(self):
        frames = (solid(0.15, n=12, noise=0.004, seed=6)
                  + solid(0.7, (0.5, 0.9, 0.6), n=3, noise=0.004, seed=7))
        shots = detect_shots(FrameSequence(frames),
                             SbdParams(min_len=8))
        # the 3-frame tail is below min_len and folds into the first shot
        assert shots == [(0, 15)]

    def test_min_len_merges_short_head(self):
        frames = (solid(0.7, (0.5, 0.9, 0.6), n=3, noise=0.004, seed=8)
                  + solid(0.15, n=12, noise=0.004, seed=9))
        shots = detect_shots(FrameSequence(frames),
                             SbdParams(min_len=8))
        assert shots == [(0, 15)]

    def test_param_validation(self):
        with pytest.raises(ConfigError):
            SbdParams(bins=4)
        with pytest.raises(ConfigError):
            SbdParams(min_len=0)
        with pytest.raises(ConfigError):
            SbdParams(threshold=0.0)


class TestShotOf:
    def test_lookup(self):
        shots = [(0, 10), (10, 25), (25, 30)]
        assert shot_of(shots, 0) == 0
        assert shot_of(shots, 9) == 0
        assert shot_of(shots, 10) == 1
        assert shot_of(shots, 29) == 2
        with pytest.raises(EmptyInputError):
            shot_of(shots, 30)
