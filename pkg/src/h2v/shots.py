"""Shot segmentation from color-histogram discontinuities.

A boundary is declared where the chi-square distance between adjacent
frames' histograms spikes well above the local (rolling median) level.
The adaptive threshold keeps gradual transitions (fades, dissolves) from
splintering into spurious cuts while isolated hard cuts stand out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError
from .media import FrameSequence


@dataclass(frozen=True)
class SbdParams:
    bins: int = 16
    threshold: float = 6.0      # multiple of the local median distance
    floor: float = 0.02         # additive floor so static scenes never cut
    min_len: int = 8            # shorter shots merge into their predecessor
    median_radius: int = 12     # half-width of the rolling median window

    def __post_init__(self):
        if self.bins < 8:
            raise ConfigError(f"histogram bins must be >= 8, got {self.bins}")
        if self.min_len < 1:
            raise ConfigError(f"min_len must be >= 1, got {self.min_len}")
        if self.threshold <= 0 or self.floor < 0:
            raise ConfigError("threshold must be positive and floor non-negative")


def _soft_histograms(seq: FrameSequence, bins: int) -> np.ndarray:
    """(T, C, bins) linearly-interpolated histograms, each normalized to 1."""
    t = len(seq)
    c = seq.channels
    out = np.zeros((t, c, bins))
    scale = bins - 1
    for i, frame in enumerate(seq.frames):
        for ch in range(c):
            v = frame.data[:, :, ch].ravel() * scale
            lo = np.floor(v).astype(np.intp)
            frac = v - lo
            hi = np.minimum(lo + 1, bins - 1)
            counts = np.bincount(lo, weights=1.0 - frac, minlength=bins)
            counts += np.bincount(hi, weights=frac, minlength=bins)
            out[i, ch] = counts / v.size
    return out


def _chi_square(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over channels of the 0.5 * sum((a-b)^2 / (a+b)) distance."""
    num = (a - b) ** 2
    den = a + b + 1e-12
    return float(0.5 * (num / den).sum(axis=-1).mean())


def frame_distances(seq: FrameSequence, bins: int = 16) -> np.ndarray:
    """Distance between each adjacent frame pair; length T-1."""
    hist = _soft_histograms(seq, bins)
    if len(seq) < 2:
        return np.zeros(0)
    return np.array([
        _chi_square(hist[i], hist[i + 1]) for i in range(len(seq) - 1)
    ])


def _rolling_median(d: np.ndarray, radius: int) -> np.ndarray:
    out = np.empty_like(d)
    n = d.size
    for i in range(n):
        lo = max(0, i - radius)
        hi = min(n, i + radius + 1)
        out[i] = np.median(d[lo:hi])
    return out


def detect_shots(seq: FrameSequence, params: SbdParams | None = None) -> list[tuple[int, int]]:
    """Segment a sequence into half-open [start, end) shot ranges tiling [0, T)."""
    if params is None:
        params = SbdParams()
    t = len(seq)
    if t == 0:
        raise EmptyInputError("cannot segment an empty sequence")
    d = frame_distances(seq, params.bins)
    if d.size == 0:
        return [(0, t)]
    med = _rolling_median(d, params.median_radius)
    cuts = [
        i + 1
        for i in range(d.size)
        if d[i] > params.threshold * (med[i] + params.floor)
    ]

    shots: list[tuple[int, int]] = []
    start = 0
    for cut in cuts:
        shots.append((start, cut))
        start = cut
    shots.append((start, t))

    # Merge too-short shots into their predecessor; a short head merges
    # forward into the next shot instead.
    merged: list[tuple[int, int]] = []
    for s, e in shots:
        if merged and (e - s) < params.min_len:
            ps, _ = merged[-1]
            merged[-1] = (ps, e)
        elif not merged and (e - s) < params.min_len and len(shots) > 1:
            # defer: extend the upcoming shot backwards
            continue
        else:
            if not merged and s != 0:
                s = 0
            merged.append((s, e))
    if not merged:
        merged = [(0, t)]
    return merged


def shot_of(shots: list[tuple[int, int]], t: int) -> int:
    """Index of the shot containing frame t."""
    for i, (s, e) in enumerate(shots):
        if s <= t < e:
            return i
    raise EmptyInputError(f"frame {t} not covered by any shot")
