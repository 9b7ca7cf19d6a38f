"""Subject tracking within a shot: template matching plus Kalman filtering.

Each selected candidate becomes a track holding a grayscale template.
Every frame, the template is matched (zero-mean normalized correlation)
inside a search window around the Kalman-predicted position; the match
peak updates the filter and sets the track confidence. A verification
check decides when selection must run again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ConfigError, GeometryError
from .geometry import BBox
from .media import Frame, to_gray


@dataclass(frozen=True)
class TrackerParams:
    tau_conf: float = 0.5        # below this, the primary needs re-selection
    lost_conf: float = 0.15      # below this, the track is declared lost
    coverage_slack: float = 0.05  # tolerated horizontal overhang, of window w
    sigma_p: float = 1.0         # process noise (px / frame^2)
    sigma_m: float = 2.0         # measurement noise (px)
    template_alpha: float = 0.1  # template refresh rate on confident frames
    refresh_conf: float = 0.7    # refresh only above this confidence
    search_factor: float = 0.5   # search half-extent, relative to box size

    def __post_init__(self):
        if not 0.0 <= self.tau_conf <= 1.0:
            raise ConfigError(f"tau_conf must be in [0,1], got {self.tau_conf}")
        if self.sigma_p <= 0 or self.sigma_m <= 0:
            raise ConfigError("noise parameters must be positive")


# ---------------------------------------------------------------------------
# Kalman filters


class KalmanBox:
    """Constant-velocity filter over (cx, cy, w, h, vx, vy)."""

    def __init__(self, box: BBox, sigma_p: float, sigma_m: float):
        cx, cy = box.center()
        self.x = np.array([cx, cy, box.w, box.h, 0.0, 0.0])
        self.P = np.diag([sigma_m**2, sigma_m**2, sigma_m**2, sigma_m**2,
                          25.0, 25.0])
        self.F = np.eye(6)
        self.F[0, 4] = 1.0
        self.F[1, 5] = 1.0
        q = sigma_p**2
        self.Q = np.zeros((6, 6))
        for pos, vel in ((0, 4), (1, 5)):
            self.Q[pos, pos] = q / 4.0
            self.Q[pos, vel] = self.Q[vel, pos] = q / 2.0
            self.Q[vel, vel] = q
        self.Q[2, 2] = self.Q[3, 3] = 0.01 * q
        self.H = np.zeros((4, 6))
        self.H[0, 0] = self.H[1, 1] = self.H[2, 2] = self.H[3, 3] = 1.0
        self.R = np.eye(4) * sigma_m**2

    def predict(self) -> np.ndarray:
        self.x = self.F @ self.x
        self.P = self.F @ self.P @ self.F.T + self.Q
        self.P = 0.5 * (self.P + self.P.T)
        return self.x.copy()

    def update(self, cx: float, cy: float, w: float, h: float) -> None:
        z = np.array([cx, cy, w, h])
        y = z - self.H @ self.x
        s = self.H @ self.P @ self.H.T + self.R
        k = self.P @ self.H.T @ np.linalg.inv(s)
        self.x = self.x + k @ y
        ikh = np.eye(6) - k @ self.H
        # Joseph form keeps the covariance positive semi-definite
        self.P = ikh @ self.P @ ikh.T + k @ self.R @ k.T
        self.P = 0.5 * (self.P + self.P.T)

    def box(self) -> BBox:
        cx, cy, w, h = self.x[:4]
        w = max(w, 1.0)
        h = max(h, 1.0)
        return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


def kalman_smooth(
    centers: list[tuple[float, float]],
    sigma_p: float = 0.4,
    sigma_m: float = 3.0,
) -> list[tuple[float, float]]:
    """Forward constant-velocity smoothing of a per-frame center trajectory."""
    if len(centers) <= 1:
        return list(centers)
    x = np.array([centers[0][0], centers[0][1], 0.0, 0.0])
    P = np.diag([sigma_m**2, sigma_m**2, 25.0, 25.0])
    F = np.eye(4)
    F[0, 2] = F[1, 3] = 1.0
    q = sigma_p**2
    Q = np.zeros((4, 4))
    for pos, vel in ((0, 2), (1, 3)):
        Q[pos, pos] = q / 4.0
        Q[pos, vel] = Q[vel, pos] = q / 2.0
        Q[vel, vel] = q
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    R = np.eye(2) * sigma_m**2

    out = [centers[0]]
    for z in centers[1:]:
        x = F @ x
        P = F @ P @ F.T + Q
        y = np.array(z) - H @ x
        s = H @ P @ H.T + R
        k = P @ H.T @ np.linalg.inv(s)
        x = x + k @ y
        ikh = np.eye(4) - k @ H
        P = ikh @ P @ ikh.T + k @ R @ k.T
        P = 0.5 * (P + P.T)
        out.append((float(x[0]), float(x[1])))
    return out


# ---------------------------------------------------------------------------
# template tracks


@dataclass
class VerificationEvent:
    frame: int
    cause: str  # low_confidence | coverage_violation | track_lost


@dataclass
class Track:
    box: BBox
    template: np.ndarray
    kalman: KalmanBox
    confidence: float = 1.0
    lost: bool = False


def _extract_patch(gray: np.ndarray, box: BBox) -> np.ndarray:
    h, w = gray.shape
    x0 = int(round(box.x))
    y0 = int(round(box.y))
    x1 = min(w, x0 + max(2, int(round(box.w))))
    y1 = min(h, y0 + max(2, int(round(box.h))))
    x0 = max(0, min(x0, x1 - 2))
    y0 = max(0, min(y0, y1 - 2))
    return np.ascontiguousarray(gray[y0:y1, x0:x1])


class ShotTracker:
    """Tracks every candidate box through one shot; index 0 issues events."""

    def __init__(self, frame: Frame, boxes: list[BBox], primary_index: int,
                 params: TrackerParams | None = None, colorspace: str = "rgb"):
        if not boxes:
            raise GeometryError("tracker needs at least one box")
        if not 0 <= primary_index < len(boxes):
            raise GeometryError(f"primary index {primary_index} out of range")
        self.params = params or TrackerParams()
        self.colorspace = colorspace
        self.primary_index = primary_index
        gray = to_gray(frame, colorspace)
        self.tracks = [
            Track(
                box=b.clamped(frame.width, frame.height),
                template=_extract_patch(gray, b.clamped(frame.width, frame.height)),
                kalman=KalmanBox(b, self.params.sigma_p, self.params.sigma_m),
            )
            for b in boxes
        ]

    @property
    def primary(self) -> Track:
        return self.tracks[self.primary_index]

    def step(self, frame: Frame) -> None:
        gray = to_gray(frame, self.colorspace)
        fh, fw = gray.shape
        p = self.params
        for tr in self.tracks:
            if tr.lost:
                continue
            pred = tr.kalman.predict()
            th, tw = tr.template.shape
            if th >= fh or tw >= fw:
                tr.lost = True
                tr.confidence = 0.0
                continue
            # search window for the template's top-left corner
            nx = pred[0] - tw / 2.0
            ny = pred[1] - th / 2.0
            x0 = int(math.floor(nx - p.search_factor * tw))
            x1 = int(math.ceil(nx + p.search_factor * tw))
            y0 = int(math.floor(ny - p.search_factor * th))
            y1 = int(math.ceil(ny + p.search_factor * th))
            x0 = max(0, x0)
            y0 = max(0, y0)
            x1 = min(fw - tw, x1)
            y1 = min(fh - th, y1)
            if x1 < x0 or y1 < y0:
                tr.lost = True
                tr.confidence = 0.0
                continue
            scores = K.ncc_match(gray, tr.template, x0, y0, x1, y1)
            iy, ix = np.unravel_index(int(np.argmax(scores)), scores.shape)
            peak = float(scores[iy, ix])
            bx = float(x0 + ix)
            by = float(y0 + iy)
            tr.confidence = max(0.0, peak)
            tr.box = BBox(bx, by, float(tw), float(th))
            tr.kalman.update(bx + tw / 2.0, by + th / 2.0, float(tw), float(th))
            if tr.confidence < p.lost_conf:
                tr.lost = True
            elif tr.confidence >= p.refresh_conf:
                patch = _extract_patch(gray, tr.box)
                if patch.shape == tr.template.shape:
                    tr.template = (
                        (1.0 - p.template_alpha) * tr.template
                        + p.template_alpha * patch
                    )

    def needs_reselection(self, t: int, window: BBox) -> VerificationEvent | None:
        p = self.params
        if self.primary.lost:
            return VerificationEvent(frame=t, cause="track_lost")
        if self.primary.confidence < p.tau_conf:
            return VerificationEvent(frame=t, cause="low_confidence")
        live = [tr.box for tr in self.tracks if not tr.lost]
        if live:
            left = min(b.x for b in live)
            right = max(b.right for b in live)
            excess = max(0.0, window.x - left) + max(0.0, right - window.right)
            if excess > p.coverage_slack * window.w:
                return VerificationEvent(frame=t, cause="coverage_violation")
        return None
