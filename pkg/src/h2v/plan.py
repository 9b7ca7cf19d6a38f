"""Vertical crop-window planning and crop-plan serialization.

A plan holds one full-height window per frame, all with identical even
width derived from the target aspect ratio. Within a shot the window
center may move at most a fixed number of pixels per frame; across shot
boundaries it jumps freely.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CoverageError, GeometryError, SchemaError
from .geometry import BBox
from .media import Frame, FrameSequence, _load_json, _write_json


def parse_aspect(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+):(\d+)", text.strip())
    if not m:
        raise SchemaError(f"aspect must look like '9:16', got {text!r}")
    aw, ah = int(m.group(1)), int(m.group(2))
    if aw <= 0 or ah <= 0:
        raise SchemaError(f"aspect components must be positive: {text!r}")
    return aw, ah


def format_aspect(aspect: tuple[int, int]) -> str:
    return f"{aspect[0]}:{aspect[1]}"


def round_to_even(v: float) -> int:
    """Nearest even integer (ties resolved upward via half-even on v/2)."""
    return 2 * int(round(v / 2.0))


@dataclass(frozen=True)
class CropWindow:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"degenerate crop window {self}")
        if self.x < 0 or self.y < 0:
            raise GeometryError(f"negative crop origin {self}")

    def as_bbox(self) -> BBox:
        return BBox(float(self.x), float(self.y), float(self.w), float(self.h))

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def center_x(self) -> float:
        return self.x + self.w / 2.0


@dataclass
class CropPlan:
    aspect: tuple[int, int]
    windows: list[CropWindow]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.windows:
            raise CoverageError("crop plan has no windows")
        w0 = self.windows[0]
        for i, win in enumerate(self.windows):
            if (win.w, win.h) != (w0.w, w0.h):
                raise GeometryError(
                    f"window {i} is {win.w}x{win.h}, expected {w0.w}x{w0.h}"
                )

    def __len__(self) -> int:
        return len(self.windows)

    def centers(self) -> list[tuple[float, float]]:
        return [(w.center_x, w.y + w.h / 2.0) for w in self.windows]


def crop_window(
    subject_cx: float,
    frame_w: int,
    frame_h: int,
    aspect: tuple[int, int] = (9, 16),
) -> tuple[CropWindow, bool]:
    """Full-height window of the target aspect centered on subject_cx.

    Returns (window, full_frame_fallback). The fallback flag is set when
    the requested aspect is wider than the frame itself, in which case the
    whole frame is returned.
    """
    aw, ah = aspect
    if frame_w <= 0 or frame_h <= 0:
        raise GeometryError(f"bad frame dimensions {frame_w}x{frame_h}")
    w = round_to_even(frame_h * aw / ah)
    if w >= frame_w:
        return CropWindow(0, 0, frame_w, frame_h), True
    w = max(w, 2)
    x = int(round(subject_cx - w / 2.0))
    x = min(max(x, 0), frame_w - w)
    return CropWindow(x, 0, w, frame_h), False


def plan_video(
    centers_x: list[float],
    shots: list[tuple[int, int]],
    frame_w: int,
    frame_h: int,
    aspect: tuple[int, int] = (9, 16),
    max_slew: int = 20,
    provenance: dict | None = None,
) -> CropPlan:
    """Turn per-frame subject centers into a rate-limited window plan.

    Within each shot the window x moves at most max_slew px per frame; the
    first frame of every shot snaps directly to its target.
    """
    t_total = len(centers_x)
    if not shots or shots[0][0] != 0 or shots[-1][1] != t_total:
        raise CoverageError(
            f"shots {shots} do not tile the {t_total}-frame video"
        )
    for (s0, e0), (s1, _) in zip(shots[:-1], shots[1:]):
        if e0 != s1:
            raise CoverageError(f"gap between shots at frame {e0}")

    windows: list[CropWindow] = []
    full_frame = False
    for s, e in shots:
        prev_x: int | None = None
        for t in range(s, e):
            win, fallback = crop_window(centers_x[t], frame_w, frame_h, aspect)
            full_frame = full_frame or fallback
            if prev_x is not None:
                dx = win.x - prev_x
                if dx > max_slew:
                    win = CropWindow(prev_x + max_slew, win.y, win.w, win.h)
                elif dx < -max_slew:
                    win = CropWindow(prev_x - max_slew, win.y, win.w, win.h)
            windows.append(win)
            prev_x = windows[-1].x
    prov = dict(provenance or {})
    prov.setdefault("shots", [[s, e] for s, e in shots])
    if full_frame:
        prov["full_frame_fallback"] = True
    return CropPlan(aspect=aspect, windows=windows, provenance=prov)


# ---------------------------------------------------------------------------
# serialization


def plan_to_dict(plan: CropPlan) -> dict:
    doc = {
        "aspect": format_aspect(plan.aspect),
        "frames": [
            {"t": i, "window": w.as_list()} for i, w in enumerate(plan.windows)
        ],
    }
    if plan.provenance:
        doc["provenance"] = plan.provenance
    return doc


def write_crop_plan(plan: CropPlan, path: str | Path) -> None:
    _write_json(plan_to_dict(plan), path)


def parse_crop_plan(source) -> CropPlan:
    obj = _load_json(source)
    if "aspect" not in obj or "frames" not in obj:
        raise SchemaError("crop plan needs 'aspect' and 'frames'")
    aspect = parse_aspect(str(obj["aspect"]))
    raw = obj["frames"]
    if not isinstance(raw, list) or not raw:
        raise SchemaError("crop plan 'frames' must be a non-empty list")
    by_t: dict[int, CropWindow] = {}
    for item in raw:
        if "t" not in item or "window" not in item:
            raise SchemaError("plan frame needs 't' and 'window'")
        t = int(item["t"])
        wlist = item["window"]
        if not (isinstance(wlist, list) and len(wlist) == 4):
            raise SchemaError(f"frame {t}: window must be [x, y, w, h]")
        if t in by_t:
            raise SchemaError(f"duplicate plan entry for frame {t}")
        by_t[t] = CropWindow(*(int(v) for v in wlist))
    t_max = max(by_t)
    missing = [t for t in range(t_max + 1) if t not in by_t]
    if missing:
        raise CoverageError(f"crop plan missing frames {missing[:10]}")
    windows = [by_t[t] for t in range(t_max + 1)]
    prov = obj.get("provenance", {})
    return CropPlan(aspect=aspect, windows=windows, provenance=prov)


# ---------------------------------------------------------------------------
# rendering


def crop_frame(frame: Frame, win: CropWindow, index: int = 0) -> Frame:
    """Extract one planned window from one frame; pixels are copied exactly."""
    if win.right > frame.width or win.y + win.h > frame.height:
        raise GeometryError(
            f"frame {index}: window {win.as_list()} exceeds "
            f"{frame.width}x{frame.height} frame"
        )
    data = frame.data[win.y:win.y + win.h, win.x:win.right]
    return Frame(np.ascontiguousarray(data))


def render_vertical(seq: FrameSequence, plan: CropPlan) -> FrameSequence:
    """Crop every frame to its planned window."""
    if len(plan.windows) != len(seq):
        raise CoverageError(
            f"plan covers {len(plan.windows)} frames, video has {len(seq)}"
        )
    out = [crop_frame(frame, win, i)
           for i, (frame, win) in enumerate(zip(seq.frames, plan.windows))]
    return FrameSequence(out, fps=seq.fps, colorspace=seq.colorspace)
