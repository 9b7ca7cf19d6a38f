"""Per-frame cue maps and the combined feature stack for candidate scoring.

Three cues share one coarse grid (one cell per 16x16 pixel block of the
input): a spectral-residual saliency map, a Tenengrad sharpness map, and a
learned embedding from a small convolutional encoder. Saliency/sharpness
are classical and fixed; the embedding is trainable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, GeometryError
from .geometry import BBox
from .media import Frame, to_gray
from .nn import Tensor, concat
from .nn import functional as F

CELL = 16  # pixels per feature-grid cell


def grid_dims(height: int, width: int) -> tuple[int, int]:
    return (height + CELL - 1) // CELL, (width + CELL - 1) // CELL


def resize_plane(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a single 2-D plane (non-differentiable path)."""
    wy = F._resize_matrix(plane.shape[0], out_h)
    wx = F._resize_matrix(plane.shape[1], out_w)
    return wy @ plane @ wx.T


def _box_filter_reflect(a: np.ndarray, radius: int) -> np.ndarray:
    """Mean filter with reflect padding (keeps mirror symmetry exact)."""
    k = 2 * radius + 1
    p = np.pad(a, radius, mode="reflect")
    c = np.cumsum(np.cumsum(p, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = a.shape
    s = (
        c[k : k + h, k : k + w]
        - c[:h, k : k + w]
        - c[k : k + h, :w]
        + c[:h, :w]
    )
    return s / (k * k)


def _box_filter_wrap(a: np.ndarray, radius: int) -> np.ndarray:
    """Circular mean filter (used on spectra, where indices wrap)."""
    out = np.zeros_like(a)
    for dy in range(-radius, radius + 1):
        rolled = np.roll(a, dy, axis=0)
        for dx in range(-radius, radius + 1):
            out += np.roll(rolled, dx, axis=1)
    return out / (2 * radius + 1) ** 2


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]) / 4.0
_SOBEL_Y = _SOBEL_X.T


def _conv3_reflect(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1, mode="reflect")
    win = np.lib.stride_tricks.sliding_window_view(p, (3, 3))
    return np.einsum("hwij,ij->hw", win, k)


def _cell_reduce(a: np.ndarray, op: str = "mean") -> np.ndarray:
    """Aggregate a full-resolution plane onto the cell grid; edge cells use
    only the pixels they actually cover."""
    h, w = a.shape
    gh, gw = grid_dims(h, w)
    row_idx = np.arange(0, h, CELL)
    col_idx = np.arange(0, w, CELL)
    sums = np.add.reduceat(np.add.reduceat(a, row_idx, axis=0), col_idx, axis=1)
    rows = np.minimum(row_idx + CELL, h) - row_idx
    cols = np.minimum(col_idx + CELL, w) - col_idx
    counts = rows[:, None] * cols[None, :]
    return sums / counts


def tenengrad_map(frame: Frame, grad_threshold: float = 0.05,
                  colorspace: str = "rgb") -> np.ndarray:
    """Cell-grid sharpness map from thresholded Sobel gradient magnitude.

    Sobel responses are scaled so a full black/white step edge measures
    1.0; magnitudes below grad_threshold are treated as flat. The cell
    averages are normalized by the maximum cell unless the whole map is
    effectively zero.
    """
    gray = to_gray(frame, colorspace)
    gx = _conv3_reflect(gray, _SOBEL_X)
    gy = _conv3_reflect(gray, _SOBEL_Y)
    mag = np.hypot(gx, gy)
    mag[mag < grad_threshold] = 0.0
    cells = _cell_reduce(mag)
    peak = cells.max()
    if peak < 1e-6:
        return np.zeros_like(cells)
    return np.clip(cells / peak, 0.0, 1.0)


_SR_SIZE = 64


def spectral_residual_saliency(frame: Frame, colorspace: str = "rgb") -> np.ndarray:
    """Cell-grid saliency from the spectral-residual transform.

    The frame is reduced to 64x64, the log-amplitude spectrum is compared
    with its local (circular 3x3) mean, and the squared inverse transform
    of the residual (with original phase) is smoothed and min-max
    normalized. Flat frames map to an all-zero grid.
    """
    gray = to_gray(frame, colorspace)
    small = resize_plane(gray, _SR_SIZE, _SR_SIZE)
    spec = np.fft.fft2(small)
    amp = np.abs(spec)
    phase = np.angle(spec)
    # relative amplitude floor: exact spectral nulls (ideal synthetic
    # shapes) otherwise explode under whitening and drown the object
    log_amp = np.log(amp + 0.01 * amp.mean() + 1e-12)
    residual = log_amp - _box_filter_wrap(log_amp, 1)
    sal = np.abs(np.fft.ifft2(np.exp(residual + 1j * phase))) ** 2
    sal = _box_filter_reflect(sal, 2)
    gh, gw = grid_dims(frame.height, frame.width)
    sal = resize_plane(sal, gh, gw)
    lo, hi = float(sal.min()), float(sal.max())
    if hi - lo < 1e-9 or hi - lo < 1e-3 * abs(hi):
        return np.zeros_like(sal)
    return (sal - lo) / (hi - lo)


class FeatureEncoder:
    """Small trainable pixel encoder: three stride-2 convs and a 1x1 mix.

    Output stride is 8; build_feature_stack resizes it onto the cell grid.
    """

    def __init__(self, out_channels: int = 8, rng: np.random.Generator | None = None):
        from .nn.modules import Conv2d, Module

        if out_channels <= 0:
            raise ConfigError("encoder needs at least one output channel")
        if rng is None:
            rng = np.random.default_rng(0)

        class _Net(Module):
            def __init__(self):
                self.c1 = Conv2d(3, 8, 3, rng, stride=2, padding=1)
                self.c2 = Conv2d(8, 16, 3, rng, stride=2, padding=1)
                self.c3 = Conv2d(16, 16, 3, rng, stride=2, padding=1)
                self.mix = Conv2d(16, out_channels, 1, rng)

            def forward(self, x: Tensor) -> Tensor:
                x = self.c1(x).relu()
                x = self.c2(x).relu()
                x = self.c3(x).relu()
                return self.mix(x)

        self.out_channels = out_channels
        self.net = _Net()

    def named_parameters(self, prefix: str = "encoder"):
        return self.net.named_parameters(prefix)

    def parameters(self):
        return self.net.parameters()

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        for name, p in own.items():
            if name not in state:
                raise DataError(f"checkpoint missing encoder tensor {name!r}")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise DataError(
                    f"shape mismatch for {name}: checkpoint {value.shape}, "
                    f"model {p.data.shape}"
                )
            p.data = value.copy()

    def forward(self, frame: Frame) -> Tensor:
        a = frame.data
        if a.shape[2] == 1:
            a = np.repeat(a, 3, axis=2)
        x = Tensor(np.ascontiguousarray(a.transpose(2, 0, 1)[None]))
        return self.net(x)

    __call__ = forward


@dataclass
class FeatureStack:
    """Aligned cue maps on the cell grid: saliency, sharpness, embedding."""

    sal: np.ndarray                # (gh, gw) in [0,1]
    sharp: np.ndarray              # (gh, gw) in [0,1]
    embed: Tensor | None           # (1, C, gh, gw) or None
    frame_w: int
    frame_h: int

    @property
    def grid(self) -> tuple[int, int]:
        return self.sal.shape  # type: ignore[return-value]

    @property
    def channels(self) -> int:
        return 2 + (self.embed.shape[1] if self.embed is not None else 0)

    def concat(self) -> Tensor:
        """(1, 2+C, gh, gw) tensor; classical maps are constants."""
        parts = [
            Tensor(self.sal[None, None]),
            Tensor(self.sharp[None, None]),
        ]
        if self.embed is not None:
            parts.append(self.embed)
        return concat(parts, axis=1)


def build_feature_stack(
    frame: Frame,
    encoder: FeatureEncoder | None = None,
    colorspace: str = "rgb",
    grad_threshold: float = 0.05,
) -> FeatureStack:
    gh, gw = grid_dims(frame.height, frame.width)
    sal = spectral_residual_saliency(frame, colorspace)
    sharp = tenengrad_map(frame, grad_threshold, colorspace)
    embed = None
    if encoder is not None:
        raw = encoder(frame)
        embed = F.bilinear_resize(raw, gh, gw)
    return FeatureStack(sal=sal, sharp=sharp, embed=embed,
                        frame_w=frame.width, frame_h=frame.height)


# ---------------------------------------------------------------------------
# per-candidate measurements


def box_cell_mean(plane: np.ndarray, box: BBox, frame_w: int, frame_h: int) -> float:
    """Mean of a cell-grid plane inside a pixel-space box, weighting edge
    cells by fractional coverage."""
    gh, gw = plane.shape
    clamped = box.clamped(frame_w, frame_h)
    x0, x1 = clamped.x / CELL, clamped.right / CELL
    y0, y1 = clamped.y / CELL, clamped.bottom / CELL
    x0, x1 = max(x0, 0.0), min(x1, gw)
    y0, y1 = max(y0, 0.0), min(y1, gh)
    if x1 <= x0 or y1 <= y0:
        raise GeometryError("box does not cover any feature cell")
    cols = np.clip(np.minimum(np.arange(1, gw + 1), x1)
                   - np.maximum(np.arange(gw), x0), 0.0, None)
    rows = np.clip(np.minimum(np.arange(1, gh + 1), y1)
                   - np.maximum(np.arange(gh), y0), 0.0, None)
    weights = rows[:, None] * cols[None, :]
    total = weights.sum()
    return float((plane * weights).sum() / total)


def loc_prior(box: BBox, frame_w: float, frame_h: float) -> np.ndarray:
    """Normalized [x/W, y/H, w/W, h/H], clamped to [0, 1]."""
    v = np.array([
        box.x / frame_w,
        box.y / frame_h,
        box.w / frame_w,
        box.h / frame_h,
    ])
    return np.clip(v, 0.0, 1.0)


def candidate_descriptor(stack: FeatureStack, box: BBox) -> np.ndarray:
    """6-vector [saliency mean, sharpness mean, x/W, y/H, w/W, h/H]."""
    sal = box_cell_mean(stack.sal, box, stack.frame_w, stack.frame_h)
    sharp = box_cell_mean(stack.sharp, box, stack.frame_w, stack.frame_h)
    return np.concatenate([[sal, sharp],
                           loc_prior(box, stack.frame_w, stack.frame_h)])


def position_term(box: BBox, frame_w: float, frame_h: float) -> float:
    """Centrality in [0,1]: 1 at the frame center, ~0 at a corner."""
    cx, cy = box.center()
    diag = math.hypot(frame_w, frame_h)
    off = math.hypot(cx - frame_w / 2.0, cy - frame_h / 2.0)
    return max(0.0, 1.0 - 2.0 * off / diag)


def size_term(box: BBox, frame_w: float, frame_h: float) -> float:
    """Box area as a fraction of frame area."""
    return min(1.0, box.area() / (frame_w * frame_h))


# ---------------------------------------------------------------------------
# builtin fallback detector


def detect_bright_regions(frame: Frame, colorspace: str = "rgb",
                          max_regions: int = 6) -> list:
    """Very small connected-component proposer over bright pixels.

    Exists so end-to-end runs work without sidecar detections; not a real
    detector. Returns media.Detection objects sorted by confidence.
    """
    from .media import Detection

    gray = to_gray(frame, colorspace)
    thr = gray.mean() + 1.2 * gray.std()
    mask = gray > thr
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    regions = []
    next_label = 0
    min_area = max(16, int(0.002 * h * w))
    for sy in range(h):
        row = mask[sy]
        for sx in np.nonzero(row & (labels[sy] == 0))[0]:
            next_label += 1
            stack = [(sy, int(sx))]
            labels[sy, sx] = next_label
            xs_min = xs_max = int(sx)
            ys_min = ys_max = sy
            area = 0
            val = 0.0
            while stack:
                y, x = stack.pop()
                area += 1
                val += gray[y, x]
                xs_min, xs_max = min(xs_min, x), max(xs_max, x)
                ys_min, ys_max = min(ys_min, y), max(ys_max, y)
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] \
                            and labels[ny, nx] == 0:
                        labels[ny, nx] = next_label
                        stack.append((ny, nx))
            if area >= min_area:
                regions.append((area, val / area,
                                BBox(float(xs_min), float(ys_min),
                                     float(xs_max - xs_min + 1),
                                     float(ys_max - ys_min + 1))))
    regions.sort(key=lambda r: (-r[0], -r[1]))
    out = []
    for area, mean_val, box in regions[:max_regions]:
        conf = min(0.99, 0.5 + 0.5 * float(mean_val))
        out.append(Detection(conf=conf, body=box))
    return out
