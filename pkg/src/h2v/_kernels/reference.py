"""Pure-numpy implementations of the hot kernels.

Semantics here are the contract; the compiled backend in ``_native.pyx``
must agree with these to float64 round-off on the same inputs (same
sampling conventions, same cutoffs).
"""

from __future__ import annotations

import numpy as np


def im2col(x: np.ndarray, kh: int, kw: int, sh: int, sw: int) -> np.ndarray:
    """(N,C,H,W) -> (N, C*kh*kw, OH*OW) patch matrix. Input is pre-padded."""
    n, c, h, w = x.shape
    oh = (h - kh) // sh + 1
    ow = (w - kw) // sw + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    win = win[:, :, ::sh, ::sw, :, :]  # (N, C, OH, OW, kh, kw)
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kh * kw, oh * ow)
    return np.ascontiguousarray(cols)


def col2im(
    cols: np.ndarray,
    c: int,
    h: int,
    w: int,
    kh: int,
    kw: int,
    sh: int,
    sw: int,
) -> np.ndarray:
    """Scatter-add inverse of im2col; returns (N, C, H, W)."""
    n = cols.shape[0]
    oh = (h - kh) // sh + 1
    ow = (w - kw) // sw + 1
    patches = cols.reshape(n, c, kh, kw, oh, ow)
    out = np.zeros((n, c, h, w), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + sh * oh : sh, j : j + sw * ow : sw] += patches[:, :, i, j]
    return out


def _roi_sample_grid(rois, oh, ow, ratio):
    """Sample coordinates for every (roi, cell, sub-sample) point.

    Returns (ys, xs, batch) each of shape (K, oh, ow, ratio, ratio).
    Legacy grid (no half-pixel alignment): roi spans [x0, x1) in feature
    units, each cell takes ratio x ratio samples at its interior
    quarter-points.
    """
    k = rois.shape[0]
    batch = rois[:, 0].astype(np.intp)
    x0, y0, x1, y1 = rois[:, 1], rois[:, 2], rois[:, 3], rois[:, 4]
    roi_w = np.maximum(x1 - x0, 1.0)
    roi_h = np.maximum(y1 - y0, 1.0)
    bin_h = roi_h / oh
    bin_w = roi_w / ow
    ph = np.arange(oh, dtype=np.float64)
    pw = np.arange(ow, dtype=np.float64)
    sy = (np.arange(ratio, dtype=np.float64) + 0.5) / ratio
    sx = sy
    ys = (
        y0[:, None, None, None, None]
        + (ph[None, :, None, None, None] + sy[None, None, None, :, None])
        * bin_h[:, None, None, None, None]
    )
    xs = (
        x0[:, None, None, None, None]
        + (pw[None, None, :, None, None] + sx[None, None, None, None, :])
        * bin_w[:, None, None, None, None]
    )
    ys = np.broadcast_to(ys, (k, oh, ow, ratio, ratio))
    xs = np.broadcast_to(xs, (k, oh, ow, ratio, ratio))
    b = np.broadcast_to(batch[:, None, None, None, None], ys.shape)
    return ys, xs, b


def _bilinear_parts(ys, xs, h, w):
    """Neighbour indices and weights for bilinear sampling with the
    out-of-range-by-more-than-one-cell cutoff."""
    valid = (ys > -1.0) & (ys < h) & (xs > -1.0) & (xs < w)
    y = np.clip(ys, 0.0, None)
    x = np.clip(xs, 0.0, None)
    yl = y.astype(np.intp)
    xl = x.astype(np.intp)
    yl = np.minimum(yl, h - 1)
    xl = np.minimum(xl, w - 1)
    yh = np.minimum(yl + 1, h - 1)
    xh = np.minimum(xl + 1, w - 1)
    ly = np.where(yl >= h - 1, np.where(y >= h - 1, 0.0, y - yl), y - yl)
    lx = np.where(xl >= w - 1, np.where(x >= w - 1, 0.0, x - xl), x - xl)
    ly = np.clip(ly, 0.0, 1.0)
    lx = np.clip(lx, 0.0, 1.0)
    w00 = (1 - ly) * (1 - lx) * valid
    w01 = (1 - ly) * lx * valid
    w10 = ly * (1 - lx) * valid
    w11 = ly * lx * valid
    return (yl, xl, yh, xh), (w00, w01, w10, w11)


def roi_align_forward(
    fmap: np.ndarray, rois: np.ndarray, oh: int, ow: int, ratio: int
) -> np.ndarray:
    """fmap (N,C,H,W), rois (K,5) as [batch, x0, y0, x1, y1] in feature
    coordinates -> (K, C, oh, ow); each cell averages ratio^2 bilinear
    samples."""
    n, c, h, w = fmap.shape
    k = rois.shape[0]
    ys, xs, b = _roi_sample_grid(rois, oh, ow, ratio)
    (yl, xl, yh, xh), (w00, w01, w10, w11) = _bilinear_parts(ys, xs, h, w)
    bf = b.ravel()
    v = (
        fmap[bf, :, yl.ravel(), xl.ravel()] * w00.ravel()[:, None]
        + fmap[bf, :, yl.ravel(), xh.ravel()] * w01.ravel()[:, None]
        + fmap[bf, :, yh.ravel(), xl.ravel()] * w10.ravel()[:, None]
        + fmap[bf, :, yh.ravel(), xh.ravel()] * w11.ravel()[:, None]
    )  # (S, C)
    v = v.reshape(k, oh, ow, ratio * ratio, c).mean(axis=3)
    return np.ascontiguousarray(v.transpose(0, 3, 1, 2))


def roi_align_backward(
    grad: np.ndarray,
    rois: np.ndarray,
    n: int,
    c: int,
    h: int,
    w: int,
    ratio: int,
) -> np.ndarray:
    """Adjoint of roi_align_forward; grad (K,C,oh,ow) -> (N,C,H,W)."""
    k, _, oh, ow = grad.shape
    ys, xs, b = _roi_sample_grid(rois, oh, ow, ratio)
    (yl, xl, yh, xh), ws = _bilinear_parts(ys, xs, h, w)
    g = grad.transpose(0, 2, 3, 1)[:, :, :, None, :]  # (K, oh, ow, 1, C)
    g = np.broadcast_to(g, (k, oh, ow, ratio * ratio, c)).reshape(-1, c)
    g = g / float(ratio * ratio)
    bf = b.ravel()
    dfmap = np.empty((c, n, h, w), dtype=np.float64)
    idx = [
        (bf * h + yl.ravel()) * w + xl.ravel(),
        (bf * h + yl.ravel()) * w + xh.ravel(),
        (bf * h + yh.ravel()) * w + xl.ravel(),
        (bf * h + yh.ravel()) * w + xh.ravel(),
    ]
    flat_idx = np.concatenate(idx)
    wts = np.concatenate([wt.ravel() for wt in ws])
    for ch in range(c):
        vals = np.concatenate([g[:, ch]] * 4) * wts
        out = np.bincount(flat_idx, weights=vals, minlength=n * h * w)
        dfmap[ch] = out.reshape(n, h, w)
    return np.ascontiguousarray(dfmap.transpose(1, 0, 2, 3))


def ncc_match(
    image: np.ndarray, template: np.ndarray, x0: int, y0: int, x1: int, y1: int
) -> np.ndarray:
    """Zero-mean NCC of a template against every placement whose top-left
    corner lies in [x0..x1] x [y0..y1] (inclusive). Returns the score map
    with shape (y1-y0+1, x1-x0+1), values in [-1, 1]."""
    th, tw = template.shape
    win = np.lib.stride_tricks.sliding_window_view(image, (th, tw))
    win = win[y0 : y1 + 1, x0 : x1 + 1]
    area = float(th * tw)
    t0 = template - template.mean()
    t_ss = float((t0 * t0).sum())
    w_sum = win.sum(axis=(2, 3))
    w_ss = np.einsum("yxij,yxij->yx", win, win)
    var = w_ss - w_sum * w_sum / area
    numer = np.einsum("yxij,ij->yx", win, t0)
    denom = np.sqrt(np.maximum(var * t_ss, 0.0))
    out = np.where(denom > 1e-12, numer / np.maximum(denom, 1e-12), 0.0)
    return np.clip(out, -1.0, 1.0)
