"""Network-level operations built on the kernel backend.

All ops take and return Tensors and register exact adjoints, so the whole
scoring pipeline (convolutions, region pooling, resizing) is differentiable
end to end.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..errors import InternalFault
from .tensor import Tensor, concat


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x (N, In) @ weight (Out, In)^T + bias (Out,)."""
    out = x @ weight.transpose()
    if bias is not None:
        out = out + bias
    return out


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D convolution via patch-matrix multiply.

    x (N, Cin, H, W), weight (Cout, Cin, kh, kw) -> (N, Cout, OH, OW).
    """
    n, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if cin != cin_w:
        raise InternalFault(f"conv2d channel mismatch: input {cin}, weight {cin_w}")
    hp, wp = h + 2 * padding, w + 2 * padding
    if hp < kh or wp < kw:
        raise InternalFault("conv2d input smaller than kernel after padding")

    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = K.im2col(xp, kh, kw, stride, stride)  # (N, Cin*kh*kw, L)
    wmat = weight.data.reshape(cout, cin * kh * kw)
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    out_data = np.matmul(wmat, cols)             # (N, Cout, L) via BLAS
    out_data = out_data.reshape(n, cout, oh, ow)
    if bias is not None:
        out_data = out_data + bias.data[None, :, None, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def bw(out):
        def run():
            g = out.grad.reshape(n, cout, oh * ow)
            if bias is not None and bias.requires_grad:
                bias._accumulate(g.sum(axis=(0, 2)))
            if weight.requires_grad:
                gw = np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0)
                weight._accumulate(gw.reshape(weight.data.shape))
            if x.requires_grad:
                gcols = np.matmul(wmat.T, g)     # (N, Cin*kh*kw, L)
                gx = K.col2im(np.ascontiguousarray(gcols), cin, hp, wp, kh, kw,
                              stride, stride)
                if padding:
                    gx = gx[:, :, padding:hp - padding, padding:wp - padding]
                x._accumulate(np.ascontiguousarray(gx))
        return run

    return Tensor._make(out_data, parents, "conv2d", bw)


def global_avg_pool(x: Tensor) -> Tensor:
    """(N, C, H, W) -> (N, C), averaging each channel plane."""
    n, c, h, w = x.shape
    scale = 1.0 / (h * w)

    def bw(out):
        def run():
            if x.requires_grad:
                g = np.broadcast_to(
                    out.grad[:, :, None, None] * scale, x.data.shape
                ).copy()
                x._accumulate(g)
        return run

    return Tensor._make(x.data.mean(axis=(2, 3)), (x,), "global_avg_pool", bw)


def roi_align(x: Tensor, rois: np.ndarray, out_size: int = 14,
              sampling_ratio: int = 2) -> Tensor:
    """Pool fixed-size region features from a feature map.

    x (N, C, H, W); rois (K, 5) rows [batch, x0, y0, x1, y1] in feature-map
    coordinates. Returns (K, C, out_size, out_size).
    """
    rois = np.ascontiguousarray(rois, dtype=np.float64)
    if rois.ndim != 2 or rois.shape[1] != 5:
        raise InternalFault("rois must have shape (K, 5)")
    n, c, h, w = x.shape
    out_data = K.roi_align_forward(x.data, rois, out_size, out_size, sampling_ratio)

    def bw(out):
        def run():
            if x.requires_grad:
                x._accumulate(
                    K.roi_align_backward(out.grad, rois, n, c, h, w, sampling_ratio)
                )
        return run

    return Tensor._make(out_data, (x,), "roi_align", bw)


_RESIZE_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _resize_matrix(src: int, dst: int) -> np.ndarray:
    """Dense (dst, src) bilinear interpolation matrix, half-pixel aligned."""
    key = (src, dst)
    m = _RESIZE_CACHE.get(key)
    if m is None:
        m = np.zeros((dst, src))
        scale = src / dst
        for i in range(dst):
            p = (i + 0.5) * scale - 0.5
            p = min(max(p, 0.0), src - 1.0)
            lo = int(np.floor(p))
            hi = min(lo + 1, src - 1)
            f = p - lo
            m[i, lo] += 1.0 - f
            m[i, hi] += f
        _RESIZE_CACHE[key] = m
    return m


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Differentiable bilinear resize of (N, C, H, W) maps."""
    n, c, h, w = x.shape
    wy = _resize_matrix(h, out_h)  # (OH, H)
    wx = _resize_matrix(w, out_w)  # (OW, W)
    out_data = np.einsum("oh,nchw,pw->ncop", wy, x.data, wx, optimize=True)

    def bw(out):
        def run():
            if x.requires_grad:
                gx = np.einsum("oh,ncop,pw->nchw", wy, out.grad, wx, optimize=True)
                x._accumulate(np.ascontiguousarray(gx))
        return run

    return Tensor._make(np.ascontiguousarray(out_data), (x,), "bilinear_resize", bw)


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean squared error against a constant target."""
    target = np.asarray(target, dtype=np.float64)
    diff = pred - Tensor(target.reshape(pred.shape))
    return diff.square().mean()


def pairwise_hinge(scores: Tensor, incidence: np.ndarray, margin: float) -> Tensor:
    """Margin ranking loss from a signed pair incidence matrix.

    incidence (P, K) has one row per ordered pair with -1 at the
    should-win index and +1 at the should-lose index, so a row dotted
    with the scores gives (loser - winner). Loss is
    mean(relu(incidence @ s + margin)).
    """
    inc = np.asarray(incidence, dtype=np.float64)
    if inc.ndim != 2 or inc.shape[1] != scores.size:
        raise InternalFault("pair incidence shape mismatch")
    if inc.shape[0] == 0:
        return Tensor(np.zeros(()))
    s = scores.reshape(scores.size, 1)
    gaps = Tensor(inc) @ s  # (P, 1)
    return (gaps + margin).relu().mean()
