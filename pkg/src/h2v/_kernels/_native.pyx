# Compiled versions of the hot kernels. Same sampling conventions as
# reference.py; keep the two in lockstep when changing either.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def im2col(double[:, :, :, ::1] x, int kh, int kw, int sh, int sw):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h - kh) // sh + 1
    cdef Py_ssize_t ow = (w - kw) // sw + 1
    out_arr = np.empty((n, c * kh * kw, oh * ow), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, ki, kj, oy, ox, row
    for i in range(n):
        for j in range(c):
            for ki in range(kh):
                for kj in range(kw):
                    row = (j * kh + ki) * kw + kj
                    for oy in range(oh):
                        for ox in range(ow):
                            out[i, row, oy * ow + ox] = x[i, j, oy * sh + ki, ox * sw + kj]
    return out_arr


def col2im(double[:, :, ::1] cols, int c, int h, int w, int kh, int kw, int sh, int sw):
    cdef Py_ssize_t n = cols.shape[0]
    cdef Py_ssize_t oh = (h - kh) // sh + 1
    cdef Py_ssize_t ow = (w - kw) // sw + 1
    out_arr = np.zeros((n, c, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, ki, kj, oy, ox, row
    for i in range(n):
        for j in range(c):
            for ki in range(kh):
                for kj in range(kw):
                    row = (j * kh + ki) * kw + kj
                    for oy in range(oh):
                        for ox in range(ow):
                            out[i, j, oy * sh + ki, ox * sw + kj] += cols[i, row, oy * ow + ox]
    return out_arr


cdef inline void _bilinear(double y, double x, Py_ssize_t h, Py_ssize_t w,
                           Py_ssize_t* yl, Py_ssize_t* xl, Py_ssize_t* yh, Py_ssize_t* xh,
                           double* w00, double* w01, double* w10, double* w11) nogil:
    # cutoff matches reference._bilinear_parts exactly (strict comparisons)
    cdef double ly, lx
    if y <= -1.0 or y >= <double>h or x <= -1.0 or x >= <double>w:
        yl[0] = 0; xl[0] = 0; yh[0] = 0; xh[0] = 0
        w00[0] = 0.0; w01[0] = 0.0; w10[0] = 0.0; w11[0] = 0.0
        return
    if y < 0.0:
        y = 0.0
    if x < 0.0:
        x = 0.0
    yl[0] = <Py_ssize_t>y
    xl[0] = <Py_ssize_t>x
    if yl[0] > h - 1:
        yl[0] = h - 1
    if xl[0] > w - 1:
        xl[0] = w - 1
    yh[0] = yl[0] + 1 if yl[0] + 1 < h else h - 1
    xh[0] = xl[0] + 1 if xl[0] + 1 < w else w - 1
    ly = y - <double>yl[0]
    lx = x - <double>xl[0]
    if yl[0] >= h - 1 and y >= <double>(h - 1):
        ly = 0.0
    if xl[0] >= w - 1 and x >= <double>(w - 1):
        lx = 0.0
    if ly > 1.0:
        ly = 1.0
    if lx > 1.0:
        lx = 1.0
    w00[0] = (1.0 - ly) * (1.0 - lx)
    w01[0] = (1.0 - ly) * lx
    w10[0] = ly * (1.0 - lx)
    w11[0] = ly * lx


def roi_align_forward(double[:, :, :, ::1] fmap, double[:, ::1] rois,
                      int oh, int ow, int ratio):
    cdef Py_ssize_t n = fmap.shape[0], c = fmap.shape[1], h = fmap.shape[2], w = fmap.shape[3]
    cdef Py_ssize_t k = rois.shape[0]
    out_arr = np.zeros((k, c, oh, ow), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, b, ch, ph, pw, iy, ix
    cdef double x0, y0, roi_w, roi_h, bin_h, bin_w, y, x, acc, cnt
    cdef Py_ssize_t yl, xl, yh, xh
    cdef double w00, w01, w10, w11
    cnt = <double>(ratio * ratio)
    for i in range(k):
        b = <Py_ssize_t>rois[i, 0]
        x0 = rois[i, 1]
        y0 = rois[i, 2]
        roi_w = rois[i, 3] - x0
        roi_h = rois[i, 4] - y0
        if roi_w < 1.0:
            roi_w = 1.0
        if roi_h < 1.0:
            roi_h = 1.0
        bin_h = roi_h / oh
        bin_w = roi_w / ow
        for ph in range(oh):
            for pw in range(ow):
                for ch in range(c):
                    acc = 0.0
                    for iy in range(ratio):
                        y = y0 + (ph + (iy + 0.5) / ratio) * bin_h
                        for ix in range(ratio):
                            x = x0 + (pw + (ix + 0.5) / ratio) * bin_w
                            _bilinear(y, x, h, w, &yl, &xl, &yh, &xh,
                                      &w00, &w01, &w10, &w11)
                            acc += (w00 * fmap[b, ch, yl, xl] + w01 * fmap[b, ch, yl, xh]
                                    + w10 * fmap[b, ch, yh, xl] + w11 * fmap[b, ch, yh, xh])
                    out[i, ch, ph, pw] = acc / cnt
    return out_arr


def roi_align_backward(double[:, :, :, ::1] grad, double[:, ::1] rois,
                       int n, int c, int h, int w, int ratio):
    cdef Py_ssize_t k = grad.shape[0]
    cdef Py_ssize_t oh = grad.shape[2], ow = grad.shape[3]
    out_arr = np.zeros((n, c, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, b, ch, ph, pw, iy, ix
    cdef double x0, y0, roi_w, roi_h, bin_h, bin_w, y, x, g, cnt
    cdef Py_ssize_t yl, xl, yh, xh
    cdef double w00, w01, w10, w11
    cnt = <double>(ratio * ratio)
    for i in range(k):
        b = <Py_ssize_t>rois[i, 0]
        x0 = rois[i, 1]
        y0 = rois[i, 2]
        roi_w = rois[i, 3] - x0
        roi_h = rois[i, 4] - y0
        if roi_w < 1.0:
            roi_w = 1.0
        if roi_h < 1.0:
            roi_h = 1.0
        bin_h = roi_h / oh
        bin_w = roi_w / ow
        for ph in range(oh):
            for pw in range(ow):
                for ch in range(c):
                    g = grad[i, ch, ph, pw] / cnt
                    for iy in range(ratio):
                        y = y0 + (ph + (iy + 0.5) / ratio) * bin_h
                        for ix in range(ratio):
                            x = x0 + (pw + (ix + 0.5) / ratio) * bin_w
                            _bilinear(y, x, h, w, &yl, &xl, &yh, &xh,
                                      &w00, &w01, &w10, &w11)
                            out[b, ch, yl, xl] += g * w00
                            out[b, ch, yl, xh] += g * w01
                            out[b, ch, yh, xl] += g * w10
                            out[b, ch, yh, xh] += g * w11
    return out_arr


def ncc_match(double[:, ::1] image, double[:, ::1] template,
              int x0, int y0, int x1, int y1):
    cdef Py_ssize_t th = template.shape[0], tw = template.shape[1]
    cdef Py_ssize_t ny = y1 - y0 + 1, nx = x1 - x0 + 1
    cdef double area = <double>(th * tw)
    cdef double tmean = 0.0, t_ss = 0.0
    cdef Py_ssize_t i, j, py, px
    for i in range(th):
        for j in range(tw):
            tmean += template[i, j]
    tmean /= area
    t0_arr = np.empty((th, tw), dtype=np.float64)
    cdef double[:, ::1] t0 = t0_arr
    for i in range(th):
        for j in range(tw):
            t0[i, j] = template[i, j] - tmean
            t_ss += t0[i, j] * t0[i, j]
    out_arr = np.zeros((ny, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double w_sum, w_ss, numer, var, denom, v, score
    for py in range(ny):
        for px in range(nx):
            w_sum = 0.0
            w_ss = 0.0
            numer = 0.0
            for i in range(th):
                for j in range(tw):
                    v = image[y0 + py + i, x0 + px + j]
                    w_sum += v
                    w_ss += v * v
                    numer += v * t0[i, j]
            var = w_ss - w_sum * w_sum / area
            denom = var * t_ss
            if denom < 0.0:
                denom = 0.0
            denom = denom ** 0.5
            if denom > 1e-12:
                score = numer / denom
            else:
                score = 0.0
            if score > 1.0:
                score = 1.0
            elif score < -1.0:
                score = -1.0
            out[py, px] = score
    return out_arr
