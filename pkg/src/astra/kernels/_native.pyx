# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: direct loops for the latency-critical paths.

Contracts match ``numpy_backend`` exactly. Large sliding-window searches
are delegated to the FFT path there, where direct loops lose
asymptotically; ``benchmarks/bench_kernels.py`` shows the crossover.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

from astra.kernels import numpy_backend as _nb

VAR_EPS = _nb.VAR_EPS
SSIM_WIN = _nb.SSIM_WIN

DEF _VAR_EPS = 1e-6
DEF _WIN = 11
DEF _RADIUS = 5

# positions * template_area above which the FFT path wins decisively
DEF _LOOP_WORK_LIMIT = 20_000_000

gray = _nb.gray
gaussian_window = _nb.gaussian_window


def ncc_at(image, template, int x, int y):
    cdef double[:, ::1] img = np.ascontiguousarray(image, dtype=np.float64)
    cdef double[:, ::1] tpl = np.ascontiguousarray(template, dtype=np.float64)
    cdef Py_ssize_t th = tpl.shape[0], tw = tpl.shape[1]
    if y < 0 or x < 0 or y + th > img.shape[0] or x + tw > img.shape[1]:
        raise ValueError("template does not fit inside image at offset")
    cdef double rsum = 0, rsq = 0, tsum = 0, tsq = 0, dot = 0
    cdef double rv, tv
    cdef Py_ssize_t i, j
    for j in range(th):
        for i in range(tw):
            rv = img[y + j, x + i]
            tv = tpl[j, i]
            rsum += rv
            rsq += rv * rv
            tsum += tv
            tsq += tv * tv
            dot += rv * tv
    cdef double n = <double>(th * tw)
    cdef double rssd = rsq - rsum * rsum / n
    cdef double tssd = tsq - tsum * tsum / n
    if rssd <= _VAR_EPS * n or tssd <= _VAR_EPS * n:
        return 0.0
    cdef double score = (dot - rsum * tsum / n) / sqrt(rssd * tssd)
    if score > 1.0:
        score = 1.0
    elif score < -1.0:
        score = -1.0
    return score


def ncc_map(image, template):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] img = np.ascontiguousarray(image, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tpl = np.ascontiguousarray(template, dtype=np.float64)
    cdef Py_ssize_t ih = img.shape[0], iw = img.shape[1]
    cdef Py_ssize_t th = tpl.shape[0], tw = tpl.shape[1]
    if th > ih or tw > iw:
        raise ValueError("template larger than image")
    cdef Py_ssize_t oh = ih - th + 1, ow = iw - tw + 1
    if oh * ow * th * tw > _LOOP_WORK_LIMIT:
        return _nb.ncc_map(img, tpl)

    cdef double n = <double>(th * tw)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] t0 = tpl - tpl.mean()
    cdef double tssd = float((t0 * t0).sum())
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((oh, ow))
    if tssd <= _VAR_EPS * n:
        return out

    cdef double[:, ::1] imv = img
    cdef double[:, ::1] tv = t0
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t x, y, i, j
    cdef double rsum, rsq, dot, rv, rssd, score
    for y in range(oh):
        for x in range(ow):
            rsum = 0
            rsq = 0
            dot = 0
            for j in range(th):
                for i in range(tw):
                    rv = imv[y + j, x + i]
                    rsum += rv
                    rsq += rv * rv
                    dot += rv * tv[j, i]
            rssd = rsq - rsum * rsum / n
            if rssd <= _VAR_EPS * n:
                continue
            score = dot / sqrt(rssd * tssd)
            if score > 1.0:
                score = 1.0
            elif score < -1.0:
                score = -1.0
            ov[y, x] = score
    return out


def ncc_map_many(image, templates):
    total = 0
    ih = image.shape[0]
    iw = image.shape[1]
    for t in templates:
        total += (ih - t.shape[0] + 1) * (iw - t.shape[1] + 1) * t.shape[0] * t.shape[1]
    if total > _LOOP_WORK_LIMIT:
        return _nb.ncc_map_many(image, templates)
    return [ncc_map(image, t) for t in templates]


cdef void _sep_filter(double[:, ::1] src, double[::1] w, double[:, ::1] tmp,
                      double[:, ::1] dst) noexcept nogil:
    # Horizontal then vertical pass with edge replication; only values at
    # distance >= _RADIUS from the border are consumed by ssim_mean.
    cdef Py_ssize_t h = src.shape[0], wd = src.shape[1]
    cdef Py_ssize_t y, x, k, idx
    cdef double acc
    for y in range(h):
        for x in range(wd):
            acc = 0
            for k in range(-_RADIUS, _RADIUS + 1):
                idx = x + k
                if idx < 0:
                    idx = 0
                elif idx >= wd:
                    idx = wd - 1
                acc += src[y, idx] * w[k + _RADIUS]
            tmp[y, x] = acc
    for y in range(h):
        for x in range(wd):
            acc = 0
            for k in range(-_RADIUS, _RADIUS + 1):
                idx = y + k
                if idx < 0:
                    idx = 0
                elif idx >= h:
                    idx = h - 1
                acc += tmp[idx, x] * w[k + _RADIUS]
            dst[y, x] = acc


def ssim_mean(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(b, dtype=np.float64)
    if aa.shape[0] != bb.shape[0] or aa.shape[1] != bb.shape[1]:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    cdef Py_ssize_t h = aa.shape[0], wd = aa.shape[1]
    if h < _WIN or wd < _WIN:
        raise ValueError(f"frames smaller than the {_WIN}x{_WIN} window")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] wk = _nb.gaussian_window()
    cdef double[::1] w = wk
    cdef double c1 = _nb.SSIM_C1, c2 = _nb.SSIM_C2

    fields = [aa, bb, aa * aa, bb * bb, aa * bb]
    filtered = [np.empty_like(aa) for _ in range(5)]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tmp = np.empty_like(aa)
    cdef Py_ssize_t f
    for f in range(5):
        _sep_filter(fields[f], w, tmp, filtered[f])

    cdef double[:, ::1] ux = filtered[0]
    cdef double[:, ::1] uy = filtered[1]
    cdef double[:, ::1] uxx = filtered[2]
    cdef double[:, ::1] uyy = filtered[3]
    cdef double[:, ::1] uxy = filtered[4]
    cdef double acc = 0
    cdef double mx, my, vx, vy, vxy
    cdef Py_ssize_t y, x
    for y in range(_RADIUS, h - _RADIUS):
        for x in range(_RADIUS, wd - _RADIUS):
            mx = ux[y, x]
            my = uy[y, x]
            vx = uxx[y, x] - mx * mx
            vy = uyy[y, x] - my * my
            vxy = uxy[y, x] - mx * my
            acc += ((2 * mx * my + c1) * (2 * vxy + c2)) / (
                (mx * mx + my * my + c1) * (vx + vy + c2))
    return acc / ((h - 2 * _RADIUS) * (wd - 2 * _RADIUS))


def fnv1a64(data):
    cdef const unsigned char[::1] buf = data
    cdef unsigned long long h = 0xCBF29CE484222325ULL
    cdef unsigned long long prime = 0x100000001B3ULL
    cdef Py_ssize_t i
    with nogil:
        for i in range(buf.shape[0]):
            h = (h ^ buf[i]) * prime
    return h
