# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``misr._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


cdef inline Py_ssize_t _clip(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


def ete_upscale(const double[:, ::1] e, const double[:, :, :, ::1] filters,
                const cnp.int64_t[:, :, ::1] origins):
    cdef Py_ssize_t s = filters.shape[0]
    cdef Py_ssize_t t = filters.shape[2]
    cdef Py_ssize_t h = e.shape[0]
    cdef Py_ssize_t w = e.shape[1]
    # replicate-pad once so the tap loops run over contiguous rows
    cdef Py_ssize_t top = max(0, -int(np.min(origins[:, :, 0])))
    cdef Py_ssize_t left = max(0, -int(np.min(origins[:, :, 1])))
    cdef Py_ssize_t bottom = max(0, int(np.max(origins[:, :, 0])) + t - 1)
    cdef Py_ssize_t right = max(0, int(np.max(origins[:, :, 1])) + t - 1)
    ep_arr = np.pad(np.asarray(e), ((top, bottom), (left, right)), mode="edge")
    cdef const double[:, ::1] ep = ep_arr
    out_arr = np.empty((h * s, w * s), dtype=np.float64)
    acc_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] acc = acc_arr
    cdef Py_ssize_t sr, sc, P, Q, i, j, oy, ox
    cdef double v
    cdef const double* src
    cdef double* dst
    with nogil:
        for sr in range(s):
            for sc in range(s):
                oy = top + origins[sr, sc, 0]
                ox = left + origins[sr, sc, 1]
                acc[:, :] = 0.0
                for i in range(t):
                    for j in range(t):
                        v = filters[sr, sc, i, j]
                        if v == 0.0:
                            continue
                        for P in range(h):
                            src = &ep[P + oy + i, ox + j]
                            dst = &acc[P, 0]
                            for Q in range(w):
                                dst[Q] += v * src[Q]
                for P in range(h):
                    for Q in range(w):
                        out[s * P + sr, s * Q + sc] = acc[P, Q]
    return out_arr


cdef inline Py_ssize_t _iabs(Py_ssize_t v) noexcept nogil:
    return -v if v < 0 else v


cdef inline int _sign(double v) noexcept nogil:
    # integer form compiles branch-free; image-difference signs are unpredictable
    return (v > 0) - (v < 0)


def btv_value(const double[:, ::1] x, int p, double alpha):
    cdef Py_ssize_t H = x.shape[0]
    cdef Py_ssize_t W = x.shape[1]
    cdef Py_ssize_t r, c, l, m
    cdef double wgt, total = 0.0, part
    with nogil:
        for l in range(-p, p + 1):
            for m in range(-p, p + 1):
                if l == 0 and m == 0:
                    continue
                wgt = pow(alpha, <double>(_iabs(l) + _iabs(m)))
                part = 0.0
                for r in range(H):
                    for c in range(W):
                        part = part + fabs(x[r, c] - x[_clip(r - l, H), _clip(c - m, W)])
                total = total + wgt * part
    return total


def btv_grad(const double[:, ::1] x, int p, double alpha):
    # The transposed shifts scatter into a padded buffer whose margins are
    # folded back onto the edge rows/columns once at the end (the transpose
    # of replicate padding).
    cdef Py_ssize_t H = x.shape[0]
    cdef Py_ssize_t W = x.shape[1]
    g_arr = np.zeros((H, W), dtype=np.float64)
    pad_arr = np.zeros((H + 2 * p, W + 2 * p), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef double[:, ::1] pad = pad_arr
    cdef Py_ssize_t r, c, l, m, rr
    cdef double wgt, sv
    with nogil:
        for l in range(-p, p + 1):
            for m in range(-p, p + 1):
                if l == 0 and m == 0:
                    continue
                wgt = pow(alpha, <double>(_iabs(l) + _iabs(m)))
                for r in range(H):
                    rr = _clip(r - l, H)
                    for c in range(W):
                        sv = wgt * _sign(x[r, c] - x[rr, _clip(c - m, W)])
                        g[r, c] += sv
                        pad[r - l + p, c - m + p] -= sv
        for r in range(p):
            for c in range(W + 2 * p):
                pad[p, c] += pad[r, c]
                pad[H + p - 1, c] += pad[H + p + r, c]
        for r in range(p, H + p):
            for c in range(p):
                pad[r, p] += pad[r, c]
                pad[r, W + p - 1] += pad[r, W + p + c]
        for r in range(H):
            for c in range(W):
                g[r, c] += pad[r + p, c + p]
    return g_arr
