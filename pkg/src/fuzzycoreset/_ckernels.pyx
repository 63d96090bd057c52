# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport pow

ctypedef double f8


cdef inline f8 _sq(const f8[:, ::1] X, Py_ssize_t i, const f8[:, ::1] C, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t d
    cdef f8 acc = 0.0, t
    for d in range(X.shape[1]):
        t = X[i, d] - C[k, d]
        acc = acc + t * t
    return acc


cdef inline f8 _powr(f8 x, f8 e) noexcept nogil:
    # pow(x, 1) and pow(x, -1) are exact and correctly rounded, so the shortcuts
    # for the common fuzzifier m = 2 give the same bits as pow
    if e == 1.0:
        return x
    if e == -1.0:
        return 1.0 / x
    return pow(x, e)


cdef inline f8 _row_cost(const f8* row, Py_ssize_t kk, f8 e, f8 m) noexcept nogil:
    cdef Py_ssize_t k
    cdef f8 dmin = row[0], s = 0.0
    for k in range(1, kk):
        if row[k] < dmin:
            dmin = row[k]
    if dmin == 0.0:
        return 0.0
    for k in range(kk):
        s = s + _powr(dmin / row[k], e)
    return dmin * _powr(s, 1.0 - m)


cdef inline void _row_memberships(const f8* row, f8* out, Py_ssize_t kk, f8 e) noexcept nogil:
    cdef Py_ssize_t k
    cdef f8 dmin = row[0], s = 0.0
    for k in range(1, kk):
        if row[k] < dmin:
            dmin = row[k]
    if dmin == 0.0:
        for k in range(kk):
            out[k] = 1.0 if row[k] == 0.0 else 0.0
            s = s + out[k]
    else:
        for k in range(kk):
            out[k] = _powr(dmin / row[k], e)
            s = s + out[k]
    for k in range(kk):
        out[k] = out[k] / s


def sq_dists(X, C, int num_threads=1):
    cdef const f8[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const f8[:, ::1] cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], kk = cv.shape[0], i, k
    out = np.empty((n, kk), dtype=np.float64)
    cdef f8[:, ::1] ov = out
    for i in prange(n, nogil=True, num_threads=num_threads, schedule="static"):
        for k in range(kk):
            ov[i, k] = _sq(xv, i, cv, k)
    return out


def nearest(X, C, int num_threads=1):
    cdef const f8[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const f8[:, ::1] cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], kk = cv.shape[0], i, k, best
    cdef f8 bd, t
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    cdef long long[::1] lv = labels
    cdef f8[::1] dv = d2
    for i in prange(n, nogil=True, num_threads=num_threads, schedule="static"):
        best = 0
        bd = _sq(xv, i, cv, 0)
        for k in range(1, kk):
            t = _sq(xv, i, cv, k)
            if t < bd:
                bd = t
                best = k
        lv[i] = best
        dv[i] = bd
    return labels, d2


def memberships_d2(D2, double m, int num_threads=1):
    cdef const f8[:, ::1] dv = np.ascontiguousarray(D2, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], kk = dv.shape[1], i
    cdef f8 e = 1.0 / (m - 1.0)
    out = np.empty((n, kk), dtype=np.float64)
    cdef f8[:, ::1] ov = out
    if kk == 0:
        return out
    for i in prange(n, nogil=True, num_threads=num_threads, schedule="static"):
        _row_memberships(&dv[i, 0], &ov[i, 0], kk, e)
    return out


def point_costs_d2(D2, double m, int num_threads=1):
    cdef const f8[:, ::1] dv = np.ascontiguousarray(D2, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], kk = dv.shape[1], i
    cdef f8 e = 1.0 / (m - 1.0)
    out = np.empty(n, dtype=np.float64)
    cdef f8[::1] ov = out
    for i in prange(n, nogil=True, num_threads=num_threads, schedule="static"):
        ov[i] = _row_cost(&dv[i, 0], kk, e, m)
    return out


def memberships(X, C, double m, int num_threads=1):
    return memberships_d2(sq_dists(X, C, num_threads), m, num_threads)


def point_costs(X, C, double m, int num_threads=1):
    """Fused distance + optimal-membership cost; two passes per point, no (N, K) buffer."""
    cdef const f8[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const f8[:, ::1] cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], kk = cv.shape[0], i, k
    cdef f8 e = 1.0 / (m - 1.0), dmin, s, t
    out = np.empty(n, dtype=np.float64)
    cdef f8[::1] ov = out
    for i in prange(n, nogil=True, num_threads=num_threads, schedule="static"):
        dmin = _sq(xv, i, cv, 0)
        for k in range(1, kk):
            t = _sq(xv, i, cv, k)
            if t < dmin:
                dmin = t
        if dmin == 0.0:
            ov[i] = 0.0
        else:
            s = 0.0
            for k in range(kk):
                s = s + _powr(dmin / _sq(xv, i, cv, k), e)
            ov[i] = dmin * _powr(s, 1.0 - m)
    return out


def subset_costs(D2, w, subsets, double m, int num_threads=1):
    cdef const f8[:, ::1] dv = np.ascontiguousarray(D2, dtype=np.float64)
    cdef const f8[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const long long[:, ::1] sv = np.ascontiguousarray(subsets, dtype=np.int64)
    cdef Py_ssize_t ns = sv.shape[0], kk = sv.shape[1], n = dv.shape[0], s, i, k
    cdef f8 e = 1.0 / (m - 1.0), acc
    out = np.empty(ns, dtype=np.float64)
    cdef f8[::1] ov = out
    cdef f8[:, ::1] row = np.empty((ns, kk), dtype=np.float64)
    for s in prange(ns, nogil=True, num_threads=num_threads, schedule="static"):
        acc = 0.0
        for i in range(n):
            for k in range(kk):
                row[s, k] = dv[i, sv[s, k]]
            acc = acc + wv[i] * _row_cost(&row[s, 0], kk, e, m)
        ov[s] = acc
    return out
