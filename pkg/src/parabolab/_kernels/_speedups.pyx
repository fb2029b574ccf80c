# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython versions of the hot kernels; semantics mirror ``pure.py`` exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

IMPL = "speedups"


def pair_oscillations(times, values, double cap, int block=256):
    """See pure.pair_oscillations; identical contract and ordering."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = np.ascontiguousarray(times, dtype=np.float64)
    v2 = np.asarray(values, dtype=np.float64)
    if v2.ndim == 1:
        v2 = v2[:, None]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v = np.ascontiguousarray(v2)
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t d = v.shape[1]
    cdef Py_ssize_t i, j, c, cnt
    cdef double dt, s, diff

    # counting pass
    cnt = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            dt = t[j] - t[i]
            if dt > cap:
                break
            if dt > 0.0:
                cnt += 1

    cdef cnp.ndarray[cnp.float64_t, ndim=1] gaps = np.empty(cnt, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dists = np.empty(cnt, dtype=np.float64)
    c = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            dt = t[j] - t[i]
            if dt > cap:
                break
            if dt <= 0.0:
                continue
            s = 0.0
            for k in range(d):
                diff = v[j, k] - v[i, k]
                s += diff * diff
            gaps[c] = dt
            dists[c] = sqrt(s)
            c += 1
    return gaps, dists


def smoothstep_jets(u, int order):
    """See pure.smoothstep_jets; identical contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef int m = order + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((m, n), dtype=np.float64)

    cdef double[::1] a = np.empty(m)
    cdef double[::1] b = np.empty(m)
    cdef double[::1] E = np.empty(m)
    cdef double[::1] F = np.empty(m)
    cdef double[::1] Q = np.empty(m)
    cdef Py_ssize_t p
    cdef int j, kk
    cdef double w, inv_w, inv_1w, pa, pb, sign, accE, accF, acc, D0

    for p in range(n):
        w = uu[p]
        if w <= 0.0:
            continue
        if w >= 1.0:
            out[0, p] = 1.0
            continue
        inv_w = 1.0 / w
        inv_1w = 1.0 / (1.0 - w)
        pa = inv_w
        pb = inv_1w
        a[0] = -pa
        b[0] = -pb
        sign = 1.0
        for j in range(1, m):
            pa = pa * inv_w
            pb = pb * inv_1w
            a[j] = sign * pa
            b[j] = -pb
            sign = -sign

        E[0] = exp(a[0])
        F[0] = exp(b[0])
        for kk in range(1, m):
            accE = 0.0
            accF = 0.0
            for j in range(1, kk + 1):
                accE = accE + j * a[j] * E[kk - j]
                accF = accF + j * b[j] * F[kk - j]
            E[kk] = accE / kk
            F[kk] = accF / kk

        D0 = E[0] + F[0]
        Q[0] = E[0] / D0
        for kk in range(1, m):
            acc = E[kk]
            for j in range(1, kk + 1):
                acc = acc - (E[j] + F[j]) * Q[kk - j]
            Q[kk] = acc / D0

        for j in range(m):
            out[j, p] = Q[j]
    return out
