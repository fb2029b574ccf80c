"""Pure NumPy implementations of the hot kernels.

These are the semantic reference for ``_speedups.pyx``; the two must agree to
floating-point noise (the suite enforces 1e-13 relative).  Keep the loop and
summation order identical when editing either side.
"""

from __future__ import annotations

import numpy as np

IMPL = "pure"


def pair_oscillations(times: np.ndarray, values: np.ndarray, cap: float,
                      block: int = 256):
    """All-pairs time gaps and value distances.

    times: shape (n,), strictly increasing.
    values: shape (n,) or (n, d).
    Returns (gaps, dists) over every pair i < j with 0 < gap <= cap, ordered
    by (i, j) ascending.  Distances are Euclidean across the d components.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = t.shape[0]
    gaps_out = []
    dists_out = []
    for i0 in range(0, n - 1, block):
        i1 = min(i0 + block, n - 1)
        for i in range(i0, i1):
            dt = t[i + 1:] - t[i]
            keep = (dt > 0.0) & (dt <= cap)
            if not np.any(keep):
                continue
            dv = v[i + 1:][keep] - v[i]
            gaps_out.append(dt[keep])
            dists_out.append(np.sqrt(np.einsum("ij,ij->i", dv, dv)))
    if not gaps_out:
        return np.empty(0), np.empty(0)
    return np.concatenate(gaps_out), np.concatenate(dists_out)


def smoothstep_jets(u: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients (not derivatives) of the standard smooth step.

    The step is S(u) = E/(E + F) with E = exp(-1/u) for u > 0 (else 0) and
    F = exp(-1/(1-u)) for u < 1 (else 0), so S == 0 for u <= 0 and S == 1 for
    u >= 1.  Returns an array of shape (order+1, len(u)) whose row j holds the
    j-th Taylor coefficient of S at each point; derivative j is j! times it.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    m = order + 1
    out = np.zeros((m, n))

    lo = u <= 0.0
    hi = u >= 1.0
    out[0, hi] = 1.0
    mid = ~(lo | hi)
    if not np.any(mid):
        return out

    w = u[mid]
    k = w.shape[0]

    # jets of -1/w and -1/(1-w)
    a = np.empty((m, k))
    b = np.empty((m, k))
    inv_w = 1.0 / w
    inv_1w = 1.0 / (1.0 - w)
    pa = inv_w.copy()
    pb = inv_1w.copy()
    a[0] = -pa
    b[0] = -pb
    sign = 1.0
    for j in range(1, m):
        pa = pa * inv_w
        pb = pb * inv_1w
        a[j] = sign * pa
        b[j] = -pb
        sign = -sign

    # exp jets: E_k = (1/k) sum_{j=1..k} j * a_j * E_{k-j}
    E = np.zeros((m, k))
    F = np.zeros((m, k))
    E[0] = np.exp(a[0])
    F[0] = np.exp(b[0])
    for kk in range(1, m):
        accE = np.zeros(k)
        accF = np.zeros(k)
        for j in range(1, kk + 1):
            accE = accE + j * a[j] * E[kk - j]
            accF = accF + j * b[j] * F[kk - j]
        E[kk] = accE / kk
        F[kk] = accF / kk

    # division jet Q = E / (E + F)
    D0 = E[0] + F[0]
    Q = np.zeros((m, k))
    Q[0] = E[0] / D0
    for kk in range(1, m):
        acc = E[kk].copy()
        for j in range(1, kk + 1):
            acc = acc - (E[j] + F[j]) * Q[kk - j]
        Q[kk] = acc / D0

    out[:, mid] = Q
    return out
