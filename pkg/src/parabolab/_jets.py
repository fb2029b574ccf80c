"""Truncated Taylor-series (jet) arithmetic for the smooth cutoff functions.

A jet is an ndarray of shape (order+1, n): row j holds the j-th Taylor
coefficient at each of n points.  Derivatives are recovered as j! times the
coefficients.  The only transcendental building block is the smooth step,
whose jets come from the kernel layer; everything else is affine maps and
products, which are exact on coefficients.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels


def step_jet(s: np.ndarray, order: int, scale: float = 1.0, shift: float = 0.0) -> np.ndarray:
    """Jet of S(shift + scale*s) with respect to s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    inner = shift + scale * s
    jet = _kernels.smoothstep_jets(inner, order)
    if scale != 1.0:
        factors = scale ** np.arange(order + 1)
        jet = jet * factors[:, None]
    return jet


def const_jet(value: float, order: int, n: int) -> np.ndarray:
    jet = np.zeros((order + 1, n))
    jet[0] = value
    return jet


def mul_jet(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product of two jets of equal shape."""
    m = a.shape[0]
    out = np.zeros_like(a)
    for j in range(m):
        acc = a[0] * b[j]
        for i in range(1, j + 1):
            acc = acc + a[i] * b[j - i]
        out[j] = acc
    return out


def derivatives(jet: np.ndarray) -> np.ndarray:
    """Convert Taylor coefficients to derivative values (row j times j!)."""
    facts = np.array([math.factorial(j) for j in range(jet.shape[0])], dtype=float)
    return jet * facts[:, None]
