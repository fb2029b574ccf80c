"""Quadrature helpers.

Adaptive integration of scalar integrands is delegated to scipy's QUADPACK
(adaptive Gauss-Kronrod with the tolerances fixed here); the composite
Gauss-Legendre panels used by the table builders and the energy-identity
checks are implemented directly because they need vectorized integrands and
shared nodes across several integrals.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError

# package-wide adaptive quadrature targets
REL_TOL = 1e-10
ABS_TOL = 1e-14


@lru_cache(maxsize=64)
def gauss_rule(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1], cached per order."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_nodes(a: float, b: float, n: int):
    """Nodes and weights of the order-n Gauss rule mapped to [a, b]."""
    x, w = gauss_rule(n)
    h = 0.5 * (b - a)
    return 0.5 * (a + b) + h * x, h * w


def adaptive_quad(f, a: float, b: float, points=None,
                  rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL) -> float:
    """Adaptive quadrature of a scalar integrand with optional interior
    breakpoints (kinks of piecewise integrands)."""
    if a == b:
        return 0.0
    kwargs = dict(epsabs=abs_tol, epsrel=rel_tol, limit=200)
    if points is not None:
        pts = [p for p in points if min(a, b) < p < max(a, b)]
        if pts:
            kwargs["points"] = sorted(pts)
    with warnings.catch_warnings():
        # roundoff chatter just means QUADPACK hit machine accuracy; genuine
        # failures surface as non-finite estimates below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(f, a, b, **kwargs)
    if not np.isfinite(value):
        raise QuadratureError(f"integral over [{a}, {b}] did not converge")
    return value


def composite_gauss_refine(integrands, pieces, start: int = 64,
                           rel_tol: float = 1e-8, max_nodes: int = 16384):
    """Evaluate several integrals over shared panels, doubling the node count
    until every integral is stable between refinements.

    integrands: callable(t: ndarray) -> ndarray of shape (k, len(t)); the k
    rows are integrated simultaneously so all integrals share node evaluations.
    pieces: increasing breakpoints [t0, t1, ..., tm] delimiting smooth panels.

    Returns the ndarray of k integral values at the finest level.
    """
    pieces = [float(p) for p in pieces]
    if any(b < a for a, b in zip(pieces, pieces[1:])):
        raise ValueError("piece boundaries must be nondecreasing")

    def level(n_per_piece: int) -> np.ndarray:
        total = None
        for a, b in zip(pieces, pieces[1:]):
            if b == a:
                continue
            t, w = gauss_nodes(a, b, n_per_piece)
            vals = np.asarray(integrands(t))
            contrib = vals @ w
            total = contrib if total is None else total + contrib
        if total is None:
            k = np.asarray(integrands(np.array([pieces[0]]))).shape[0]
            return np.zeros(k)
        return total

    n = start
    prev = level(n)
    while n < max_nodes:
        n *= 2
        cur = level(n)
        scale = np.maximum(1.0, np.abs(cur))
        if np.all(np.abs(cur - prev) <= rel_tol * scale):
            return cur
        prev = cur
    raise QuadratureError(
        f"composite Gauss did not stabilize to {rel_tol} within {max_nodes} nodes per piece")
