"""Fourier-side machinery for x-independent parabolic operators.

A CoefficientPath holds the time paths rho_alpha(t) of the operator

    P = d_t + sum_{|alpha| <= 2m} i^|alpha| rho_alpha(t) d_x^alpha

The reduced symbols rho_k(t, xi) are the degree-0-homogeneous normalizations
of the order-k parts, sigma(t, xi) is the full spatial multiplier, and the
mollification scheme smooths the (possibly non-Lipschitz) time dependence
with a unit-mass bump at frequency-dependent scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ._quad import adaptive_quad
from .errors import DomainError, EllipticityViolationError, ValidationError
from .modulus import ModulusSpec, empirical_modulus, eval_modulus

_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "sqrt": np.sqrt,
    "exp": np.exp, "log": np.log, "abs": np.abs, "pi": np.pi, "e": np.e,
    "tanh": np.tanh, "minimum": np.minimum, "maximum": np.maximum,
}


class TimePath:
    """A real-valued path on [0, T]: constant, expression, or table."""

    def __init__(self, kind: str, value: float = 0.0, expr: str = "",
                 ts: Optional[Sequence[float]] = None,
                 values: Optional[Sequence[float]] = None):
        if kind not in ("const", "expr", "table"):
            raise ValidationError(f"unknown path kind {kind!r}")
        self.kind = kind
        self.value = float(value)
        self.expr = expr
        self._code = None
        if kind == "expr":
            if not expr:
                raise ValidationError("expr path needs an expression string")
            self._code = compile(expr, "<path>", "eval")
        if kind == "table":
            self.ts = np.asarray(ts, dtype=float)
            self.values = np.asarray(values, dtype=float)
            if self.ts.ndim != 1 or self.ts.shape != self.values.shape or self.ts.size < 2:
                raise ValidationError("table path needs matching ts/values, length >= 2")
            if np.any(np.diff(self.ts) <= 0):
                raise ValidationError("table path times must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "const":
            out = np.full(t.shape, self.value)
        elif self.kind == "expr":
            env = dict(_EXPR_NAMES)
            env["t"] = t
            out = np.asarray(eval(self._code, {"__builtins__": {}}, env), dtype=float)
            out = np.broadcast_to(out, t.shape).copy()
        else:
            out = np.interp(t, self.ts, self.values)
        return out if t.ndim else float(out)

    def breakpoints(self) -> list:
        return list(self.ts) if self.kind == "table" else []

    def to_dict(self) -> dict:
        if self.kind == "const":
            return {"kind": "const", "value": self.value}
        if self.kind == "expr":
            return {"kind": "expr", "expr": self.expr}
        return {"kind": "table", "ts": [float(x) for x in self.ts],
                "values": [float(x) for x in self.values]}

    @staticmethod
    def from_dict(d: dict) -> "TimePath":
        return TimePath(d["kind"], value=d.get("value", 0.0), expr=d.get("expr", ""),
                        ts=d.get("ts"), values=d.get("values"))


@dataclass
class CoefficientPath:
    """Spatial dimension n, order parameter m (operator order 2m), horizon T,
    and the coefficient paths keyed by multi-index."""

    n: int
    m: int
    T: float
    coeffs: Dict[Tuple[int, ...], TimePath]

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.T <= 0:
            raise ValidationError("need n >= 1, m >= 1, T > 0")
        clean = {}
        for alpha, path in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise ValidationError(f"multi-index {alpha} incompatible with n={self.n}")
            if sum(alpha) > 2 * self.m:
                raise ValidationError(f"multi-index {alpha} exceeds order 2m={2*self.m}")
            clean[alpha] = path
        self.coeffs = clean

    @property
    def ell(self) -> int:
        return len(self.coeffs)

    def breakpoints(self) -> list:
        pts = set()
        for p in self.coeffs.values():
            pts.update(b for b in p.breakpoints() if 0.0 < b < self.T)
        return sorted(pts)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "T": self.T,
                "coeffs": [{"alpha": list(a), "path": p.to_dict()}
                           for a, p in sorted(self.coeffs.items())]}

    @staticmethod
    def from_dict(d: dict) -> "CoefficientPath":
        coeffs = {tuple(item["alpha"]): TimePath.from_dict(item["path"])
                  for item in d["coeffs"]}
        return CoefficientPath(n=int(d["n"]), m=int(d["m"]), T=float(d["T"]),
                               coeffs=coeffs)


def heat_path(n: int = 1, m: int = 1, T: float = 1.0) -> CoefficientPath:
    """The constant-coefficient heat operator: rho = 1 on each pure 2m index."""
    coeffs = {}
    for axis in range(n):
        alpha = tuple(2 * m if i == axis else 0 for i in range(n))
        coeffs[alpha] = TimePath("const", value=1.0)
    return CoefficientPath(n=n, m=m, T=T, coeffs=coeffs)


def _check_t(path: CoefficientPath, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > path.T + 1e-12):
        raise DomainError(f"t must lie in [0, {path.T}]")
    return t


def rho_k(path: CoefficientPath, t, xi, k: int):
    """Reduced order-k symbol (-1)^k sum_{|alpha|=k} rho_alpha(t) xi^alpha / |xi|^k.

    Homogeneous of degree zero in xi; undefined at xi = 0.
    """
    if not (0 <= k <= 2 * path.m):
        raise DomainError(f"k must lie in [0, {2*path.m}]")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (path.n,):
        raise DomainError(f"xi must be a vector of length {path.n}")
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        raise DomainError("rho_k is undefined at xi = 0")
    t = _check_t(path, t)
    acc = np.zeros(t.shape)
    for alpha, p in path.coeffs.items():
        if sum(alpha) != k:
            continue
        acc = acc + p(t) * np.prod(xi ** np.array(alpha))
    out = ((-1.0) ** k) * acc / norm ** k
    return out if t.ndim else float(out)


def sigma(path: CoefficientPath, t, xi):
    """Full spatial Fourier multiplier sum_alpha (-1)^|alpha| rho_alpha(t) xi^alpha.

    Equals sum_k rho_k(t, xi) |xi|^k for xi != 0; at xi = 0 only the
    zero-order coefficient survives.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (path.n,):
        raise DomainError(f"xi must be a vector of length {path.n}")
    t = _check_t(path, t)
    acc = np.zeros(t.shape)
    for alpha, p in path.coeffs.items():
        k = sum(alpha)
        if k == 0:
            acc = acc + p(t)
            continue
        factor = float(np.prod(xi ** np.array(alpha)))
        if factor != 0.0:
            acc = acc + ((-1.0) ** k) * p(t) * factor
    return acc if t.ndim else float(acc)


@dataclass
class EllipticityData:
    """H1 constant Lambda and the derived two-sided symbol bound constants."""

    Lambda: float
    N0: float
    Lambda0: float

    def to_dict(self) -> dict:
        return {"Lambda": self.Lambda, "N0": self.N0, "Lambda0": self.Lambda0}


def _unit_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    axes = np.eye(n)
    return np.concatenate([dirs, axes, -axes])


def ellipticity_constants(path: CoefficientPath, nt: int = 65,
                          n_dirs: int = 64, radius_max: float = 1e6,
                          n_radii: int = 241) -> EllipticityData:
    """Measure the H1 constant on samples and certify the two-sided bound.

    Lambda bounds every reduced symbol and pinches the principal one; N0 is
    the first radius on a geometric grid where the lower-order sum is
    dominated by half the principal term, and Lambda0 = 2 Lambda is then
    sufficient for the two-sided symbol bound.
    """
    ts = np.linspace(0.0, path.T, nt)
    dirs = _unit_directions(path.n, n_dirs)
    two_m = 2 * path.m

    lam = 1.0
    principal_min = math.inf
    order_sup = np.zeros(two_m)  # measured sup of |rho_k| per lower order
    for d in dirs:
        top = rho_k(path, ts, d, two_m)
        mn = float(np.min(top))
        if mn <= 0.0:
            i = int(np.argmin(top))
            raise EllipticityViolationError(
                "principal symbol is not positive",
                witness={"t": float(ts[i]), "xi": [float(v) for v in d],
                         "rho_2m": mn})
        principal_min = min(principal_min, mn)
        lam = max(lam, float(np.max(top)))
        for k in range(two_m):
            order_sup[k] = max(order_sup[k],
                               float(np.max(np.abs(rho_k(path, ts, d, k)))))
    lam = max(lam, 1.0 / principal_min, float(np.max(order_sup, initial=0.0)))

    radii = np.geomspace(1.0, radius_max, n_radii)
    lower = np.zeros_like(radii)
    for k in range(two_m):
        lower += order_sup[k] * radii ** k
    ok = lower <= radii ** two_m / (2.0 * lam)
    if not np.any(ok):
        raise EllipticityViolationError(
            "no radius on the grid dominates the lower-order terms",
            witness={"radius_max": radius_max})
    N0 = float(radii[int(np.argmax(ok))])
    return EllipticityData(Lambda=lam, N0=N0, Lambda0=2.0 * lam)


def two_sided_bound_holds(path: CoefficientPath, data: EllipticityData,
                          t: float, xi) -> bool:
    """Check (1/Lambda0)|xi|^2m <= sigma(t, xi) <= Lambda0 |xi|^2m at a sample."""
    xi = np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(xi))
    s = sigma(path, t, xi)
    power = r ** (2 * path.m)
    return power / data.Lambda0 <= s <= data.Lambda0 * power


# -- mollification ---------------------------------------------------------

@lru_cache(maxsize=1)
def _bump_norm() -> float:
    raw = adaptive_quad(lambda s: math.exp(-1.0 / (1.0 - 4.0 * s * s)),
                        -0.5, 0.5, rel_tol=1e-14, abs_tol=1e-16)
    return 1.0 / raw


def bump(s):
    """Unit-mass smooth bump supported in [-1/2, 1/2]."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros(arr.shape)
    inside = np.abs(arr) < 0.5
    out[inside] = _bump_norm() * np.exp(-1.0 / (1.0 - 4.0 * arr[inside] ** 2))
    return out if np.ndim(s) else float(out[0])


def bump_derivative(s):
    """d/ds of the bump: -8 s / (1 - 4 s^2)^2 times the bump."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros(arr.shape)
    inside = np.abs(arr) < 0.5
    si = arr[inside]
    out[inside] = bump(si) * (-8.0 * si) / (1.0 - 4.0 * si ** 2) ** 2
    return out if np.ndim(s) else float(out[0])


def bump_derivative_l1() -> float:
    """Integral of |bump'|; the bump peaks at 0 so this is 2*bump(0)."""
    return 2.0 * float(bump(0.0))


@dataclass
class MollifiedPath:
    """A reduced symbol smoothed in time at scale epsilon (constant extension
    of the path outside [0, T] preserves its continuity seminorm)."""

    source: CoefficientPath
    k: int
    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise DomainError("mollification scale must be positive")

    def _convolve(self, t: float, xi, kernel) -> float:
        path, k, eps = self.source, self.k, self.epsilon

        def clipped_rho(s):
            return rho_k(path, np.clip(s, 0.0, path.T), xi, k)

        def integrand(y):
            return clipped_rho(t - eps * y) * kernel(y)

        # kinks of the clipped path mapped into kernel coordinates
        pts = []
        for b in [0.0, path.T] + path.breakpoints():
            y = (t - b) / eps
            if -0.5 < y < 0.5:
                pts.append(y)
        return adaptive_quad(integrand, -0.5, 0.5, points=pts,
                             rel_tol=1e-12, abs_tol=1e-15)

    def value(self, t: float, xi) -> float:
        return self._convolve(t, xi, bump)

    def derivative(self, t: float, xi) -> float:
        return self._convolve(t, xi, bump_derivative) / self.epsilon


def mollify_path(path: CoefficientPath, k: int, epsilon: float, t: float, xi) -> float:
    """Convolution of rho_k(., xi) with the bump at scale epsilon."""
    return MollifiedPath(path, k, epsilon).value(t, xi)


def epsilon_schedule(xi, N0: float, k: int) -> float:
    """Frequency-dependent mollification scale: |xi|^-k above N0, N0^-k below."""
    if N0 < 1.0:
        raise DomainError("N0 must be at least 1")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    base = r if r >= N0 else N0
    return base ** (-k)


@dataclass
class BoundsReport:
    """Measured mollifier bounds against the continuity seminorm K.

    r1 = sup |rho_eps - rho| / mu(eps) must stay below K, and
    r2 = sup |d/dt rho_eps| * eps / mu(eps) below K * l1(bump').
    """

    K: float
    r1: float
    r2: float
    bump_derivative_l1: float
    per_epsilon: list

    @property
    def passed(self) -> bool:
        slack = 1e-9 * max(1.0, self.K) + 1e-12
        return (self.r1 <= self.K + slack
                and self.r2 <= self.K * self.bump_derivative_l1 + slack)

    def to_dict(self) -> dict:
        return {"K": self.K, "r1": self.r1, "r2": self.r2,
                "bump_derivative_l1": self.bump_derivative_l1,
                "per_epsilon": self.per_epsilon, "passed": self.passed}


def mollifier_bounds_check(path: CoefficientPath, mu: ModulusSpec,
                           eps_grid: Sequence[float] = tuple(10.0 ** (-k) for k in range(1, 7)),
                           nt: int = 41, xi=None,
                           ks: Optional[Sequence[int]] = None) -> BoundsReport:
    """Measure sup ratios of the two mollifier bounds over (t, eps) grids.

    K is estimated from the empirical modulus of the sampled reduced symbol
    against mu.
    """
    if xi is None:
        xi = np.zeros(path.n)
        xi[0] = 1.0
    if ks is None:
        ks = sorted({sum(a) for a in path.coeffs})

    t_fine = np.linspace(0.0, path.T, 257)
    K = 0.0
    for k in ks:
        samples = list(zip(t_fine, rho_k(path, t_fine, xi, k)))
        emp = empirical_modulus(samples)
        K = max(K, emp.seminorm_against(mu))

    t_grid = np.linspace(0.0, path.T, nt)
    r1 = 0.0
    r2 = 0.0
    per_eps = []
    for eps in eps_grid:
        mu_eps = float(eval_modulus(mu, min(eps, 1.0)))
        worst1 = 0.0
        worst2 = 0.0
        for k in ks:
            mp = MollifiedPath(path, k, eps)
            exact = rho_k(path, t_grid, xi, k)
            for t, ex in zip(t_grid, exact):
                worst1 = max(worst1, abs(mp.value(float(t), xi) - ex) / mu_eps)
                worst2 = max(worst2, abs(mp.derivative(float(t), xi)) * eps / mu_eps)
        per_eps.append({"epsilon": float(eps), "r1": worst1, "r2": worst2})
        r1 = max(r1, worst1)
        r2 = max(r2, worst2)

    return BoundsReport(K=K, r1=r1, r2=r2,
                        bump_derivative_l1=bump_derivative_l1(),
                        per_epsilon=per_eps)
