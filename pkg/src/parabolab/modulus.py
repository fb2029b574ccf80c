"""Moduli of continuity: representation, validation, Osgood classification,
empirical moduli of sampled functions, and least concave majorants.

A modulus is a concave strictly increasing function mu on [0,1] with
mu(0) = 0 and mu(1) <= 1.  Named families:

  linear      mu(t) = t
  power       mu(t) = t**alpha, 0 < alpha < 1
  loglinear   mu(t) = t * (1 - log t)**alpha, 0 < alpha <= 1  (default 1)
  table       piecewise-linear through given nodes

The Osgood dichotomy (does the integral of 1/mu diverge at 0) drives
everything downstream: it decides whether the associated weight function
lives on the half line or blows up in finite time, and whether the
non-uniqueness construction is admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from ._quad import adaptive_quad
from .errors import DomainError, ValidationError

KINDS = ("linear", "power", "loglinear", "table")

# trend-classifier defaults: decades probed, floors for the verdict
TREND_DECADES = 12
TREND_OSGOOD_FLOOR = 0.05
TREND_CONVERGED_FLOOR = 1e-4
TREND_WINDOW = 5


@dataclass(frozen=True)
class ModulusSpec:
    """A modulus of continuity, either a named analytic family or a table.

    For tables produced by :func:`concave_envelope`, ``tau_scale`` and
    ``value_scale`` record the affine rescaling onto [0,1]x[0,1];
    ``invertible`` is False only for the degenerate all-zero envelope.
    """

    kind: str
    alpha: Optional[float] = None
    table: Optional[tuple] = None
    tau_scale: float = 1.0
    value_scale: float = 1.0
    invertible: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown modulus kind {self.kind!r}")
        if self.kind == "power":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValidationError("power modulus needs alpha in (0,1)")
        if self.kind == "loglinear":
            alpha = 1.0 if self.alpha is None else self.alpha
            if not (0.0 < alpha <= 1.0):
                raise ValidationError("loglinear modulus needs alpha in (0,1]")
            object.__setattr__(self, "alpha", alpha)
        if self.kind == "table":
            if not self.table:
                raise ValidationError("table modulus needs nodes")
            tab = tuple((float(t), float(v)) for t, v in self.table)
            taus = np.array([p[0] for p in tab])
            vals = np.array([p[1] for p in tab])
            if taus[0] != 0.0 or vals[0] != 0.0:
                raise ValidationError("table must start at (0, 0)")
            if np.any(np.diff(taus) <= 0):
                raise ValidationError("table abscissae must be strictly increasing")
            if taus[-1] > 1.0 + 1e-12:
                raise ValidationError("table abscissae must lie in [0, 1]")
            if np.any(vals < 0):
                raise ValidationError("table values must be nonnegative")
            object.__setattr__(self, "table", tab)

    # -- convenience constructors -------------------------------------------------
    @staticmethod
    def linear() -> "ModulusSpec":
        return ModulusSpec("linear")

    @staticmethod
    def power(alpha: float) -> "ModulusSpec":
        return ModulusSpec("power", alpha=alpha)

    @staticmethod
    def loglinear(alpha: float = 1.0) -> "ModulusSpec":
        return ModulusSpec("loglinear", alpha=alpha)

    @staticmethod
    def from_table(nodes) -> "ModulusSpec":
        return ModulusSpec("table", table=tuple(nodes))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.table is not None:
            d["table"] = [list(p) for p in self.table]
        if self.tau_scale != 1.0 or self.value_scale != 1.0:
            d["tau_scale"] = self.tau_scale
            d["value_scale"] = self.value_scale
        if not self.invertible:
            d["invertible"] = False
        return d

    @staticmethod
    def from_dict(d: dict) -> "ModulusSpec":
        return ModulusSpec(
            kind=d["kind"],
            alpha=d.get("alpha"),
            table=tuple(tuple(p) for p in d["table"]) if d.get("table") else None,
            tau_scale=d.get("tau_scale", 1.0),
            value_scale=d.get("value_scale", 1.0),
            invertible=d.get("invertible", True),
        )


def eval_modulus(spec: ModulusSpec, tau):
    """Evaluate mu(tau) for tau in [0, 1] (scalar or array)."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0 + 1e-15):
        raise DomainError("modulus argument must lie in [0, 1]")
    if spec.kind == "linear":
        out = t.copy()
    elif spec.kind == "power":
        out = np.power(t, spec.alpha)
    elif spec.kind == "loglinear":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0.0, t * (1.0 - np.log(np.where(t > 0, t, 1.0))) ** spec.alpha, 0.0)
    else:
        taus = np.array([p[0] for p in spec.table])
        vals = np.array([p[1] for p in spec.table])
        out = np.interp(t, taus, vals)
    return out if np.ndim(tau) else float(out)


def _reciprocal_integral_table(spec: ModulusSpec, lo: float, hi: float) -> float:
    """Exact integral of 1/mu over [lo, hi] for a piecewise-linear table.

    On a segment where mu(s) = m*s + c the antiderivative is log(m*s+c)/m
    (or s/c for flat segments); summing segments is exact, which beats
    adaptive quadrature near the singular endpoint.
    """
    taus = np.array([p[0] for p in spec.table])
    vals = np.array([p[1] for p in spec.table])
    if hi <= lo:
        return 0.0
    total = 0.0
    # segment index covering s: [taus[i], taus[i+1]); beyond last node mu is
    # constant at vals[-1]
    cuts = np.concatenate([taus, [np.inf]])
    for i in range(len(cuts) - 1):
        a = max(lo, float(cuts[i]))
        b = min(hi, float(cuts[i + 1]))
        if b <= a:
            continue
        if i >= len(taus) - 1:
            m, c = 0.0, vals[-1]
        else:
            m = (vals[i + 1] - vals[i]) / (taus[i + 1] - taus[i])
            c = vals[i] - m * taus[i]
        if m == 0.0:
            if c <= 0.0:
                raise DomainError("modulus vanishes on a segment; integral diverges")
            total += (b - a) / c
        else:
            ya = m * a + c
            yb = m * b + c
            if ya <= 0.0 or yb <= 0.0:
                raise DomainError("modulus nonpositive inside integration range")
            total += math.log(yb / ya) / m
    return total


def osgood_integral(spec: ModulusSpec, eps: float) -> float:
    """I(eps) = integral of 1/mu over [eps, 1].

    Computed in log coordinates (s = e^-x) where the integrand stays O(1)
    down to arbitrarily small eps; tables integrate segment-exactly instead.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must lie in (0, 1)")
    if spec.kind == "table":
        return _reciprocal_integral_table(spec, eps, 1.0)

    def integrand(x):
        s = math.exp(-x)
        return s / eval_modulus(spec, s)

    return adaptive_quad(integrand, 0.0, -math.log(eps))


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: Optional[dict] = None
    detail: str = ""

    def to_dict(self) -> dict:
        d = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def validate_modulus(spec: ModulusSpec, n_grid: int = 1000, tol: float = 1e-12) -> ValidationReport:
    """Check the shape invariants on a grid; failures become report entries
    with the witnessing grid point, never exceptions."""
    grid = np.linspace(0.0, 1.0, n_grid)
    mu = eval_modulus(spec, grid)
    checks = []

    checks.append(CheckResult("origin", bool(abs(mu[0]) <= tol),
                              None if abs(mu[0]) <= tol else {"mu_at_0": float(mu[0])}))

    diffs = np.diff(mu)
    inc_ok = bool(np.all(diffs > 0.0))
    witness = None
    if not inc_ok:
        i = int(np.argmax(diffs <= 0.0))
        witness = {"tau": float(grid[i]), "tau_next": float(grid[i + 1]),
                   "mu": float(mu[i]), "mu_next": float(mu[i + 1])}
    checks.append(CheckResult("strictly_increasing", inc_ok, witness))

    ub_ok = bool(mu[-1] <= 1.0 + tol)
    checks.append(CheckResult("upper_bound", ub_ok,
                              None if ub_ok else {"mu_at_1": float(mu[-1])}))

    # concavity midpoint test over all grid pairs
    mid = 0.5 * (grid[:, None] + grid[None, :])
    mu_mid = eval_modulus(spec, mid)
    gap = mu_mid - 0.5 * (mu[:, None] + mu[None, :])
    conc_ok = bool(np.all(gap >= -tol))
    witness = None
    if not conc_ok:
        i, j = np.unravel_index(int(np.argmin(gap)), gap.shape)
        witness = {"tau1": float(grid[i]), "tau2": float(grid[j]),
                   "midpoint": float(mid[i, j]), "deficit": float(-gap[i, j])}
    checks.append(CheckResult("concavity_midpoint", conc_ok, witness))

    # s^2 mu(1/s) nondecreasing on a geometric grid
    s = np.geomspace(1.0, 1e6, 301)
    g = s * s * eval_modulus(spec, 1.0 / s)
    gd = np.diff(g)
    slack = tol * np.maximum(1.0, np.abs(g[1:]))
    mono_ok = bool(np.all(gd >= -slack))
    witness = None
    if not mono_ok:
        i = int(np.argmax(gd < -slack))
        witness = {"s": float(s[i]), "value": float(g[i]), "value_next": float(g[i + 1])}
    checks.append(CheckResult("s2_mu_recip_nondecreasing", mono_ok, witness))

    return ValidationReport(checks)


@dataclass
class OsgoodVerdict:
    """Outcome of the Osgood classification.

    classification: 'osgood' | 'non_osgood' | 'undetermined'
    integral_trace: (eps, I(eps)) pairs on a geometric eps sequence
    method: 'symbolic' for named families, 'numeric-trend' for tables
    """

    classification: str
    integral_trace: list
    method: str

    def to_dict(self) -> dict:
        return {"class": self.classification,
                "integral_trace": [[float(e), float(v)] for e, v in self.integral_trace],
                "method": self.method}


def _integral_trace(spec: ModulusSpec, decades: int) -> list:
    return [(10.0 ** (-k), osgood_integral(spec, 10.0 ** (-k)))
            for k in range(1, decades + 1)]


def classify_osgood(spec: ModulusSpec, decades: int = TREND_DECADES) -> OsgoodVerdict:
    """Classify the divergence of the integral of 1/mu at 0.

    Named families are decided in closed form; tables get a numeric trend
    verdict from the per-decade increments of I(eps) (never claimed as a
    proof).
    """
    trace = _integral_trace(spec, decades)
    if spec.kind in ("linear", "loglinear"):
        return OsgoodVerdict("osgood", trace, "symbolic")
    if spec.kind == "power":
        return OsgoodVerdict("non_osgood", trace, "symbolic")

    values = np.array([v for _, v in trace])
    increments = np.diff(values)
    tail = increments[-TREND_WINDOW:]
    if np.all(tail >= TREND_OSGOOD_FLOOR):
        cls = "osgood"
    elif increments[-1] < TREND_CONVERGED_FLOOR:
        cls = "non_osgood"
    else:
        cls = "undetermined"
    return OsgoodVerdict(cls, trace, "numeric-trend")


@dataclass
class EmpiricalModulus:
    """Discrete modulus of continuity of sampled data.

    gaps/values tabulate tau -> mu(f, tau) at every distinct pairwise time
    gap up to 1 (entry 0 at tau = 0); nondecreasing by construction.
    seminorm is the sup of |f(t)-f(s)| / mu(f, |t-s|), i.e. 1 for any
    nonconstant sample set and 0 for constant data.

    When the sampled interval is shorter than 1, values at tau beyond the
    largest gap report the total oscillation; ``tau_cap_note`` records this.
    """

    interval: tuple
    gaps: np.ndarray
    values: np.ndarray
    seminorm: float
    tau_cap_note: str = ""

    def value_at(self, tau) -> np.ndarray:
        """mu(f, tau): largest tabulated oscillation over gaps <= tau."""
        t = np.asarray(tau, dtype=float)
        idx = np.searchsorted(self.gaps, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.gaps) - 1)
        out = self.values[idx]
        return out if np.ndim(tau) else float(out)

    def seminorm_against(self, mu: ModulusSpec | Callable) -> float:
        """Estimate the Hoelder-type seminorm sup |df| / mu(gap) of the data."""
        f = mu if callable(mu) else (lambda g: eval_modulus(mu, g))
        g = self.gaps[1:]
        v = self.values[1:]
        if g.size == 0:
            return 0.0
        denom = np.asarray(f(g), dtype=float)
        mask = denom > 0
        if not np.any(mask):
            return math.inf if np.any(v > 0) else 0.0
        return float(np.max(v[mask] / denom[mask]))

    def to_dict(self) -> dict:
        return {"interval": [float(self.interval[0]), float(self.interval[1])],
                "gaps": [float(g) for g in self.gaps],
                "values": [float(v) for v in self.values],
                "seminorm": float(self.seminorm),
                "tau_cap_note": self.tau_cap_note}


def empirical_modulus(samples: Sequence) -> EmpiricalModulus:
    """Exact discrete modulus of continuity of (t, value) samples.

    The sup over pairs with |t - s| <= tau is evaluated at each distinct
    pairwise gap; pairs with gaps above 1 are clamped out.
    """
    ts = np.array([float(s[0]) for s in samples])
    vs = np.array([np.atleast_1d(np.asarray(s[1], dtype=float)) for s in samples])
    if len(ts) < 2:
        raise DomainError("need at least two samples")
    if np.any(np.diff(ts) <= 0):
        raise DomainError("sample times must be strictly increasing")

    gaps, dists = _kernels.pair_oscillations(ts, vs, cap=1.0)
    if gaps.size == 0:
        return EmpiricalModulus((float(ts[0]), float(ts[-1])),
                                np.array([0.0]), np.array([0.0]), 0.0,
                                tau_cap_note="no pairs within unit gap")

    order = np.argsort(gaps, kind="stable")
    g = gaps[order]
    d = dists[order]
    # gaps within 1e-9 relative are the same lattice gap up to float noise
    new_group = np.empty(g.shape, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(g) > 1e-9 * g[1:]
    starts = np.nonzero(new_group)[0]
    ends = np.concatenate([starts[1:], [len(g)]])
    uniq = g[ends - 1]
    per_gap = np.maximum.reduceat(d, starts)
    running = np.maximum.accumulate(per_gap)

    gaps_out = np.concatenate([[0.0], uniq])
    values_out = np.concatenate([[0.0], running])

    note = ""
    span = float(ts[-1] - ts[0])
    if span < 1.0:
        note = (f"sampled interval has length {span:.6g} < 1; values at tau beyond "
                f"{uniq[-1]:.6g} report the total oscillation")

    seminorm = 1.0 if values_out[-1] > 0 else 0.0
    return EmpiricalModulus((float(ts[0]), float(ts[-1])), gaps_out, values_out,
                            seminorm, tau_cap_note=note)


def concave_envelope(emp: EmpiricalModulus) -> ModulusSpec:
    """Least concave majorant of the empirical modulus, as a table modulus.

    The majorant is the upper convex hull of the (gap, value) points.  The
    result is rescaled onto [0,1]x[0,1]; ``tau_scale`` and ``value_scale``
    undo the rescaling.  It dominates the input pointwise at the samples.
    The factor-2 domination bound (m <= 2 emp at gaps with emp > 0) holds
    whenever the gap set is closed under addition, e.g. for uniformly
    sampled data; very sparse nonuniform gap sets can break it below their
    resolution.
    """
    x = np.asarray(emp.gaps, dtype=float)
    y = np.asarray(emp.values, dtype=float)
    if y[-1] <= 0.0:
        return ModulusSpec("table", table=((0.0, 0.0), (1.0, 0.0)), invertible=False)

    # Andrew-style upper hull over points sorted by x (they already are)
    hull = []
    for px, py in zip(x, y):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # remove the middle point if it lies on or below the chord
            if (y2 - y1) * (px - x1) <= (py - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((px, py))

    # drop a flat tail so the table stays strictly increasing
    top = max(py for _, py in hull)
    while len(hull) >= 2 and hull[-2][1] >= top:
        hull.pop()

    tau_scale = hull[-1][0]
    value_scale = hull[-1][1]
    nodes = tuple((px / tau_scale, py / value_scale) for px, py in hull)
    return ModulusSpec("table", table=nodes, tau_scale=tau_scale,
                       value_scale=value_scale)


def envelope_value(spec: ModulusSpec, tau) -> np.ndarray:
    """Evaluate a (possibly rescaled) envelope in the original coordinates,
    extending constantly beyond the last node."""
    t = np.asarray(tau, dtype=float) / spec.tau_scale
    t = np.clip(t, 0.0, 1.0)
    out = spec.value_scale * eval_modulus(spec, t)
    return out if np.ndim(tau) else float(out)
