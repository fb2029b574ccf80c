"""Non-uniqueness construction for non-Osgood moduli.

A solution u of d_t u + (-1)^m (d^2m_x1 u + l(t) d^2m_x2 u) + b1 d_x1 u
+ b2 d_x2 u + c u = 0 on [0,1] x R^2 that vanishes identically at t = 1 but
not before.  Time is sliced into bands [1+a_n, 1+a_{n+1}] accumulating at 1;
on band n the solution blends two x1 modes and one x2 mode through smooth
cutoffs, the x2 mode carrying an exponential pump J_n(t) p_n.  The zero-order
coefficient l is 1 plus the pump rate divided by z_n, which makes it exactly
as rough as the prescribed modulus allows; b1, b2, c cancel the leading-part
residual pointwise.

All field evaluation happens in a per-band exponential gauge
g_n(t) = q_n + z_n (t - 1 - a_n): the raw fields span thousands of orders of
magnitude, while gauged quantities stay within exp(O(p_n)).  The lower-order
coefficients are gauge-invariant ratios, so they come out in absolute scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from . import _jets
from .errors import (DomainError, InadmissibleModulusError, RepresentabilityError,
                     SearchFailureError, ValidationError)
from .modulus import ModulusSpec, classify_osgood, eval_modulus, osgood_integral

# ---------------------------------------------------------------------------
# cutoffs

_CUTOFF_FORMS = {
    # name -> list of smooth-step factors (scale, shift) composed as products,
    # plus affine (mul, add) applied to the product
    "A": ([(-20.0, 5.0)], 1.0, 0.0),
    "B": ([(6.0, 0.0), (-2.0, 2.0)], 1.0, 0.0),
    "C": ([(12.0, -3.0)], 1.0, 0.0),
    "J": ([(30.0, -5.0), (-6.0, 3.0)], 4.0, -2.0),
}


@dataclass
class CutoffSet:
    """The four smooth cutoffs with derivative evaluators and cached sup norms.

    Plateaus are exact: the underlying step is identically 0 / 1 outside its
    transition, so e.g. J'(0) = J'(1) = 0 holds in floating point, not just
    approximately.
    """

    order: int
    sup_norms: dict

    def eval(self, name: str, s, order: Optional[int] = None) -> np.ndarray:
        """Derivatives 0..order of cutoff `name` at s; shape (order+1, len(s))."""
        if order is None:
            order = self.order
        if order > self.order:
            raise DomainError(f"cutoff set built for order {self.order}")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        factors, mul, add = _CUTOFF_FORMS[name]
        jet = _jets.step_jet(s, order, scale=factors[0][0], shift=factors[0][1])
        for scale, shift in factors[1:]:
            jet = _jets.mul_jet(jet, _jets.step_jet(s, order, scale=scale, shift=shift))
        jet = mul * jet
        jet[0] += add
        return _jets.derivatives(jet)

    def sup(self, name: str, order: int) -> float:
        return self.sup_norms[(name, order)]


def build_cutoffs(order: int = 4, grid_size: int = 20001) -> CutoffSet:
    """Build the cutoff family and measure derivative sup norms on a fine grid."""
    if order < 1:
        raise DomainError("order must be >= 1")
    cs = CutoffSet(order=order, sup_norms={})
    grid = np.linspace(-0.1, 1.1, grid_size)
    for name in _CUTOFF_FORMS:
        derivs = cs.eval(name, grid, order)
        for j in range(order + 1):
            cs.sup_norms[(name, j)] = float(np.max(np.abs(derivs[j])))
    return cs


# ---------------------------------------------------------------------------
# sequences

@dataclass
class SequencePlan:
    """The band sequences for a non-Osgood modulus with growth (n+k0)^3.

    Arrays are 0-indexed by n-1: a[0] is a_1, etc.  a, z and q have N+1
    entries (band n spans [1+a_n, 1+a_{n+1}]; q[0] = 0), r and p have N.
    """

    mu: ModulusSpec
    k0: int
    N: int
    m: int
    a: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    a_tail_bound: float = 0.0
    k0_auto: bool = False
    binding_constraint: str = ""

    @property
    def boundaries(self) -> np.ndarray:
        return 1.0 + self.a

    def band_wavenumbers(self) -> np.ndarray:
        return self.z ** (1.0 / (2 * self.m))

    def to_dict(self) -> dict:
        return {"mu": self.mu.to_dict(), "k0": self.k0, "N": self.N, "m": self.m,
                "k0_auto": self.k0_auto, "binding_constraint": self.binding_constraint,
                "a_tail_bound": self.a_tail_bound,
                "a_first": float(self.a[0]), "a_last": float(self.a[-1]),
                "p_min": float(np.min(self.p)), "p_max": float(np.max(self.p))}


def _series_term(mu: ModulusSpec, x: np.ndarray) -> np.ndarray:
    """f(x) = 1 / (x^2 mu(1/x)); the band widths r_n = f(n + k0)."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (x * x * eval_modulus(mu, 1.0 / x))


def _tail_integral(mu: ModulusSpec, upper: float) -> float:
    """integral_0^upper ds/mu(s): the convergent Osgood tail."""
    if mu.kind == "power":
        return upper ** (1.0 - mu.alpha) / (1.0 - mu.alpha)
    if mu.kind == "table":
        from .weight import _estimate_eta_sup
        eta_sup, _ = _estimate_eta_sup(mu)
        return eta_sup - osgood_integral(mu, upper)
    raise InadmissibleModulusError(
        f"{mu.kind} modulus has a divergent reciprocal integral")


def _series_tail(mu: ModulusSpec, M: float) -> float:
    """sum_{j >= M} f(j) by Euler-Maclaurin: integral + f(M)/2 - f'(M)/12."""
    integral = _tail_integral(mu, 1.0 / M)
    fM = float(_series_term(mu, np.array([M]))[0])
    if mu.kind == "power":
        dfM = (mu.alpha - 2.0) * M ** (mu.alpha - 3.0)
    else:
        h = 1e-3 * M
        lo, hi = _series_term(mu, np.array([M - h, M + h]))
        dfM = (hi - lo) / (2.0 * h)
    return integral + 0.5 * fM - dfM / 12.0


def solve_k0(cutoffs: CutoffSet, j_sup: Optional[float] = None) -> int:
    """Smallest k0 making the parabolicity condition hold at its binding
    band n = 1: (z_2 - z_1)/z_1 <= 1 / (2 ||J'||)."""
    if j_sup is None:
        j_sup = cutoffs.sup("J", 1)
    target = 1.0 / (2.0 * j_sup)
    k0 = 1
    while k0 <= 10 ** 7:
        x = 1.0 + k0
        if (3.0 * x * x + 3.0 * x + 1.0) / x ** 3 <= target:
            return k0
        # closed-form jump: (3x^2+3x+1)/x^3 ~ 3/x
        k0 = max(k0 + 1, int(2.9 / target) - 1)
    raise SearchFailureError("no k0 <= 1e7 satisfies the parabolicity bound")


def build_sequences(mu: ModulusSpec, k0, N: int, m: int,
                    cutoffs: CutoffSet, tail_extra: int = 64) -> SequencePlan:
    """Compute (a_n, z_n, r_n, q_n, p_n) for n <= N with z_n = (n+k0)^3 and
    a_n the negative tail of 1/((j+k0)^2 mu(1/(j+k0))).

    The infinite tail is summed by partial summation plus an Euler-Maclaurin
    remainder (relative accuracy far below 1e-10 for the named families).
    Requires a non-Osgood modulus; k0 = "auto" picks the smallest admissible
    value for the measured cutoff steepness.
    """
    if N < 3:
        raise DomainError("need N >= 3")
    verdict = classify_osgood(mu)
    if verdict.classification != "non_osgood":
        raise InadmissibleModulusError(
            f"modulus classifies {verdict.classification}; the band tail sum "
            "requires a non-Osgood modulus")

    auto = isinstance(k0, str)
    if auto:
        if k0 != "auto":
            raise DomainError(f"k0 must be an integer or 'auto', got {k0!r}")
        k0 = solve_k0(cutoffs)
        binding = ("parabolicity at n=1: (z_2-z_1)/z_1 <= 1/(2 ||J'||inf) with "
                   f"||J'||inf = {cutoffs.sup('J', 1):.6g}")
    else:
        k0 = int(k0)
        if k0 < 1:
            raise DomainError("k0 must be >= 1")
        binding = "k0 given explicitly"

    idx = np.arange(1, N + 2, dtype=float)          # n = 1 .. N+1
    x = idx + k0
    z = x ** 3
    terms = _series_term(mu, x)                      # r_n for n = 1..N+1
    extra = _series_term(mu, np.arange(N + 2, N + 2 + tail_extra, dtype=float) + k0)
    tail = _series_tail(mu, float(N + 2 + tail_extra + k0))

    # a_n = -(sum_{j=n}^{J*} f(j+k0) + tail beyond J*)
    suffix = np.concatenate([terms, extra])[::-1].cumsum()[::-1]
    a = -(suffix[:N + 1] + tail)

    r = terms[:N]
    p = (z[1:N + 1] - z[:N]) * r
    q = np.concatenate([[0.0], np.cumsum(z[1:N + 1] * r)])[:N + 1]

    return SequencePlan(mu=mu, k0=k0, N=N, m=m, a=a, z=z[:N + 1], r=r,
                        q=q[:N + 1], p=p, a_tail_bound=tail,
                        k0_auto=auto, binding_constraint=binding)


# ---------------------------------------------------------------------------
# admissibility conditions

_DEFAULT_PROBES = tuple((al, be, ga)
                        for al in (0.5, 1.0, 2.0, 5.0)
                        for be in (0.5, 1.0, 2.0, 5.0)
                        for ga in (0.5, 1.0, 2.0, 5.0))


@dataclass
class ConditionResult:
    cond_id: str
    passed: bool
    margin: float
    witness: Optional[dict] = None
    note: str = ""

    def to_dict(self) -> dict:
        d = {"id": self.cond_id, "passed": self.passed, "margin": self.margin,
             "note": self.note}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class ConditionReport:
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, cond_id: str) -> ConditionResult:
        for r in self.results:
            if r.cond_id == cond_id:
                return r
        raise KeyError(cond_id)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "conditions": [r.to_dict() for r in self.results]}


def _log_probe(plan: SequencePlan, head, alpha: float, beta: float, gamma: float):
    """L(n) = head(n) + alpha log z_{n+1} + beta log p_n - gamma log r_n."""
    n = plan.N
    return (head + alpha * np.log(plan.z[1:n + 1]) + beta * np.log(plan.p)
            - gamma * np.log(plan.r))


def _monotone_probe_check(plan: SequencePlan, head, probes, cond_id: str,
                          from_n: int = 3) -> ConditionResult:
    """Eventual decrease of a log-space decay diagnostic: strictly decreasing
    from band `from_n` on, for every probe triple, with the final decrement
    bounded away from zero.  The limit itself is reported, not proved."""
    worst_margin = math.inf
    witness = None
    weakest_dominance = math.inf
    for (al, be, ga) in probes:
        L = _log_probe(plan, head, al, be, ga)
        diffs = np.diff(L[from_n - 1:])
        if diffs.size == 0:
            continue
        margin = float(-np.max(diffs))
        if margin < worst_margin:
            worst_margin = margin
            if margin <= 1e-6:
                i = int(np.argmax(diffs)) + from_n
                witness = {"triple": [al, be, ga], "n": i,
                           "L_n": float(L[i - 1]), "L_next": float(L[i])}
        # how strongly the decay driver -head dominates the probe logs at N
        probe_logs = float(L[-1] - head[-1])
        weakest_dominance = min(weakest_dominance,
                                float(-head[-1]) / max(1.0, abs(probe_logs)))
    passed = worst_margin > 1e-6 and witness is None
    note = (f"decay driver / probe-log dominance ratio at N: "
            f"{weakest_dominance:.4g}; monotone decrease reported, limit not "
            "proved symbolically")
    return ConditionResult(cond_id, passed, worst_margin, witness, note)


def check_conditions(plan: SequencePlan, cutoffs: CutoffSet,
                     probes: Sequence = _DEFAULT_PROBES) -> ConditionReport:
    """Evaluate the seven admissibility conditions on the computed range.

    Exact checks where the condition is finite-dimensional; log-space
    monotone-trend checks for the two decay limits, on a grid of positive
    probe exponents.
    """
    res = []
    a, z, r, q, p = plan.a, plan.z, plan.r, plan.q, plan.p
    N = plan.N

    # 4.1: a strictly increasing in (-1, 0)
    ok = bool(np.all(np.diff(a) > 0) and np.all(a > -1.0) and np.all(a < 0.0))
    witness = None
    if not ok:
        bad = np.nonzero(~((a > -1.0) & (a < 0.0)))[0]
        i = int(bad[0]) if bad.size else int(np.argmin(np.diff(a)))
        witness = {"n": i + 1, "a_n": float(a[i])}
    res.append(ConditionResult(
        "4.1", ok, float(min(np.min(-a), np.min(1.0 + a))), witness,
        f"tail beyond computed range bounded by {plan.a_tail_bound:.3e}"))

    # 4.2: z strictly increasing, > 1, to infinity
    ok = bool(np.all(np.diff(z) > 0) and z[0] > 1.0)
    res.append(ConditionResult("4.2", ok, float(z[0] - 1.0), None,
                               "growth (n+k0)^3 is unbounded by construction"))

    # 4.3: p_n > 1, certified beyond N by monotonicity of the lower bound
    margin = float(np.min(p) - 1.0)
    witness = None if margin > 0 else {"n": int(np.argmin(p)) + 1,
                                       "p_n": float(np.min(p))}
    lower = 3.0 / eval_modulus(plan.mu, 1.0 / (np.arange(1, N + 1) + plan.k0))
    certified = bool(np.all(p >= lower - 1e-9 * np.abs(p)) and np.all(np.diff(lower) >= 0))
    res.append(ConditionResult(
        "4.3", margin > 0.0, margin, witness,
        "lower bound 3/mu(1/(n+k0)) nondecreasing in n"
        + ("" if certified else " (bound check failed)")))

    # 4.4: exp(-q_n + 2 p_n) z_{n+1}^a p_n^b r_n^-g -> 0
    res.append(_monotone_probe_check(plan, -q[1:N + 1] + 2.0 * p, probes, "4.4"))

    # 4.5: sup p_n / (r_n z_n) <= 1 / (2 ||J'||)
    ratios = p / (r * z[:N])
    j_sup = cutoffs.sup("J", 1)
    bound = 1.0 / (2.0 * j_sup)
    sup_ratio = float(np.max(ratios))
    ok = sup_ratio <= bound
    witness = None if ok else {"n": int(np.argmax(ratios)) + 1,
                               "ratio": sup_ratio, "bound": bound}
    res.append(ConditionResult("4.5", ok, float(bound - sup_ratio), witness,
                               f"measured ||J'||inf = {j_sup:.6g}"))

    # 4.6: sup of the 4.5 ratio divided by mu(r_n) finite (trend bounded)
    ratios6 = ratios / eval_modulus(plan.mu, np.minimum(r, 1.0))
    window = max(5, N // 5)
    tail_diffs = np.diff(ratios6[-window:])
    slack = 1e-12 * np.maximum(1.0, ratios6[-window:-1])
    ok = bool(np.all(tail_diffs <= slack))
    witness = None
    if not ok:
        j = int(np.argmax(tail_diffs > slack))
        n_bad = N - window + 1 + j + 1
        witness = {"n": n_bad, "ratio": float(ratios6[n_bad - 1])}
    res.append(ConditionResult(
        "4.6", ok, float(np.max(ratios6)), witness,
        f"sup {float(np.max(ratios6)):.6g} attained at n="
        f"{int(np.argmax(ratios6)) + 1}; last-window increments <= 0"))

    # 4.7: exp(-p_n) z_{n+1}^a p_n^b r_n^-g -> 0
    res.append(_monotone_probe_check(plan, -p, probes, "4.7"))

    return ConditionReport(res)


# ---------------------------------------------------------------------------
# field evaluation

@dataclass
class SolutionValues:
    """Gauged solution and partials at evaluation points.

    Absolute values are exp(-gauge_exponent) times the gauged ones; band is
    0 on the head interval [0, 1+a_1], n on band n, -1 at the terminal time.
    """

    u: np.ndarray
    du_dt: np.ndarray
    du_dx1: np.ndarray
    du_dx2: np.ndarray
    d2m_dx1: np.ndarray
    d2m_dx2: np.ndarray
    gauge_exponent: np.ndarray
    band: np.ndarray

    def log10_abs_u(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return (np.log(np.abs(self.u)) - self.gauge_exponent) / math.log(10.0)


@dataclass
class LowerOrderValues:
    l: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c: np.ndarray
    Lu: np.ndarray
    residual: np.ndarray
    degenerate: np.ndarray
    band: np.ndarray


@dataclass
class CounterexampleField:
    """Band-gauged evaluators for the counterexample solution and coefficients."""

    plan: SequencePlan
    cutoffs: CutoffSet

    def __post_init__(self):
        self._k = self.plan.band_wavenumbers()

    # -- band-local evaluation (n >= 1, theta in [0, 1]) --------------------

    def eval_band(self, n, theta, x1, x2) -> SolutionValues:
        """Evaluate on band n at local time theta = (t - 1 - a_n)/r_n.

        Exact at theta = 0 and 1, which is what the boundary-matching checks
        need; the public t interface loses ~1e-16/r_n of theta resolution to
        rounding.
        """
        plan = self.plan
        n, theta, x1, x2 = np.broadcast_arrays(
            np.atleast_1d(np.asarray(n, dtype=int)),
            np.atleast_1d(np.asarray(theta, dtype=float)),
            np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        if np.any((n < 1) | (n > plan.N)):
            raise DomainError(f"band index must lie in [1, {plan.N}]")
        i = n - 1
        p = plan.p[i]
        r = plan.r[i]
        z = plan.z[i]
        z_next = plan.z[i + 1]
        q = plan.q[i]
        k = self._k[i]
        k_next = self._k[i + 1]

        cj = {name: self.cutoffs.eval(name, theta, 1) for name in "ABCJ"}
        A, dA = cj["A"]
        B, dB = cj["B"]
        C, dC = cj["C"]
        J, dJ = cj["J"]

        # per-point gauge shift: keeps the pump factor exp(J p) representable
        # for arbitrarily deep bands; all outputs and gauge_exponent move
        # together, so ratios and log magnitudes are unaffected
        pump = J * p
        shift = np.maximum(0.0, pump - 300.0)
        E_J = np.exp(pump - shift)
        E_p = np.exp(-theta * p - shift)
        E_0 = np.exp(-shift)
        c1 = np.cos(k * x1)
        s1 = np.sin(k * x1)
        c1n = np.cos(k_next * x1)
        s1n = np.sin(k_next * x1)
        c2 = np.cos(k * x2)
        s2 = np.sin(k * x2)

        u = A * E_0 * c1 + B * E_J * c2 + C * E_p * c1n
        du_raw = (dA * E_0 * c1 + (dB + B * dJ * p) * E_J * c2
                  + (dC - C * p) * E_p * c1n) / r
        du_dt = du_raw - z * u
        sign_m = (-1.0) ** plan.m
        vals = SolutionValues(
            u=u,
            du_dt=du_dt,
            du_dx1=-(A * E_0 * k * s1 + C * E_p * k_next * s1n),
            du_dx2=-B * E_J * k * s2,
            d2m_dx1=sign_m * (A * E_0 * z * c1 + C * E_p * z_next * c1n),
            d2m_dx2=sign_m * B * E_J * z * c2,
            gauge_exponent=q + z * theta * r + shift,
            band=n.copy(),
        )
        return vals

    # -- time-based evaluation ----------------------------------------------

    def locate(self, t) -> tuple:
        """Split times into head / band / terminal; errors outside coverage."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise DomainError("t must lie in [0, 1]")
        B = self.plan.boundaries
        terminal = t == 1.0
        head = t < B[0]
        inner = ~(head | terminal)
        if np.any(inner & (t >= B[-1])):
            raise DomainError(
                f"t beyond the computed bands (t < {B[-1]:.9g} or t = 1); "
                "increase N")
        band = np.searchsorted(B, t, side="right")
        band = np.where(head, 0, band)
        band = np.where(terminal, -1, band)
        return t, head, terminal, band

    def eval_solution(self, t, x1, x2, gauged: bool = True):
        """Solution values at (t, x1, x2); scalar in, scalar-fields out.

        gauged=False rescales to absolute values, failing with the log10
        magnitude when they cannot be represented in double precision.
        """
        scalar = np.ndim(t) == 0
        t, head, terminal, band = self.locate(t)
        x1 = np.broadcast_to(np.asarray(x1, dtype=float), t.shape)
        x2 = np.broadcast_to(np.asarray(x2, dtype=float), t.shape)
        plan = self.plan

        out = SolutionValues(*[np.zeros(t.shape) for _ in range(7)],
                             band=band.astype(int))

        if np.any(head):
            z1 = plan.z[0]
            k1 = self._k[0]
            c1 = np.cos(k1 * x1[head])
            out.u[head] = c1
            out.du_dt[head] = -z1 * c1
            out.du_dx1[head] = -k1 * np.sin(k1 * x1[head])
            out.d2m_dx1[head] = (-1.0) ** plan.m * z1 * c1
            out.gauge_exponent[head] = z1 * (t[head] - 1.0 - plan.a[0])

        inner = ~(head | terminal)
        if np.any(inner):
            n = band[inner]
            theta = (t[inner] - plan.boundaries[n - 1]) / plan.r[n - 1]
            theta = np.clip(theta, 0.0, 1.0)
            vals = self.eval_band(n, theta, x1[inner], x2[inner])
            for name in ("u", "du_dt", "du_dx1", "du_dx2", "d2m_dx1",
                         "d2m_dx2", "gauge_exponent"):
                getattr(out, name)[inner] = getattr(vals, name)

        if not gauged:
            log10 = out.log10_abs_u()
            finite = np.isfinite(log10)
            if np.any(np.abs(log10[finite]) > 300.0):
                worst = float(np.max(np.abs(log10[finite])))
                raise RepresentabilityError(
                    f"absolute field magnitude 1e{worst:.1f} is not "
                    "representable; use gauged mode", worst)
            scale = np.exp(-out.gauge_exponent)
            for name in ("u", "du_dt", "du_dx1", "du_dx2", "d2m_dx1", "d2m_dx2"):
                setattr(out, name, getattr(out, name) * scale)
            out.gauge_exponent = np.zeros_like(out.gauge_exponent)

        if scalar:
            out = SolutionValues(*(np.asarray(getattr(out, f))[0] for f in
                                   ("u", "du_dt", "du_dx1", "du_dx2",
                                    "d2m_dx1", "d2m_dx2", "gauge_exponent")),
                                 band=int(out.band[0]))
        return out

    # -- coefficients --------------------------------------------------------

    def coefficient_l(self, t) -> np.ndarray:
        """l(t): 1 off the bands, 1 + J'(theta) p_n/(r_n z_n) on band n."""
        scalar = np.ndim(t) == 0
        t, head, terminal, band = self.locate(t)
        out = np.ones(t.shape)
        inner = ~(head | terminal)
        if np.any(inner):
            i = band[inner] - 1
            theta = (t[inner] - self.plan.boundaries[i]) / self.plan.r[i]
            theta = np.clip(theta, 0.0, 1.0)
            dJ = self.cutoffs.eval("J", theta, 1)[1]
            out[inner] = 1.0 + dJ * self.plan.p[i] / (self.plan.r[i] * self.plan.z[i])
        return out if not scalar else float(out[0])

    def _l_from_band(self, n, theta):
        i = np.atleast_1d(np.asarray(n, dtype=int)) - 1
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        dJ = self.cutoffs.eval("J", theta, 1)[1]
        return 1.0 + dJ * self.plan.p[i] / (self.plan.r[i] * self.plan.z[i])

    def eval_lower_order(self, t, x1, x2, sign_variant: str = "plus_l",
                         gauge_shift: float = 0.0):
        """l, b1, b2, c, the leading-part residual Lu, and the full-equation
        residual at (t, x1, x2), all in band gauge (b, c, l are gauge
        invariant, so they are absolute).

        sign_variant selects the sign on l(t) d^2m_x2: "plus_l" or "minus_l".
        gauge_shift adds a constant to the gauge exponent (diagnostics only;
        results must not depend on it).
        """
        if sign_variant not in ("plus_l", "minus_l"):
            raise DomainError(f"unknown sign variant {sign_variant!r}")
        sgn = 1.0 if sign_variant == "plus_l" else -1.0
        scalar = np.ndim(t) == 0
        sol = self.eval_solution(np.atleast_1d(t), x1, x2, gauged=True)
        t_arr, head, terminal, band = self.locate(np.atleast_1d(t))
        lvals = self.coefficient_l(t_arr)

        shift = math.exp(gauge_shift)
        u = sol.u * shift
        du1 = sol.du_dx1 * shift
        du2 = sol.du_dx2 * shift
        sign_m = (-1.0) ** self.plan.m
        Lu = (sol.du_dt + sign_m * (sol.d2m_dx1 + sgn * lvals * sol.d2m_dx2)) * shift

        # normalize by the largest component so the quadratic denominator
        # cannot overflow however deep the band
        mag = np.maximum(np.abs(u), np.maximum(np.abs(du1), np.abs(du2)))
        degenerate = mag == 0.0
        safe = np.where(degenerate, 1.0, mag)
        nu = u / safe
        n1 = du1 / safe
        n2 = du2 / safe
        den = np.where(degenerate, 1.0, nu * nu + n1 * n1 + n2 * n2)
        scale = np.where(degenerate, 0.0, Lu / (den * safe))
        b1 = -scale * n1
        b2 = -scale * n2
        c = -scale * nu
        residual = Lu + b1 * du1 + b2 * du2 + c * u

        out = LowerOrderValues(l=lvals, b1=b1, b2=b2, c=c, Lu=Lu,
                               residual=residual, degenerate=degenerate,
                               band=sol.band)
        if scalar:
            out = LowerOrderValues(*(np.asarray(getattr(out, f))[0] for f in
                                     ("l", "b1", "b2", "c", "Lu", "residual")),
                                   degenerate=bool(out.degenerate[0]),
                                   band=int(out.band[0]))
        return out


def build_field(plan: SequencePlan, cutoffs: CutoffSet) -> CounterexampleField:
    return CounterexampleField(plan=plan, cutoffs=cutoffs)


def eval_solution(field: CounterexampleField, t, x1, x2, gauged: bool = True):
    """Solution and partials at (t, x1, x2); see the field method."""
    return field.eval_solution(t, x1, x2, gauged=gauged)


def eval_lower_order(field: CounterexampleField, t, x1, x2,
                     sign_variant: str = "plus_l"):
    """l, b1, b2, c, the leading residual, and the full-equation residual."""
    return field.eval_lower_order(t, x1, x2, sign_variant=sign_variant)


# ---------------------------------------------------------------------------
# regularity diagnostics

@dataclass
class RegularityReport:
    """Measured regularity of the construction: lower-order coefficient sups
    per band, the modulus diagnostics of l at dyadic scales, and flatness of
    the solution at the terminal time."""

    band_sups: list
    sup_trend: str
    dyadic: list
    selected_window: list
    mu_ratio_sup: float
    mu_ratio_nonincreasing: bool
    lip_ratio_increasing: bool
    levels_used: int
    flatness: list
    sign_variant: str

    @property
    def sharpness_exhibited(self) -> bool:
        return self.mu_ratio_nonincreasing and self.lip_ratio_increasing

    def to_dict(self) -> dict:
        return {"band_sups": self.band_sups, "sup_trend": self.sup_trend,
                "dyadic": self.dyadic, "selected_window": self.selected_window,
                "mu_ratio_sup": self.mu_ratio_sup,
                "mu_ratio_nonincreasing": self.mu_ratio_nonincreasing,
                "lip_ratio_increasing": self.lip_ratio_increasing,
                "levels_used": self.levels_used, "flatness": self.flatness,
                "sign_variant": self.sign_variant,
                "sharpness_exhibited": self.sharpness_exhibited}


def oscillation_at_scale(field: CounterexampleField, tau: float,
                         samples_per_window: int = 32) -> float:
    """mu(l, tau) by direct measurement: sup oscillation of l over windows of
    width tau on a uniform grid of step tau/samples_per_window.  Exact up to
    grid resolution but only affordable for coarse tau; the banded profile
    below covers the fine scales."""
    B = field.plan.boundaries
    lo, hi = float(B[0]), float(B[-1])
    step = tau / samples_per_window
    npts = int((hi - lo) / step)
    if npts < 4 * samples_per_window:
        raise DomainError("tau too coarse for the band span")
    if npts > 40_000_000:
        raise DomainError("tau too fine; grid would exceed the memory budget")
    t = lo + step * np.arange(npts)
    lv = field.coefficient_l(t)
    size = samples_per_window + 1
    mx = ndimage.maximum_filter1d(lv, size=size, mode="nearest")
    mn = ndimage.minimum_filter1d(lv, size=size, mode="nearest")
    half = size // 2
    osc = mx[half:npts - half] - mn[half:npts - half]
    return float(np.max(osc))


@dataclass
class WindowOscillationProfile:
    """Sup oscillation W(h) of the pump-rate shape J' over windows of
    relative width h in [0, 1].

    Every band carries the same J' profile in its local time, so
    mu(l, tau) = max_n (p_n/(r_n z_n)) W(tau/r_n) exactly (windows straddling
    a boundary see only the flat tails of J').  One profile therefore prices
    every band at every scale.
    """

    h_grid: np.ndarray
    values: np.ndarray

    def __call__(self, h) -> np.ndarray:
        h = np.atleast_1d(np.asarray(h, dtype=float))
        hc = np.clip(h, self.h_grid[0], 1.0)
        out = np.interp(np.log(hc), np.log(self.h_grid), self.values)
        small = h < self.h_grid[0]
        # below the resolved range J' is smooth, so W is linear in h
        out[small] = self.values[0] * h[small] / self.h_grid[0]
        return out


def window_oscillation_profile(cutoffs: CutoffSet, grid_log2: int = 20,
                               h_min: float = 2e-5, n_h: int = 400) -> WindowOscillationProfile:
    M = 2 ** grid_log2
    theta = np.linspace(0.0, 1.0, M + 1)
    dJ = cutoffs.eval("J", theta, 1)[1]
    h_grid = np.geomspace(h_min, 1.0, n_h)
    vals = np.empty_like(h_grid)
    for i, h in enumerate(h_grid):
        size = max(2, int(round(h * M)) + 1)
        mx = ndimage.maximum_filter1d(dJ, size=size, mode="nearest")
        mn = ndimage.minimum_filter1d(dJ, size=size, mode="nearest")
        half = size // 2
        vals[i] = np.max(mx[half:M + 1 - half] - mn[half:M + 1 - half])
    return WindowOscillationProfile(h_grid=h_grid, values=vals)


def oscillation_at_scale_banded(plan: SequencePlan,
                                profile: WindowOscillationProfile,
                                tau: float) -> float:
    """mu(l, tau) from the per-band decomposition (valid for tau below the
    flat-tail margin of the widest band, tau <= r_1/6)."""
    amp = plan.p / (plan.r * plan.z[:plan.N])
    return float(np.max(amp * profile(tau / plan.r)))


def dyadic_ladder(plan: SequencePlan, depth: int = 14) -> list:
    """Dyadic widths from just under the widest band downward."""
    k_lo = int(math.ceil(-math.log2(plan.r[0]))) + 1
    return [2.0 ** (-k) for k in range(k_lo, k_lo + depth)]


def regularity_report(field: CounterexampleField, sign_variant: str = "plus_l",
                      bands: Optional[Sequence[int]] = None,
                      n_theta: int = 48, n_x: int = 12, seed: int = 0,
                      dyadic_count: int = 5) -> RegularityReport:
    """Measure (i) per-band sups of the lower-order coefficients and their
    first derivatives, (ii) the dyadic-scale modulus diagnostics of l, and
    (iii) the terminal-time flatness of the solution."""
    plan = field.plan
    rng = np.random.default_rng(seed)

    # (i) per-band coefficient sups
    if bands is None:
        bands = sorted(set(np.unique(np.geomspace(1, plan.N, 16).astype(int))))
    band_sups = []
    theta = np.linspace(0.0, 1.0, n_theta + 2)[1:-1]
    for n in bands:
        x1 = rng.uniform(0.0, 2.0 * np.pi, n_x)
        x2 = rng.uniform(0.0, 2.0 * np.pi, n_x)
        tt, xx1 = np.meshgrid(theta, x1, indexing="ij")
        _, xx2 = np.meshgrid(theta, x2, indexing="ij")
        t_band = plan.boundaries[n - 1] + tt.ravel() * plan.r[n - 1]
        low = field.eval_lower_order(t_band, xx1.ravel(), xx2.ravel(),
                                     sign_variant=sign_variant)
        ok = ~low.degenerate
        entry = {"band": int(n),
                 "sup_b1": float(np.max(np.abs(low.b1[ok]), initial=0.0)),
                 "sup_b2": float(np.max(np.abs(low.b2[ok]), initial=0.0)),
                 "sup_c": float(np.max(np.abs(low.c[ok]), initial=0.0)),
                 "p_n": float(plan.p[n - 1])}
        # first-derivative sups by central differences in t and x1
        h_t = 1e-4 * plan.r[n - 1]
        h_x = 1e-4
        lo_tp = field.eval_lower_order(t_band + h_t, xx1.ravel(), xx2.ravel(),
                                       sign_variant=sign_variant)
        lo_tm = field.eval_lower_order(t_band - h_t, xx1.ravel(), xx2.ravel(),
                                       sign_variant=sign_variant)
        lo_xp = field.eval_lower_order(t_band, xx1.ravel() + h_x, xx2.ravel(),
                                       sign_variant=sign_variant)
        lo_xm = field.eval_lower_order(t_band, xx1.ravel() - h_x, xx2.ravel(),
                                       sign_variant=sign_variant)
        for name in ("b1", "b2", "c"):
            dt = (getattr(lo_tp, name) - getattr(lo_tm, name)) / (2 * h_t)
            dx = (getattr(lo_xp, name) - getattr(lo_xm, name)) / (2 * h_x)
            entry[f"sup_dt_{name}"] = float(np.max(np.abs(dt[ok]), initial=0.0))
            entry[f"sup_dx_{name}"] = float(np.max(np.abs(dx[ok]), initial=0.0))
        band_sups.append(entry)

    sups = np.array([max(e["sup_b1"], e["sup_b2"], e["sup_c"]) for e in band_sups])
    if sups.size >= 2:
        peak = int(np.argmax(sups))
        if peak == len(sups) - 1:
            trend = "growing"
        elif sups[-1] <= 0.5 * sups[peak]:
            trend = f"decaying beyond band {band_sups[peak]['band']}"
        else:
            trend = "mixed"
    else:
        trend = "single band"

    # (ii) dyadic modulus diagnostics of l via the banded window profile;
    # the witness window is the last run of `dyadic_count` consecutive levels
    # on which mu(l,tau)/mu(tau) is non-increasing while mu(l,tau)/tau grows
    wprof = window_oscillation_profile(field.cutoffs)
    taus = dyadic_ladder(plan)
    dyadic = []
    for tau in taus:
        osc = oscillation_at_scale_banded(plan, wprof, tau)
        dyadic.append({"tau": tau, "mu_l": osc,
                       "mu_ratio": osc / float(eval_modulus(plan.mu, tau)),
                       "lip_ratio": osc / tau})
    mu_ratios = [d["mu_ratio"] for d in dyadic]
    selected = []
    mu_noninc = lip_inc = False
    for start in range(len(dyadic) - dyadic_count, -1, -1):
        win = dyadic[start:start + dyadic_count]
        wr = [d["mu_ratio"] for d in win]
        wl = [d["lip_ratio"] for d in win]
        if (all(b <= a * (1.0 + 5e-3) for a, b in zip(wr, wr[1:]))
                and all(b > a for a, b in zip(wl, wl[1:]))):
            selected = [d["tau"] for d in win]
            mu_noninc = lip_inc = True
            break

    # (iii) flatness at the terminal time: log10 |u| at band starts vs -q_n
    flat_bands = sorted(set(np.unique(np.geomspace(1, plan.N, 16).astype(int))))
    flatness = []
    for n in flat_bands:
        vals = field.eval_band(np.array([n]), np.array([0.0]),
                               np.array([0.0]), np.array([0.0]))
        measured = float((np.log(np.abs(vals.u)) - vals.gauge_exponent)[0] / math.log(10.0))
        flatness.append({"band": int(n), "log10_u_at_band_start": measured,
                         "minus_q_n_log10": float(-plan.q[n - 1] / math.log(10.0))})

    return RegularityReport(
        band_sups=band_sups, sup_trend=trend, dyadic=dyadic,
        selected_window=selected,
        mu_ratio_sup=float(max(mu_ratios)) if mu_ratios else 0.0,
        mu_ratio_nonincreasing=bool(mu_noninc),
        lip_ratio_increasing=bool(lip_inc),
        levels_used=len(dyadic), flatness=flatness, sign_variant=sign_variant)
