"""Carleman weight functions.

The weight Phi solves Phi'' = mu(1/Phi') * (Phi')^2 with Phi(0) = 0 and
Phi'(0) = 1.  Separation of variables gives the explicit solution

    eta(t)   = integral_{1/t}^{1} ds / mu(s)          (t >= 1)
    Phi'     = eta^{-1}
    Phi(tau) = integral_0^tau eta^{-1}(r) dr

so the whole construction reduces to monotone quadrature tables plus
inversion; no ODE stepper is involved, which keeps the blow-up end well
conditioned.  Everything is tabulated on a geometric grid in t, i.e. a
uniform grid in x = log t, where both integrals become

    eta(e^x) = integral_0^x e^{-u} / mu(e^{-u}) du
    Phi(tau) = integral_0^{X(tau)} du / mu(e^{-u}),   X(tau) = log eta^{-1}(tau).

The domain of Phi is [0, inf) exactly when mu satisfies the Osgood
condition; otherwise it is [0, eta_sup) with eta_sup = integral_0^1 ds/mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._quad import adaptive_quad, gauss_rule
from .errors import BlowUpExceededError, DomainError, ValidationError
from .modulus import (ModulusSpec, OsgoodVerdict, classify_osgood, eval_modulus,
                      osgood_integral, validate_modulus)

_X_CAP = 600.0  # log of the largest slope we ever tabulate (Phi' <= e^600)


def eta(mu: ModulusSpec, t: float) -> float:
    """The reciprocal-modulus integral from 1/t to 1; eta(1) = 0 exactly."""
    if t < 1.0:
        raise DomainError("eta is defined for t >= 1")
    if t == 1.0:
        return 0.0
    return osgood_integral(mu, 1.0 / t)


def _estimate_eta_sup(mu: ModulusSpec):
    """Cauchy-tail estimate of integral_0^1 ds/mu for a non-Osgood modulus.

    Halves the lower endpoint, extrapolating the remaining tail from the
    geometric decay of the increments; stops once the extrapolated tail is
    below 1e-7 of the running value.  Returns (eta_sup, truncated) where
    truncated marks tables whose increments stall (piecewise-linear floor)
    before the target is met; eta_sup is then the stalled running value.
    """
    eps = 0.5
    total = osgood_integral(mu, eps)
    prev_inc = None
    stall = 0
    for _ in range(600):
        new_eps = 0.5 * eps
        if mu.kind == "table":
            from .modulus import _reciprocal_integral_table
            inc = _reciprocal_integral_table(mu, new_eps, eps)
        else:
            inc = adaptive_quad(
                lambda x: math.exp(-x) / eval_modulus(mu, math.exp(-x)),
                -math.log(eps), -math.log(new_eps))
        total += inc
        eps = new_eps
        if prev_inc is not None and prev_inc > 0.0:
            ratio = inc / prev_inc
            if ratio < 0.999:
                tail = inc * ratio / (1.0 - ratio)
                if tail <= 1e-7 * total:
                    return total + tail, False
                stall = 0
            else:
                stall += 1
                if stall >= 3 and inc < 1e-6 * total:
                    return total, True
        prev_inc = inc
    return total, True


@dataclass
class WeightFunction:
    """Tabulated Carleman weight with exact-by-construction curvature.

    Immutable in value; the panel tables extend themselves on demand when
    evaluation walks past the current grid.  ``blow_up_time`` is finite
    exactly when the modulus classifies non-Osgood, in which case the object
    is flagged not admissible for Carleman use (the estimate needs the whole
    half line) but still exposed for the dichotomy diagnostics.
    """

    mu: ModulusSpec
    verdict: OsgoodVerdict
    eta_sup: float
    blow_up_time: Optional[float]
    tail_truncated: bool
    dx: float
    x_nodes: np.ndarray = field(repr=False)
    eta_nodes: np.ndarray = field(repr=False)
    phi_nodes: np.ndarray = field(repr=False)

    @property
    def admissible_for_carleman(self) -> bool:
        return self.blow_up_time is None

    # -- panel machinery ---------------------------------------------------

    def _kinks_in(self, lo: float, hi: float) -> list:
        if self.mu.kind != "table":
            return []
        out = []
        for tau_node, _ in self.mu.table:
            if tau_node <= 0.0:
                continue
            x = -math.log(tau_node)
            if lo < x < hi:
                out.append(x)
        return sorted(out)

    def _integrand_values(self, x: np.ndarray):
        s = np.exp(-x)
        m = eval_modulus(self.mu, s)
        return s / m, 1.0 / m

    def _append_panels(self, x_hi: float) -> None:
        x_lo = float(self.x_nodes[-1])
        if x_hi <= x_lo:
            return
        n_new = max(1, int(math.ceil((x_hi - x_lo) / self.dx)))
        xs = np.linspace(x_lo, x_hi, n_new + 1)[1:]
        xs = np.unique(np.concatenate([xs, self._kinks_in(x_lo, x_hi)]))
        gx, gw = gauss_rule(16)
        lo = np.concatenate([[x_lo], xs[:-1]])
        hi = xs
        h = 0.5 * (hi - lo)
        mids = 0.5 * (hi + lo)
        nodes = mids[:, None] + h[:, None] * gx[None, :]
        f_eta, f_phi = self._integrand_values(nodes.ravel())
        f_eta = f_eta.reshape(nodes.shape)
        f_phi = f_phi.reshape(nodes.shape)
        inc_eta = h * (f_eta @ gw)
        inc_phi = h * (f_phi @ gw)
        self.x_nodes = np.concatenate([self.x_nodes, xs])
        self.eta_nodes = np.concatenate([self.eta_nodes,
                                         self.eta_nodes[-1] + np.cumsum(inc_eta)])
        self.phi_nodes = np.concatenate([self.phi_nodes,
                                         self.phi_nodes[-1] + np.cumsum(inc_phi)])

    def _ensure_x(self, x: float) -> None:
        if x > self.x_nodes[-1]:
            if x > _X_CAP:
                raise DomainError(
                    f"slope table capped at log t = {_X_CAP}; requested {x:.3g}")
            self._append_panels(min(_X_CAP, max(x * 1.05, self.x_nodes[-1] + 32 * self.dx)))

    def _ensure_eta(self, r: float) -> None:
        # extend until the eta table covers level r
        while self.eta_nodes[-1] < r:
            if self.x_nodes[-1] >= _X_CAP:
                raise DomainError(
                    f"weight slope exceeds e^{_X_CAP:.0f} before reaching eta = {r:.6g}")
            self._append_panels(min(_X_CAP, self.x_nodes[-1] * 2.0 + 16.0))

    def _partial(self, x: float, which: str) -> float:
        """Cumulative integral at arbitrary x via table node + partial panel."""
        i = int(np.searchsorted(self.x_nodes, x, side="right")) - 1
        i = max(0, min(i, len(self.x_nodes) - 1))
        x0 = float(self.x_nodes[i])
        base_eta = float(self.eta_nodes[i])
        base_phi = float(self.phi_nodes[i])
        if x == x0:
            return base_eta if which == "eta" else base_phi
        gx, gw = gauss_rule(16)
        h = 0.5 * (x - x0)
        nodes = 0.5 * (x + x0) + h * gx
        f_eta, f_phi = self._integrand_values(nodes)
        if which == "eta":
            return base_eta + h * float(np.dot(gw, f_eta))
        return base_phi + h * float(np.dot(gw, f_phi))

    # -- public evaluation -------------------------------------------------

    def eta_at(self, t: float) -> float:
        """eta(t) read off the panel tables (matches :func:`eta` to 1e-10)."""
        if t < 1.0:
            raise DomainError("eta is defined for t >= 1")
        if t == 1.0:
            return 0.0
        x = math.log(t)
        self._ensure_x(x)
        return self._partial(x, "eta")

    def _eta_slope_x(self, x: np.ndarray) -> np.ndarray:
        s = np.exp(-np.asarray(x, dtype=float))
        return s / eval_modulus(self.mu, s)

    def eta_inverse_x(self, r: np.ndarray) -> np.ndarray:
        """Solve eta(e^x) = r for x (vectorized safeguarded Newton)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0.0):
            raise DomainError("eta levels must be nonnegative")
        if self.blow_up_time is not None and np.any(r >= self.eta_sup):
            raise BlowUpExceededError(
                f"eta level {float(np.max(r)):.9g} is at or beyond the blow-up level "
                f"{self.eta_sup:.9g}", self.eta_sup)
        self._ensure_eta(float(np.max(r, initial=0.0)))

        idx = np.clip(np.searchsorted(self.eta_nodes, r, side="right") - 1,
                      0, len(self.x_nodes) - 2)
        x_lo = self.x_nodes[idx].copy()
        x_hi = self.x_nodes[idx + 1].copy()
        e_lo = self.eta_nodes[idx]
        e_hi = self.eta_nodes[idx + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(e_hi > e_lo, (r - e_lo) / (e_hi - e_lo), 0.5)
        x = x_lo + frac * (x_hi - x_lo)

        base = self.eta_nodes[idx]
        gx, gw = gauss_rule(16)
        for _ in range(60):
            h = 0.5 * (x - x_lo)
            nodes = 0.5 * (x + x_lo)[:, None] + h[:, None] * gx[None, :]
            vals = self._eta_slope_x(nodes.ravel()).reshape(nodes.shape)
            eta_x = base + h * (vals @ gw)
            resid = eta_x - r
            slope = self._eta_slope_x(x)
            step = np.where(slope > 0.0, resid / np.maximum(slope, 1e-300), 0.0)
            x_new = x - step
            # bisection safeguard
            bad = (x_new <= x_lo) | (x_new >= x_hi) | ~np.isfinite(x_new)
            x_new = np.where(bad, np.where(resid > 0, 0.5 * (x + x_lo), 0.5 * (x + x_hi)), x_new)
            hi_mask = resid > 0
            x_hi = np.where(hi_mask, x, x_hi)
            done = np.abs(x_new - x) <= 1e-14 * (1.0 + np.abs(x))
            x = x_new
            if np.all(done):
                break
        return x

    def eta_inverse(self, r: float) -> float:
        """The unique t >= 1 with eta(t) = r."""
        if r == 0.0:
            return 1.0
        return float(np.exp(self.eta_inverse_x(np.array([r]))[0]))

    def eval_vec(self, tau: np.ndarray):
        """(Phi, Phi', Phi'') at an array of tau >= 0."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau < 0.0):
            raise DomainError("weights are defined for tau >= 0")
        if self.blow_up_time is not None and np.any(tau >= self.blow_up_time):
            raise BlowUpExceededError(
                f"tau = {float(np.max(tau)):.9g} is at or beyond the blow-up time "
                f"{self.blow_up_time:.9g}", self.eta_sup)
        x = self.eta_inverse_x(tau)
        dphi = np.exp(x)
        phi = np.array([self._partial(float(xx), "phi") for xx in x])
        ddphi = eval_modulus(self.mu, np.exp(-x)) * dphi * dphi
        zero = tau == 0.0
        if np.any(zero):
            phi[zero] = 0.0
            dphi[zero] = 1.0
        return phi, dphi, ddphi

    def eval(self, tau: float):
        phi, dphi, ddphi = self.eval_vec(np.array([float(tau)]))
        return float(phi[0]), float(dphi[0]), float(ddphi[0])

    def usable_tau(self, safety: float = 0.98) -> float:
        """Largest tau safe for evaluation (short of blow-up or slope cap)."""
        if self.blow_up_time is not None:
            return safety * self.blow_up_time
        self._append_panels(_X_CAP)
        return safety * float(self.eta_nodes[-1])


def weight_eval(W: WeightFunction, tau: float):
    """(Phi, Phi', Phi'') at tau; errors past a finite blow-up time."""
    return W.eval(tau)


def eta_inverse(W: WeightFunction, r: float) -> float:
    """The unique t >= 1 with eta(t) = r; errors at or past eta_sup."""
    return W.eta_inverse(r)


def build_weight(mu: ModulusSpec, n_panels: int = 2000, t_max: float = 1e9) -> WeightFunction:
    """Construct the weight for a validated modulus.

    The finite/infinite domain decision follows the Osgood classification;
    for non-Osgood moduli the blow-up time is the Cauchy-tail estimate of
    integral_0^1 ds/mu.
    """
    report = validate_modulus(mu)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise ValidationError(f"modulus failed validation: {', '.join(failed)}")

    verdict = classify_osgood(mu)
    if verdict.classification == "non_osgood":
        eta_sup, truncated = _estimate_eta_sup(mu)
        blow_up: Optional[float] = eta_sup
    else:
        # 'undetermined' tables are treated as Osgood (no blow-up claimed);
        # verify_weight surfaces the uncertainty
        eta_sup, truncated = math.inf, False
        blow_up = None

    x_max = math.log(t_max)
    W = WeightFunction(
        mu=mu, verdict=verdict, eta_sup=eta_sup, blow_up_time=blow_up,
        tail_truncated=truncated, dx=x_max / n_panels,
        x_nodes=np.array([0.0]), eta_nodes=np.array([0.0]), phi_nodes=np.array([0.0]),
    )
    W._append_panels(x_max)
    return W


@dataclass
class WeightReport:
    """Verification summary for a built weight."""

    family: dict
    grid_size: int
    max_ode_residual_rel: float
    curvature_threshold_tau: Optional[float]
    slope_monotone: bool
    curvature_monotone: bool
    eta_roundtrip_max_err: float
    blow_up_time: Optional[float]
    osgood_class: str
    dichotomy: str

    @property
    def passed(self) -> bool:
        return (self.max_ode_residual_rel <= 1e-6 and self.slope_monotone
                and self.dichotomy == "consistent")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "grid_size": self.grid_size,
            "max_ode_residual_rel": self.max_ode_residual_rel,
            "curvature_threshold_tau": self.curvature_threshold_tau,
            "slope_monotone": self.slope_monotone,
            "curvature_monotone": self.curvature_monotone,
            "eta_roundtrip_max_err": self.eta_roundtrip_max_err,
            "blow_up_time": self.blow_up_time,
            "osgood_class": self.osgood_class,
            "dichotomy": self.dichotomy,
            "passed": self.passed,
        }


def verify_weight(W: WeightFunction, grid=None) -> WeightReport:
    """Check the ODE residual (curvature vs an independent finite difference
    of the slope), slope monotonicity, the curvature >= 1 threshold, the
    eta round trip, and blow-up/Osgood consistency."""
    if grid is None:
        top = 5.0 if W.blow_up_time is None else 0.98 * W.blow_up_time
        grid = np.linspace(1e-3 * top, top, 200)
    grid = np.asarray(grid, dtype=float)

    if grid.size == 0:
        return WeightReport(W.mu.to_dict(), 0, 0.0, None, True, True, 0.0,
                            W.blow_up_time,
                            W.verdict.classification, _dichotomy(W))

    phi, dphi, ddphi = W.eval_vec(grid)

    max_resid = 0.0
    for tau, curv in zip(grid, ddphi):
        headroom = (W.blow_up_time - tau) if W.blow_up_time is not None else (1.0 + tau)
        h = min(1e-4 * (1.0 + tau), 2e-4 * headroom)
        if tau - 2 * h <= 0.0:
            continue
        d_h = _slope_diff(W, tau, h)
        d_h2 = _slope_diff(W, tau, 0.5 * h)
        fd = (4.0 * d_h2 - d_h) / 3.0
        max_resid = max(max_resid, abs(fd - curv) / max(1.0, curv))

    # threshold after which curvature stays >= 1 on the grid
    below = ddphi < 1.0
    if not np.any(below):
        tau1 = float(grid[0])
    elif np.all(below):
        tau1 = None
    else:
        tau1 = float(grid[int(np.max(np.nonzero(below)[0])) + 1])

    roundtrip = float(np.max(np.abs([W.eta_at(t) - tau for tau, t in
                                     zip(grid, dphi) if t >= 1.0], )))

    return WeightReport(
        family=W.mu.to_dict(),
        grid_size=int(grid.size),
        max_ode_residual_rel=float(max_resid),
        curvature_threshold_tau=tau1,
        slope_monotone=bool(np.all(np.diff(dphi) >= 0.0)),
        curvature_monotone=bool(np.all(np.diff(ddphi) >= -1e-9 * np.maximum(1.0, ddphi[1:]))),
        eta_roundtrip_max_err=roundtrip,
        blow_up_time=W.blow_up_time,
        osgood_class=W.verdict.classification,
        dichotomy=_dichotomy(W),
    )


def _slope_diff(W: WeightFunction, tau: float, h: float) -> float:
    lo = W.eta_inverse(tau - h)
    hi = W.eta_inverse(tau + h)
    return (hi - lo) / (2.0 * h)


def _dichotomy(W: WeightFunction) -> str:
    cls = W.verdict.classification
    if cls == "undetermined":
        return "undetermined"
    finite = W.blow_up_time is not None
    return "consistent" if finite == (cls == "non_osgood") else "inconsistent"


def export_csv(W: WeightFunction, path, taus=None) -> None:
    """Write (tau, phi, dphi, d2phi) rows with 17 significant digits."""
    if taus is None:
        top = 5.0 if W.blow_up_time is None else min(5.0, 0.9 * W.blow_up_time)
        taus = np.round(np.arange(0.0, top + 1e-9, 0.01), 10)
    phi, dphi, ddphi = W.eval_vec(np.asarray(taus, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tau,phi,dphi,d2phi\n")
        for row in zip(taus, phi, dphi, ddphi):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
