"""The non-uniqueness construction: cutoffs, sequences, admissibility
conditions, and the band-gauged field with its algebraic identities."""

import math

import numpy as np
import pytest

import parabolab as pl
from parabolab.counterexample import (ModulusSpec, dyadic_ladder,
                                      oscillation_at_scale,
                                      oscillation_at_scale_banded,
                                      window_oscillation_profile)
from parabolab.errors import (DomainError, InadmissibleModulusError,
                              RepresentabilityError)
from conftest import seeded_band_points


# -- cutoffs ---------------------------------------------------------------

PLATEAUS = [
    ("A", [(0.1, 1.0), (0.2, 1.0), (0.25, 0.0), (0.9, 0.0), (-0.5, 1.0)]),
    ("B", [(-0.1, 0.0), (1.0 / 6.0, 1.0), (0.3, 1.0), (0.5, 1.0), (1.0, 0.0), (1.3, 0.0)]),
    ("C", [(0.0, 0.0), (0.25, 0.0), (1.0 / 3.0, 1.0), (0.8, 1.0)]),
    ("J", [(0.05, -2.0), (1.0 / 6.0, -2.0), (0.2, 2.0), (0.25, 2.0),
           (1.0 / 3.0, 2.0), (0.5, -2.0), (0.9, -2.0)]),
]


@pytest.mark.parametrize("name,points", PLATEAUS)
def test_cutoff_plateaus_exact(cutoffs, name, points):
    for s, want in points:
        assert cutoffs.eval(name, s)[0, 0] == want


def test_cutoff_ranges(cutoffs):
    grid = np.linspace(-0.2, 1.2, 4001)
    for name, lo, hi in [("A", 0, 1), ("B", 0, 1), ("C", 0, 1), ("J", -2, 2)]:
        vals = cutoffs.eval(name, grid)[0]
        assert np.all(vals >= lo - 1e-15) and np.all(vals <= hi + 1e-15)


def test_j_flat_at_band_ends(cutoffs):
    assert cutoffs.eval("J", 0.0, 1)[1, 0] == 0.0
    assert cutoffs.eval("J", 1.0, 1)[1, 0] == 0.0


def test_j_prime_sup_lower_bound(cutoffs):
    # J climbs 4 units over width 1/30: mean-value bound
    assert cutoffs.sup("J", 1) >= 120.0


def test_cutoff_derivatives_vs_mpmath(cutoffs):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30

    def step(u):
        u = mp.mpf(u)
        if u <= 0:
            return mp.mpf(0)
        if u >= 1:
            return mp.mpf(1)
        e = mp.e ** (-1 / u)
        f = mp.e ** (-1 / (1 - u))
        return e / (e + f)

    def J_ref(s):
        return -2 + 4 * step(30 * mp.mpf(s) - 5) * step(3 - 6 * mp.mpf(s))

    for s in (0.18, 0.21, 0.35, 0.45):
        derivs = cutoffs.eval("J", s, 3)
        for j in range(4):
            ref = float(mp.diff(J_ref, s, j)) if j else float(J_ref(s))
            assert derivs[j, 0] == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_cutoff_order_guard(cutoffs):
    with pytest.raises(DomainError):
        cutoffs.eval("A", 0.5, order=cutoffs.order + 1)


# -- sequences ---------------------------------------------------------------

def test_sequence_values_k0_10(cutoffs, mu_sqrt):
    plan = pl.build_sequences(mu_sqrt, 10, 50, 1, cutoffs)
    assert plan.r[0] == pytest.approx(11.0 ** -1.5, rel=1e-14)
    assert plan.z[0] == 1331.0
    assert plan.p[0] == pytest.approx((1728.0 - 1331.0) * 11.0 ** -1.5, rel=1e-14)
    assert plan.p[0] > 1.0
    assert plan.q[0] == 0.0
    assert plan.q[1] == pytest.approx(plan.z[1] * plan.r[0], rel=1e-14)


def test_sequence_tail_against_zeta(cutoffs, mu_sqrt):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    plan = pl.build_sequences(mu_sqrt, 10, 50, 1, cutoffs)
    # a_1 = -sum_{j>=11} j^{-3/2}, an exact zeta tail
    ref = -(mp.zeta(mp.mpf(3) / 2) - sum(mp.mpf(j) ** (-1.5) for j in range(1, 11)))
    assert plan.a[0] == pytest.approx(float(ref), rel=1e-10)


def test_sequences_reject_osgood(cutoffs, mu_linear):
    with pytest.raises(InadmissibleModulusError):
        pl.build_sequences(mu_linear, 10, 20, 1, cutoffs)


def test_sequences_monotone_structure(plan50):
    assert np.all(np.diff(plan50.a) > 0)
    assert np.all(plan50.a < 0) and np.all(plan50.a > -1)
    assert np.all(np.diff(plan50.z) > 0)
    assert np.all(plan50.p > 1)
    assert np.all(np.diff(plan50.q) > 0)


def test_k0_auto_binding(cutoffs, plan50):
    # smallest k0 satisfying the parabolicity bound at n = 1
    j_sup = cutoffs.sup("J", 1)
    target = 1.0 / (2.0 * j_sup)
    x = 1.0 + plan50.k0
    assert (3 * x * x + 3 * x + 1) / x ** 3 <= target
    x_prev = x - 1
    assert (3 * x_prev * x_prev + 3 * x_prev + 1) / x_prev ** 3 > target
    assert plan50.k0_auto
    assert "parabolicity" in plan50.binding_constraint


# -- conditions ---------------------------------------------------------------

def test_conditions_all_pass_auto(plan50, cutoffs):
    report = pl.check_conditions(plan50, cutoffs)
    assert report.passed
    for cid in ("4.1", "4.2", "4.3", "4.4", "4.5", "4.6", "4.7"):
        assert report[cid].passed, cid


def test_condition_45_fails_k0_1(cutoffs, mu_sqrt):
    plan = pl.build_sequences(mu_sqrt, 1, 50, 1, cutoffs)
    report = pl.check_conditions(plan, cutoffs)
    bad = report["4.5"]
    assert not bad.passed
    assert bad.witness["n"] == 1


def test_condition_44_log_probe_drop(plan50):
    # L(2) crashes below -1e3: q_2 = z_2 r_1 dominates everything
    from parabolab.counterexample import _log_probe
    L = _log_probe(plan50, -plan50.q[1:] + 2.0 * plan50.p, 1.0, 1.0, 1.0)
    assert L[1] < L[0]
    assert L[1] < -1e3


def test_condition_monotone_trend(plan50):
    from parabolab.counterexample import _log_probe
    for (al, be, ga) in [(0.5, 0.5, 0.5), (5.0, 5.0, 5.0), (1.0, 2.0, 5.0)]:
        L44 = _log_probe(plan50, -plan50.q[1:] + 2.0 * plan50.p, al, be, ga)
        L47 = _log_probe(plan50, -plan50.p, al, be, ga)
        assert np.all(np.diff(L44[2:]) < 0)
        assert np.all(np.diff(L47[2:]) < 0)


def test_condition_report_serializes(plan50, cutoffs):
    d = pl.check_conditions(plan50, cutoffs).to_dict()
    assert d["passed"] is True
    assert [c["id"] for c in d["conditions"]] == \
        ["4.1", "4.2", "4.3", "4.4", "4.5", "4.6", "4.7"]


# -- field -------------------------------------------------------------------

def test_terminal_time_zero(field50):
    sol = field50.eval_solution(1.0, 0.37, -2.1)
    assert sol.u == 0.0
    assert sol.du_dt == 0.0
    assert sol.du_dx1 == 0.0
    assert sol.band == -1


def test_first_band_start_is_one(field50):
    t0 = float(field50.plan.boundaries[0])
    sol = field50.eval_solution(t0, 0.0, 0.0, gauged=False)
    assert sol.u == 1.0


def test_head_region_gauged_form(field50):
    plan = field50.plan
    t = 0.5 * (1.0 + plan.a[0])
    sol = field50.eval_solution(t, 0.2, 5.0)
    k1 = plan.z[0] ** 0.5
    assert sol.band == 0
    assert sol.u == pytest.approx(math.cos(k1 * 0.2), rel=1e-12)
    assert sol.du_dt == pytest.approx(-plan.z[0] * math.cos(k1 * 0.2), rel=1e-12)
    assert sol.du_dx2 == 0.0


def test_band_boundary_continuity_in_gauge(field50):
    plan = field50.plan
    x1, x2 = np.array([0.37]), np.array([1.21])
    for n in range(1, plan.N):
        left = field50.eval_band(np.array([n]), np.array([1.0]), x1, x2)
        right = field50.eval_band(np.array([n + 1]), np.array([0.0]), x1, x2)
        transfer = math.exp(plan.p[n - 1])
        for name in ("u", "du_dt", "du_dx1", "du_dx2", "d2m_dx1", "d2m_dx2"):
            lv = getattr(left, name)[0] * transfer
            rv = getattr(right, name)[0]
            scale = max(abs(lv), abs(rv))
            if scale > 1e-250:
                assert abs(lv - rv) <= 1e-12 * scale, (n, name)


def test_band_boundary_one_sided_derivatives(field50):
    # first and second one-sided finite differences of gauged u match across
    # every boundary once both sides sit in a common gauge
    plan = field50.plan
    x1, x2 = np.array([0.4]), np.array([0.9])
    for n in (1, 7, 25, 49):
        z_l, z_r = plan.z[n - 1], plan.z[n]
        r_l, r_r = plan.r[n - 1], plan.r[n]
        # the common-gauge field decays like exp(-z r theta); step well
        # inside that scale, on exact dyadic offsets so the gauge-drift
        # exponent carries no rounding noise
        h_l = 2.0 ** math.floor(math.log2(4e-3 / (z_l * r_l)))
        h_r = 2.0 ** math.floor(math.log2(4e-3 / (z_r * r_r)))

        def left(j):
            th = 1.0 - j * h_l
            v = field50.eval_band(np.array([n]), np.array([th]), x1, x2)
            # undo the in-band gauge drift and move to the right-band gauge
            return float(v.u[0]) * math.exp(-z_l * (th - 1.0) * r_l + plan.p[n - 1])

        def right(j):
            th = j * h_r
            v = field50.eval_band(np.array([n + 1]), np.array([th]), x1, x2)
            return float(v.u[0]) * math.exp(-z_r * th * r_r)

        dl1 = (3 * left(0) - 4 * left(1) + left(2)) / (2 * h_l * r_l)
        dr1 = (-3 * right(0) + 4 * right(1) - right(2)) / (2 * h_r * r_r)
        scale = max(abs(dl1), abs(dr1), 1.0)
        assert abs(dl1 - dr1) <= 1e-6 * scale

        # one-sided second derivatives: 5-point stencil plus one Richardson
        # step to clear the rounding floor of the large gauge exponents
        def one_sided_d2(sample, delta):
            def stencil(step):
                return (35 * sample(0) - 104 * sample(step) + 114 * sample(2 * step)
                        - 56 * sample(3 * step) + 11 * sample(4 * step)) \
                    / (12 * (step * delta) ** 2)
            return (4.0 * stencil(1) - stencil(2)) / 3.0

        dl2 = one_sided_d2(left, h_l * r_l)
        dr2 = one_sided_d2(right, h_r * r_r)
        scale2 = max(abs(dl2), abs(dr2), 1.0)
        assert abs(dl2 - dr2) <= 1e-6 * scale2


def test_analytic_dt_matches_finite_difference(field50):
    plan = field50.plan
    rng = np.random.default_rng(21)
    for _ in range(40):
        n = int(rng.integers(1, plan.N + 1))
        theta0 = float(rng.uniform(0.1, 0.9))
        x1 = float(rng.uniform(0, 2 * np.pi))
        x2 = float(rng.uniform(0, 2 * np.pi))
        r, z, p = plan.r[n - 1], plan.z[n - 1], plan.p[n - 1]
        c = max(p * 240.0, 40.0)
        h = min(1e-3, 0.01 / c)

        def sample(j):
            th = theta0 + j * h
            v = field50.eval_band(np.array([n]), np.array([th]), np.array([x1]),
                                  np.array([x2]))
            return float(v.u[0]) * math.exp(-z * (th - theta0) * r)

        fd = (-sample(2) + 8 * sample(1) - 8 * sample(-1) + sample(-2)) / (12 * h * r)
        v0 = field50.eval_band(np.array([n]), np.array([theta0]), np.array([x1]),
                               np.array([x2]))
        ana = float(v0.du_dt[0])
        assert fd == pytest.approx(ana, rel=1e-6, abs=1e-9 * abs(ana) + 1e-12)


def test_residual_identity_seeded(field50):
    rng = np.random.default_rng(42)
    t, x1, x2 = seeded_band_points(field50.plan, rng, 10 ** 4)
    for sign in ("plus_l", "minus_l"):
        low = field50.eval_lower_order(t, x1, x2, sign_variant=sign)
        ok = ~low.degenerate & (np.abs(low.Lu) > 0)
        rel = np.abs(low.residual[ok]) / np.abs(low.Lu[ok])
        assert np.max(rel) <= 1e-9


def test_parabolicity_range(field50):
    rng = np.random.default_rng(9)
    t, x1, x2 = seeded_band_points(field50.plan, rng, 5000)
    low = field50.eval_lower_order(t, x1, x2)
    assert np.min(low.l) >= 0.5
    assert np.max(low.l) <= 1.5


def test_l_is_one_at_boundaries_and_head(field50):
    plan = field50.plan
    assert field50.coefficient_l(0.3) == 1.0
    assert field50.coefficient_l(1.0) == 1.0
    vals = field50.coefficient_l(plan.boundaries[:-1].copy())
    assert np.all(vals == 1.0)


def test_gauge_shift_invariance(field50):
    rng = np.random.default_rng(5)
    t, x1, x2 = seeded_band_points(field50.plan, rng, 400)
    base = field50.eval_lower_order(t, x1, x2)
    shifted = field50.eval_lower_order(t, x1, x2, gauge_shift=4.2)
    for name in ("l", "b1", "b2", "c"):
        a, b = getattr(base, name), getattr(shifted, name)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-300)
    rel0 = np.abs(base.residual) / np.maximum(np.abs(base.Lu), 1e-300)
    rel1 = np.abs(shifted.residual) / np.maximum(np.abs(shifted.Lu), 1e-300)
    assert np.max(np.abs(rel0 - rel1)) <= 1e-10


def test_absolute_mode_near_band_one(field50):
    plan = field50.plan
    t0 = float(plan.boundaries[0])
    sol_g = field50.eval_solution(t0, 0.3, 0.0, gauged=True)
    sol_a = field50.eval_solution(t0, 0.3, 0.0, gauged=False)
    assert sol_a.u == pytest.approx(
        sol_g.u * math.exp(-sol_g.gauge_exponent), rel=1e-12)


def test_absolute_mode_unrepresentable(field50):
    plan = field50.plan
    mid = float(plan.boundaries[2] * 0.5 + plan.boundaries[3] * 0.5)
    with pytest.raises(RepresentabilityError) as exc:
        field50.eval_solution(mid, 0.0, 0.0, gauged=False)
    assert abs(exc.value.log10_magnitude) > 300.0


def test_eval_beyond_computed_bands(field50):
    top = float(field50.plan.boundaries[-1])
    with pytest.raises(DomainError):
        field50.eval_solution(0.5 * (top + 1.0), 0.0, 0.0)
    with pytest.raises(DomainError):
        field50.eval_solution(1.2, 0.0, 0.0)


def test_degenerate_point_flagged(field50):
    low = field50.eval_lower_order(1.0, 0.5, 0.5)
    assert low.degenerate
    assert low.b1 == 0.0 and low.b2 == 0.0 and low.c == 0.0


def test_order_m2_field(cutoffs, mu_sqrt):
    plan = pl.build_sequences(mu_sqrt, "auto", 10, 2, cutoffs)
    field = pl.build_field(plan, cutoffs)
    rng = np.random.default_rng(14)
    t, x1, x2 = seeded_band_points(plan, rng, 2000)
    low = field.eval_lower_order(t, x1, x2)
    ok = ~low.degenerate & (np.abs(low.Lu) > 0)
    rel = np.abs(low.residual[ok]) / np.abs(low.Lu[ok])
    assert np.max(rel) <= 1e-9
    # wavenumbers obey k^(2m) = z
    k = plan.band_wavenumbers()
    assert np.allclose(k ** 4, plan.z, rtol=1e-12)


# -- regularity diagnostics ----------------------------------------------------

def test_oscillation_banded_matches_direct(field50, cutoffs):
    wprof = window_oscillation_profile(cutoffs)
    for tau in dyadic_ladder(field50.plan, depth=3):
        direct = oscillation_at_scale(field50, tau)
        banded = oscillation_at_scale_banded(field50.plan, wprof, tau)
        assert banded == pytest.approx(direct, rel=0.05)


def test_flatness_matches_band_offsets(field50):
    rep = pl.regularity_report(field50, n_theta=8, n_x=4)
    for entry in rep.flatness:
        assert entry["log10_u_at_band_start"] == pytest.approx(
            entry["minus_q_n_log10"], rel=1e-12, abs=1e-12)


def test_regularity_report_structure(field50):
    rep = pl.regularity_report(field50, n_theta=8, n_x=4)
    d = rep.to_dict()
    assert d["sign_variant"] == "plus_l"
    assert len(d["band_sups"]) >= 10
    assert all(e["sup_b1"] >= 0 for e in d["band_sups"])
    assert d["levels_used"] == len(d["dyadic"])
    assert isinstance(d["sharpness_exhibited"], bool)
