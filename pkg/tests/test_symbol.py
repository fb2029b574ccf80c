"""Reduced symbols, ellipticity constants, and the mollification scheme."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import parabolab as pl
from parabolab.errors import DomainError, EllipticityViolationError
from parabolab.symbol import (CoefficientPath, MollifiedPath, TimePath, bump,
                              bump_derivative, bump_derivative_l1,
                              two_sided_bound_holds)


@pytest.fixture(scope="module")
def cross_path():
    return CoefficientPath(n=2, m=1, T=1.0,
                           coeffs={(1, 1): TimePath("const", value=3.0)})


@pytest.fixture(scope="module")
def sqrt_path():
    return CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("expr", expr="sqrt(t)")})


# -- reduced symbols ------------------------------------------------------

def test_rho_heat_principal(heat):
    for t in (0.0, 0.3, 1.0):
        for xi in ([1.0], [-2.5], [7.0]):
            assert pl.rho_k(heat, t, xi, 2) == pytest.approx(1.0, rel=1e-15)


def test_rho_cross_term(cross_path):
    # (-1)^2 * 3 * xi1 xi2 / |xi|^2 at xi=(1,1) is 3/2
    assert pl.rho_k(cross_path, 0.1, [1.0, 1.0], 2) == pytest.approx(1.5, rel=1e-14)


def test_rho_empty_order_is_zero(cross_path):
    assert pl.rho_k(cross_path, 0.1, [1.0, 1.0], 1) == 0.0


def test_rho_errors(heat):
    with pytest.raises(DomainError):
        pl.rho_k(heat, 0.1, [0.0], 2)
    with pytest.raises(DomainError):
        pl.rho_k(heat, 0.1, [1.0], 3)


def test_rho_homogeneous_degree_zero(cross_path):
    rng = np.random.default_rng(2)
    for _ in range(25):
        xi = rng.normal(size=2)
        if np.linalg.norm(xi) < 1e-3:
            continue
        t = float(rng.uniform(0, 1))
        k = int(rng.integers(0, 3))
        base = pl.rho_k(cross_path, t, xi, k)
        for lam in (0.5, 2.0, 10.0):
            assert pl.rho_k(cross_path, t, lam * xi, k) == pytest.approx(
                base, rel=1e-12, abs=1e-12)


def test_sigma_heat(heat):
    assert pl.sigma(heat, 0.2, [2.0]) == pytest.approx(4.0, rel=1e-15)


def test_sigma_with_zero_order():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("const", value=1.0),
                                   (0,): TimePath("const", value=5.0)})
    assert pl.sigma(path, 0.1, [1.0]) == pytest.approx(6.0, rel=1e-15)
    # at xi = 0 only the zero-order coefficient survives
    assert pl.sigma(path, 0.1, [0.0]) == pytest.approx(5.0, rel=1e-15)


def test_sigma_consistent_with_rho_sum(cross_path):
    rng = np.random.default_rng(3)
    for _ in range(25):
        xi = rng.normal(size=2)
        r = np.linalg.norm(xi)
        if r < 1e-3:
            continue
        t = float(rng.uniform(0, 1))
        total = sum(pl.rho_k(cross_path, t, xi, k) * r ** k for k in range(3))
        assert pl.sigma(cross_path, t, xi) == pytest.approx(total, rel=1e-12,
                                                            abs=1e-12)


# -- ellipticity ----------------------------------------------------------

def test_ellipticity_heat(heat):
    data = pl.ellipticity_constants(heat)
    assert data.Lambda == 1.0
    assert data.N0 == 1.0
    assert data.Lambda0 == 2.0


def test_ellipticity_with_zero_order():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("const", value=1.0),
                                   (0,): TimePath("const", value=1.0)})
    data = pl.ellipticity_constants(path)
    # smallest radius with 1 <= R^2/2, up to the geometric grid step
    grid_ratio = 10.0 ** (6.0 / 240.0)
    assert math.sqrt(2.0) <= data.N0 <= math.sqrt(2.0) * grid_ratio


def test_ellipticity_violation():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("const", value=-1.0)})
    with pytest.raises(EllipticityViolationError) as exc:
        pl.ellipticity_constants(path)
    assert exc.value.witness["rho_2m"] == -1.0


def test_h2_certificate_random_samples():
    path = CoefficientPath(n=2, m=1, T=1.0,
                           coeffs={(2, 0): TimePath("expr", expr="1 + 0.3*sin(6*t)"),
                                   (0, 2): TimePath("const", value=1.0),
                                   (1, 0): TimePath("const", value=0.5),
                                   (0, 0): TimePath("expr", expr="0.5*t")})
    data = pl.ellipticity_constants(path)
    rng = np.random.default_rng(4)
    for _ in range(10 ** 4):
        t = float(rng.uniform(0, 1))
        r = float(rng.uniform(data.N0, 50.0))
        ang = float(rng.uniform(0, 2 * np.pi))
        xi = [r * math.cos(ang), r * math.sin(ang)]
        assert two_sided_bound_holds(path, data, t, xi)


# -- mollifier kernel -----------------------------------------------------

def test_bump_unit_mass_and_support():
    mass, _ = quad(bump, -0.5, 0.5, epsabs=1e-14, epsrel=1e-13)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert bump(0.5) == 0.0
    assert bump(-0.5) == 0.0
    assert bump(0.7) == 0.0
    assert bump(0.0) > 0.0


def test_bump_derivative_matches_fd():
    for s in (-0.3, -0.1, 0.2, 0.4):
        h = 1e-6
        fd = (bump(s + h) - bump(s - h)) / (2 * h)
        assert bump_derivative(s) == pytest.approx(fd, rel=1e-8)


def test_bump_derivative_l1_closed_form():
    # the bump is unimodal, so integral |phi'| = 2 phi(0)
    ref, _ = quad(lambda s: abs(bump_derivative(s)), -0.5, 0.5,
                  epsabs=1e-13, epsrel=1e-12)
    assert bump_derivative_l1() == pytest.approx(ref, rel=1e-9)


# -- mollification --------------------------------------------------------

def test_mollify_constant_exact():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("const", value=7.0)})
    for t in (0.0, 0.4, 1.0):
        got = pl.mollify_path(path, 2, 0.3, t, [1.0])
        assert got == pytest.approx(7.0, abs=1e-12 * 7.0)


def test_mollify_linear_interior_odd_moment():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("expr", expr="t")})
    got = pl.mollify_path(path, 2, 0.01, 0.5, [1.0])
    assert got == pytest.approx(0.5, abs=1e-10)


def test_mollify_sqrt_at_origin_support_bound(sqrt_path):
    eps = 0.01
    got = pl.mollify_path(sqrt_path, 2, eps, 0.0, [1.0])
    assert 0.0 < got <= math.sqrt(eps / 2.0)
    # independent brute-force quadrature oracle
    ref, _ = quad(lambda y: math.sqrt(max(-eps * y, 0.0)) * bump(y), -0.5, 0.5,
                  points=[0.0], epsabs=1e-13, epsrel=1e-12)
    assert got == pytest.approx(ref, rel=1e-8)


def test_mollify_rejects_bad_epsilon(sqrt_path):
    with pytest.raises(DomainError):
        MollifiedPath(sqrt_path, 2, 0.0)


def test_epsilon_schedule():
    assert pl.epsilon_schedule([10.0, 0.0], 2.0, 2) == pytest.approx(0.01)
    assert pl.epsilon_schedule([1.0], 2.0, 3) == pytest.approx(0.125)
    assert pl.epsilon_schedule([123.0], 5.0, 0) == 1.0
    with pytest.raises(DomainError):
        pl.epsilon_schedule([1.0], 0.5, 1)


# -- mollifier bounds -----------------------------------------------------

def test_bounds_constant_path():
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("const", value=2.0)})
    rep = pl.mollifier_bounds_check(path, pl.ModulusSpec.power(0.5),
                                    eps_grid=[0.1, 0.01], nt=11)
    assert rep.r1 <= 1e-12
    assert rep.r2 <= 1e-12


def test_bounds_sqrt_path(sqrt_path, mu_sqrt):
    rep = pl.mollifier_bounds_check(sqrt_path, mu_sqrt,
                                    eps_grid=[1e-1, 1e-3, 1e-5], nt=21)
    assert rep.K == pytest.approx(1.0, rel=1e-6)
    assert rep.r1 <= rep.K + 1e-9
    assert rep.r2 <= rep.K * rep.bump_derivative_l1 + 1e-9
    assert rep.passed


def test_bounds_lipschitz_path():
    L = 2.0
    path = CoefficientPath(n=1, m=1, T=1.0,
                           coeffs={(2,): TimePath("expr", expr="2*t")})
    rep = pl.mollifier_bounds_check(path, pl.ModulusSpec.linear(),
                                    eps_grid=[1e-2, 1e-3], nt=21)
    assert rep.K == pytest.approx(L, rel=0.05)
    assert rep.r1 <= L * 1.05
    assert rep.passed


# -- serialization --------------------------------------------------------

def test_coefficient_path_json_roundtrip(cross_path):
    d = cross_path.to_dict()
    again = CoefficientPath.from_dict(d)
    assert again.n == 2 and again.m == 1
    assert pl.sigma(again, 0.3, [1.0, 2.0]) == pl.sigma(cross_path, 0.3, [1.0, 2.0])


def test_table_path_breakpoints_used():
    path = CoefficientPath(
        n=1, m=1, T=1.0,
        coeffs={(2,): TimePath("table", ts=[0.0, 0.5, 1.0], values=[1.0, 2.0, 1.0])})
    got = pl.mollify_path(path, 2, 0.2, 0.5, [1.0])
    ref, _ = quad(lambda y: np.interp(0.5 - 0.2 * y, [0.0, 0.5, 1.0], [1.0, 2.0, 1.0])
                  * bump(y), -0.5, 0.5, points=[0.0], epsabs=1e-13, epsrel=1e-12)
    assert got == pytest.approx(ref, rel=1e-9)
