import numpy as np
import pytest

import parabolab as pl


@pytest.fixture(scope="session")
def cutoffs():
    return pl.build_cutoffs(order=4)


@pytest.fixture(scope="session")
def mu_linear():
    return pl.ModulusSpec.linear()


@pytest.fixture(scope="session")
def mu_sqrt():
    return pl.ModulusSpec.power(0.5)


@pytest.fixture(scope="session")
def mu_loglinear():
    return pl.ModulusSpec.loglinear()


@pytest.fixture(scope="session")
def weight_linear(mu_linear):
    return pl.build_weight(mu_linear)


@pytest.fixture(scope="session")
def weight_sqrt(mu_sqrt):
    return pl.build_weight(mu_sqrt)


@pytest.fixture(scope="session")
def weight_loglinear(mu_loglinear):
    return pl.build_weight(mu_loglinear)


@pytest.fixture(scope="session")
def heat():
    return pl.heat_path()


@pytest.fixture(scope="session")
def plan50(mu_sqrt, cutoffs):
    return pl.build_sequences(mu_sqrt, "auto", 50, 1, cutoffs)


@pytest.fixture(scope="session")
def field50(plan50, cutoffs):
    return pl.build_field(plan50, cutoffs)


def seeded_band_points(plan, rng, count):
    """Random in-band sample points (t, x1, x2) for a plan."""
    bands = rng.integers(1, plan.N + 1, count)
    theta = rng.uniform(0.0, 1.0, count)
    t = plan.boundaries[bands - 1] + theta * plan.r[bands - 1]
    x1 = rng.uniform(0.0, 2.0 * np.pi, count)
    x2 = rng.uniform(0.0, 2.0 * np.pi, count)
    return t, x1, x2
