import numpy as np
import pytest

from sdcalc.geom_core import builtin_curve, builtin_surface


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sphere2():
    return builtin_surface("sphere", R=2.0)


@pytest.fixture(scope="session")
def torus():
    return builtin_surface("torus")


@pytest.fixture(scope="session")
def ellipsoid():
    return builtin_surface("ellipsoid")


@pytest.fixture(scope="session")
def cylinder():
    return builtin_surface("cylinder")


@pytest.fixture(scope="session")
def plane():
    return builtin_surface("plane")


@pytest.fixture(scope="session")
def helix():
    return builtin_curve("helix")


@pytest.fixture(scope="session")
def paper_curve():
    return builtin_curve("paper")


def surface_points(chart, n, rng, sigma=0.3, margin=0.15):
    """Parameter points away from domain ends and poles, with a fixed normal offset."""
    s = np.empty((n, 2))
    for k, (lo, hi) in enumerate(chart.domain):
        m = 0.0 if chart.periodic[k] else margin * (hi - lo)
        s[:, k] = rng.uniform(lo + m, hi - m, n)
    return s, np.full(n, sigma)
