import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import _kernels
from sdcalc import taylor as tm
from sdcalc.taylor import TaylorSpace

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_partials_of_known_function():
    sp = TaylorSpace.get(2, 4)
    x, y = sp.variable(0, 0.3), sp.variable(1, -0.7)
    f = tm.sin(x) * tm.exp(y)
    assert f.value == pytest.approx(math.sin(0.3) * math.exp(-0.7))
    assert f.partial((1, 0)) == pytest.approx(math.cos(0.3) * math.exp(-0.7))
    assert f.partial((2, 1)) == pytest.approx(-math.sin(0.3) * math.exp(-0.7))
    assert f.partial((0, 4)) == pytest.approx(math.sin(0.3) * math.exp(-0.7))


def test_deriv_lowers_order():
    sp = TaylorSpace.get(1, 5)
    x = sp.variable(0, 1.2)
    f = x ** 5
    d = f.deriv(0)
    assert d.value == pytest.approx(5 * 1.2 ** 4)
    assert d.deriv(0).deriv(0).deriv(0).deriv(0).value == pytest.approx(120.0)


def test_division_and_sqrt():
    sp = TaylorSpace.get(1, 3)
    x = sp.variable(0, 2.0)
    g = 1.0 / (1.0 + x * x)
    assert g.partial((1,)) == pytest.approx(-2 * 2.0 / 25.0)
    r = tm.sqrt(x)
    assert r.partial((2,)) == pytest.approx(-0.25 * 2.0 ** -1.5)


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite)
def test_product_rule(a, b, x0):
    sp = TaylorSpace.get(1, 3)
    x = sp.variable(0, x0)
    f = tm.sin(a * x) + x
    g = tm.cos(b * x) * x
    lhs = (f * g).deriv(0).value
    rhs = (f.deriv(0) * g + f * g.deriv(0)).value
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(finite, finite)
def test_chain_rule_two_variables(x0, y0):
    sp = TaylorSpace.get(2, 3)
    x, y = sp.variable(0, x0), sp.variable(1, y0)
    u = x * y + y
    f = tm.exp(tm.sin(u))
    expected = math.exp(math.sin(x0 * y0 + y0)) * math.cos(x0 * y0 + y0) * y0
    assert f.partial((1, 0)) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(finite, finite)
def test_mixed_partials_commute(x0, y0):
    sp = TaylorSpace.get(2, 4)
    x, y = sp.variable(0, x0), sp.variable(1, y0)
    f = tm.cos(x * y * y) + x ** 3 * y
    assert f.deriv(0).deriv(1).value == pytest.approx(f.deriv(1).deriv(0).value, abs=1e-12)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree():
    rng = np.random.default_rng(5)
    sp = TaylorSpace.get(3, 5)
    pts = rng.uniform(-1, 1, (3, 64))
    prev = _kernels.backend()
    results = {}
    try:
        for name in ("numpy", "numba"):
            _kernels.set_backend(name)
            x, y, z = (sp.variable(k, pts[k]) for k in range(3))
            f = tm.exp(x * y) / (2.0 + tm.sin(z)) + (x + y + z) ** 4
            results[name] = f.c.copy()
    finally:
        _kernels.set_backend(prev)
    np.testing.assert_allclose(results["numpy"], results["numba"], rtol=1e-13, atol=1e-13)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")
