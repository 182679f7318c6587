import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import taylor as tm
from sdcalc.geom_core import (MAX_JET_ORDER, ChartError, DomainError, OrderError, builtin_curve,
                              builtin_surface, chart_jet, closure_surface, expression_surface,
                              fd_derivative, load_geometry)


def test_fd_derivative_examples():
    assert fd_derivative(math.sin, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert fd_derivative(lambda x: 3.0, 0.7) == 0.0
    assert fd_derivative(math.exp, 1.0, order=2) == pytest.approx(math.e, abs=1e-6)
    with pytest.raises(ValueError):
        fd_derivative(math.sin, 0.0, order=3)


def _fd_partial(chart, s, k, h=1e-5):
    e = np.zeros(2)
    e[k] = h
    return (chart.point(s + e) - chart.point(s - e)) / (2 * h)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 2.8), st.floats(0.0, 6.2))
def test_ellipsoid_jet_matches_fd(s1, s2):
    ch = builtin_surface("ellipsoid")
    s = np.array([s1, s2])
    jet = chart_jet(ch, s, 2)
    for k in range(2):
        fd = _fd_partial(ch, s, k)
        assert np.linalg.norm(jet[(k,)] - fd) / np.linalg.norm(fd) < 1e-6
    d = np.array([0.0, 1e-5])
    fd12 = (chart_jet(ch, s + d, 1)[(0,)] - chart_jet(ch, s - d, 1)[(0,)]) / 2e-5
    assert np.allclose(jet[(0, 1)], fd12, atol=1e-7)


def test_jet_key_symmetry_and_value():
    ch = builtin_surface("torus")
    jet = chart_jet(ch, [0.4, 1.1], 3)
    np.testing.assert_array_equal(jet[(0, 1, 1)], jet[(1, 0, 1)])
    np.testing.assert_allclose(jet.value, ch.point(np.array([0.4, 1.1])))


def test_plane_second_derivatives_vanish():
    jet = chart_jet(builtin_surface("plane"), [1.0, -2.0], 2)
    for key in [(0, 0), (0, 1), (1, 1)]:
        assert np.all(jet[key] == 0.0)


def test_time_derivative_of_parameter_expression():
    ch = builtin_surface("sphere", R="1+0.3*tau")
    assert ch.time_dependent
    jet = chart_jet(ch, [0.5, 0.2], 1, tau=0.4)
    p = jet.value
    np.testing.assert_allclose(jet[(2,)], 0.3 * p / (1 + 0.3 * 0.4), atol=1e-14)


def test_closure_chart_agrees_with_expression_chart():
    R = 1.5

    def f(s1, s2, tau):
        return (R * tm.cos(s1), R * tm.sin(s1) * tm.cos(s2), R * tm.sin(s1) * tm.sin(s2))

    a = closure_surface(f, [[0, math.pi], [0, 2 * math.pi]], periodic=(False, True))
    b = builtin_surface("sphere", R=R)
    ja, jb = chart_jet(a, [0.8, 2.0], 3), chart_jet(b, [0.8, 2.0], 3)
    for key in jb.keys():
        np.testing.assert_allclose(ja[key], jb[key], atol=1e-13)


def test_order_limits():
    ch = builtin_surface("sphere")
    chart_jet(ch, [0.5, 0.5], MAX_JET_ORDER)
    with pytest.raises(OrderError):
        chart_jet(ch, [0.5, 0.5], MAX_JET_ORDER + 1)
    with pytest.raises(OrderError):
        chart_jet(ch, [0.5, 0.5], 1)[(0, 0)]


def test_domain_checks():
    with pytest.raises(DomainError):
        chart_jet(builtin_surface("cylinder"), [0.0, 6.0], 1)
    chart_jet(builtin_surface("cylinder"), [12.0, 0.0], 1)  # periodic axis wraps


def test_load_geometry_forms(tmp_path):
    spec = {"kind": "surface", "builtin": {"name": "torus", "params": {"R": 3.0}}}
    ch = load_geometry(spec)
    assert ch.name == "torus" and ch.params["R"] == 3.0
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"kind": "curve", "builtin": "helix"}))
    assert load_geometry(str(path)).kind == "curve"
    g = load_geometry('{"kind": "surface", "exprs": ["s1", "s2", "s1*s2"], "domain": [[-1, 1], [-1, 1]]}')
    np.testing.assert_allclose(g.point(np.array([0.5, 2.0])), [0.5, 2.0, 1.0])


@pytest.mark.parametrize("spec", [
    {"kind": "volume", "builtin": "sphere"},
    {"kind": "surface", "builtin": "klein"},
    {"kind": "surface", "builtin": {"name": "sphere", "params": {"Q": 1}}},
    {"kind": "surface", "exprs": ["s1", "s2", "0"]},
    {"kind": "surface", "exprs": ["s1", "s2"], "domain": [[0, 1], [0, 1]]},
    {"kind": "surface", "exprs": ["s1", "s2", "w"], "domain": [[0, 1], [0, 1]]},
    {"kind": "curve"},
])
def test_load_geometry_errors(spec):
    with pytest.raises(ChartError):
        load_geometry(spec)


def test_builtin_curves():
    assert builtin_curve("circle").closed
    p = builtin_curve("paper", c=2.0).point(np.array([0.5]))
    np.testing.assert_allclose(p[0], [-1.0, 0.0, 0.5], atol=1e-15)
    with pytest.raises(ChartError):
        builtin_curve("spiral")
    g = builtin_surface("graph", f="x^2 - y^2")
    np.testing.assert_allclose(g.point(np.array([2.0, 1.0])), [2.0, 1.0, 3.0])
    assert expression_surface(["s1", "s2", "tau*s1"], [[0, 1], [0, 1]]).time_dependent
