import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import expr as ex
from sdcalc.geom_core import fd_derivative

VARS = {"s", "tau"}

leaf = st.one_of(st.sampled_from(["s", "tau", "pi", "2", "0.5", "3"]))


def _combine(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]}{t[1]}{t[2]})")
    call = st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: f"{t[0]}({t[1]})")
    power = children.map(lambda c: f"({c})^2")
    neg = children.map(lambda c: f"-{c}")
    return st.one_of(binop, call, power, neg)


expressions = st.recursive(leaf, _combine, max_leaves=8)


def test_basic_values():
    n = ex.parse_expr("sin(2*pi*s)", {"s"})
    assert ex.evaluate(n, {"s": 0.25}) == pytest.approx(1.0, abs=1e-15)
    assert ex.to_string(ex.diff(ex.parse_expr("s^2", {"s"}), "s")) == "2*s"


def test_precedence_and_power():
    n = ex.parse_expr("-2^2 + 3*4 - 6/3", set())
    assert ex.evaluate(n, {}) == pytest.approx(-4 + 12 - 2)
    assert ex.evaluate(ex.parse_expr("2^3^2", set()), {}) == pytest.approx(2.0 ** 9)


def test_vectorised_evaluation():
    n = ex.parse_expr("s*tau + exp(s)", VARS)
    s = np.linspace(0, 1, 5)
    np.testing.assert_allclose(ex.evaluate(n, {"s": s, "tau": 2.0}), 2 * s + np.exp(s))


@pytest.mark.parametrize("text, offset", [
    ("1+", 2),
    ("foo(s)", 0),
    ("s+q", 2),
    ("3 $ 4", 2),
    ("2**", 2),
])
def test_errors_carry_offsets(text, offset):
    with pytest.raises(ex.ExprError) as info:
        ex.parse_expr(text, {"s"})
    assert info.value.offset == offset
    assert f"at byte {offset}" in str(info.value)


def test_free_variables():
    assert ex.free_variables(ex.parse_expr("s*cos(tau) + pi", VARS)) == {"s", "tau"}


@settings(max_examples=60, deadline=None)
@given(expressions)
def test_print_parse_roundtrip(text):
    node = ex.parse_expr(text, VARS)
    printed = ex.to_string(node)
    again = ex.parse_expr(printed, VARS)
    assert ex.to_string(again) == printed
    env = {"s": 0.37, "tau": -0.81}
    a, b = ex.evaluate(node, env), ex.evaluate(again, env)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(expressions, st.floats(-1.0, 1.0))
def test_symbolic_derivative_matches_fd(text, s0):
    node = ex.parse_expr(text, VARS)
    d = ex.diff(node, "s")
    exact = ex.evaluate(d, {"s": s0, "tau": 0.3})
    fd = fd_derivative(lambda s: ex.evaluate(node, {"s": s, "tau": 0.3}), s0, 1)
    assert exact == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_substitute():
    n = ex.substitute(ex.parse_expr("s^2 + tau", VARS), {"tau": ex.parse_expr("2*s", VARS)})
    assert ex.evaluate(n, {"s": 3.0}) == pytest.approx(15.0)
    assert math.isclose(ex.evaluate(ex.parse_expr("log(e)", set()), {}), 1.0)
