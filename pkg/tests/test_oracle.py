import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import oracle
from sdcalc.closest_point import to_cartesian
from sdcalc.fields import TUBE_VARS, ambient_scalar, ambient_vector, scalar, vector
from sdcalc.geom_core import builtin_curve, builtin_surface

coef = st.floats(-2.0, 2.0, allow_nan=False)


def test_pullback_of_sigma_on_sphere():
    R = 1.5
    ch = builtin_surface("sphere", R=R)
    f = oracle.pullback(scalar("sigma"), ch)
    x = np.array([[0.3, 1.2, -0.4], [2.0, 0.1, 0.5]])
    np.testing.assert_allclose(f(x), np.linalg.norm(x, axis=-1) - R, atol=1e-12)


def test_pullback_of_plane_coordinate():
    f = oracle.pullback(scalar("s1"), builtin_surface("plane"))
    x = np.array([[1.5, -2.0, 0.3], [-4.0, 1.0, -1.0]])
    np.testing.assert_allclose(f(x), x[:, 0], atol=1e-13)


def test_pullback_vector_in_frame():
    ch = builtin_surface("sphere")
    u = oracle.pullback(vector(["1", "0", "0"]), ch)
    x = np.array([[0.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
    np.testing.assert_allclose(u(x), x / np.linalg.norm(x, axis=-1)[:, None], atol=1e-12)


def test_pullback_on_tube():
    c = builtin_curve("line")
    f = oracle.pullback(scalar("sigma", TUBE_VARS), c)
    x = np.array([[0.3, 0.4, 2.0]])
    np.testing.assert_allclose(f(x), [0.5], atol=1e-13)


def test_fd_examples():
    x = np.array([[0.3, -0.2, 1.1]])
    field = oracle.from_expressions(ambient_scalar("x^2 + y*z"))
    np.testing.assert_allclose(oracle.fd_grad(field, x), [[0.6, 1.1, -0.2]], atol=1e-9)
    np.testing.assert_allclose(oracle.fd_scalar_lap(field, x), [2.0], atol=1e-6)
    v = oracle.from_expressions(ambient_vector(["-y", "x", "0"]))
    np.testing.assert_allclose(oracle.fd_curl(v, x), [[0.0, 0.0, 2.0]], atol=1e-9)
    with pytest.raises(ValueError):
        oracle.fd_operator("bogus", field, x)


@settings(max_examples=30, deadline=None)
@given(st.lists(coef, min_size=10, max_size=10), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_fd_exact_on_cubics(c, p):
    terms = ["1", "x", "y", "z", "x*y", "y*z", "z^2", "x^3", "x*y*z", "y^2*z"]
    f = ambient_scalar(" + ".join(f"({a})*{t}" for a, t in zip(c, terms)))
    X, Y, Z = p
    grad = [c[1] + c[4] * Y + 3 * c[7] * X * X + c[8] * Y * Z,
            c[2] + c[4] * X + c[5] * Z + c[8] * X * Z + 2 * c[9] * Y * Z,
            c[3] + c[5] * Y + 2 * c[6] * Z + c[8] * X * Y + c[9] * Y * Y]
    lap = 2 * c[6] + 6 * c[7] * X + 2 * c[9] * Z
    amb = oracle.from_expressions(f)
    x = np.array([p])
    np.testing.assert_allclose(oracle.fd_grad(amb, x)[0], grad, atol=1e-7)
    np.testing.assert_allclose(oracle.fd_scalar_lap(amb, x)[0], lap, atol=1e-7)


def test_plane_comparison_is_tight():
    ch = builtin_surface("plane")
    rng = np.random.default_rng(0)
    pts = oracle.sample_collar(ch, 30, rng)
    f = scalar("sin(s1)*cos(0.5*s2) + sigma^2")
    for op in ("grad", "lap", "hessian"):
        r = oracle.compare(op, ch, f, pts)
        assert r["max_abs"] < 1e-8, op
        assert r["n_points"] == 30 and not r["failures"]


def test_sphere_laplacian_and_fault_control():
    ch = builtin_surface("sphere", R=2.0)
    rng = np.random.default_rng(4)
    pts = oracle.sample_collar(ch, 40, rng)
    f = oracle.random_scalar(ch, rng)
    r = oracle.compare("lap", ch, f, pts, fault_control=1e-3)
    assert r["max_rel"] < 1e-5
    assert r["fault_max_rel"] > 1e-4
    assert len(r["worst_point"]) == 3


@pytest.mark.parametrize("op", sorted(oracle.TUBE_OPS))
def test_tube_ops_agree(op, helix):
    rng = np.random.default_rng(8)
    pts = oracle.sample_collar(helix, 20, rng)
    f = oracle.random_vector(helix, rng) if op in oracle._VECTOR_IN else oracle.random_scalar(helix, rng)
    assert oracle.compare(op, helix, f, pts)["max_rel"] < 1e-4


def test_sample_collar_stays_inside(torus):
    s, sigma = oracle.sample_collar(torus, 100, np.random.default_rng(3))
    assert np.all(np.abs(sigma) < 0.5)
    x = to_cartesian(torus, s, sigma)
    assert x.shape == (100, 3)


SCRIPT = """
import json, numpy as np
from sdcalc.geom_core import builtin_surface
from sdcalc import oracle
ch = builtin_surface("torus")
rng = np.random.default_rng(42)
pts = oracle.sample_collar(ch, 150, rng)
print(json.dumps(oracle.compare("veclap", ch, oracle.random_vector(ch, rng), pts)))
"""


def test_thread_count_does_not_change_results():
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, SDCALC_THREADS=threads)
        outs.append(subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]
