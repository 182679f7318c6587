import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc.curve_frames import (CollarError, bishop_angle, frenet, jacobian_rows, orthogonality_residual,
                                 tube_frame, tube_from_cartesian, tube_to_cartesian)
from sdcalc.geom_core import builtin_curve


def test_helix_curvature_and_torsion(helix):
    s = np.linspace(0.5, 12.0, 9)
    fr = frenet(helix, s)
    np.testing.assert_allclose(fr.kappa, 0.8, atol=1e-13)
    np.testing.assert_allclose(fr.omega, 0.4, atol=1e-13)
    np.testing.assert_allclose(fr.speed, math.sqrt(1.25), atol=1e-14)
    np.testing.assert_allclose(np.cross(fr.t, fr.n), fr.b, atol=1e-13)


def test_circle_frame():
    R = 2.0
    c = builtin_curve("circle", R=R)
    s = np.linspace(0, 6, 7)
    fr = frenet(c, s)
    np.testing.assert_allclose(fr.kappa, 1 / R, atol=1e-14)
    np.testing.assert_allclose(fr.omega, 0.0, atol=1e-14)
    np.testing.assert_allclose(fr.n, -np.stack([np.cos(s), np.sin(s), 0 * s], -1), atol=1e-14)
    assert bishop_angle(c).mismatch == pytest.approx(0.0, abs=1e-12)


def test_helix_bishop_angle_is_linear(helix):
    phi0 = 0.3
    table = bishop_angle(helix, phi0=phi0)
    s = np.linspace(0, 4 * math.pi, 50)
    np.testing.assert_allclose(table(s), phi0 - 0.4 * math.sqrt(1.25) * s, atol=1e-10)
    assert table.error < 1e-10


def test_planar_curve_keeps_initial_angle():
    c = builtin_curve("paper", c=0.0)
    table = bishop_angle(c, phi0=0.7)
    np.testing.assert_allclose(table(np.linspace(0, 1, 21)), 0.7, atol=1e-14)


@pytest.mark.parametrize("name", ["helix", "paper"])
def test_jacobian_rows_orthogonal(name):
    c = builtin_curve(name)
    rng = np.random.default_rng(2)
    lo, hi = c.domain[0]
    s = rng.uniform(lo, hi, 200)
    th = rng.uniform(0, 2 * math.pi, 200)
    kmax = np.max(frenet(c, np.linspace(lo, hi, 257)).kappa)
    sig = rng.uniform(0, min(0.5, 0.9 / kmax), 200)
    assert orthogonality_residual(jacobian_rows(c, s, th, sig)) < 1e-8
    assert orthogonality_residual(jacobian_rows(c, s, th, sig, method="fd")) < 1e-8
    off = orthogonality_residual(jacobian_rows(c, s, th, np.full(200, 0.5 * min(1, 0.9 / kmax)), rotate=False))
    assert off > 1e-3


def test_frame_quantities(helix):
    tf = tube_frame(helix, [1.0, 2.0], [0.5, 2.0], [0.3, 0.0])
    F = np.stack([tf.t_s[0], tf.t_sigma[0], tf.t_theta[0]])
    np.testing.assert_allclose(F @ F.T, np.eye(3), atol=1e-13)
    np.testing.assert_allclose(tf.h_s, 1 - tf.sigma * tf.kappa * tf.cs)
    assert tf.on_axis.tolist() == [False, True]
    assert np.isnan(tf.C[1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 12.0), st.floats(0.0, 6.2), st.floats(0.05, 1.0))
def test_helix_roundtrip(s, theta, sigma):
    c = builtin_curve("helix")
    x = tube_to_cartesian(c, s, theta, sigma)
    co = tube_from_cartesian(c, x)
    assert co.s == pytest.approx(s, abs=1e-9)
    assert co.sigma == pytest.approx(sigma, abs=1e-10)
    assert math.remainder(co.theta - theta, 2 * math.pi) == pytest.approx(0.0, abs=1e-8)


def test_line_fallback():
    c = builtin_curve("line")
    fr = frenet(c, np.array([-1.0, 0.0, 2.0]))
    assert np.all(fr.straight)
    np.testing.assert_allclose(np.sum(fr.n * fr.t, -1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(fr.n, axis=-1), 1.0)
    x = np.array([[0.3, 0.4, 1.5]])
    co = tube_from_cartesian(c, x)
    assert co.s[0] == pytest.approx(1.5) and co.sigma[0] == pytest.approx(0.5)
    np.testing.assert_allclose(tube_to_cartesian(c, co.s, co.theta, co.sigma), x, atol=1e-13)


def test_collar_errors(helix):
    with pytest.raises(CollarError):
        tube_to_cartesian(helix, 1.0, 0.0, -0.1)
    th = -bishop_angle(helix)(1.0)  # cos(theta + phi) = 1
    with pytest.raises(CollarError):
        tube_to_cartesian(helix, 1.0, th, 1.3)
