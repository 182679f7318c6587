import numpy as np
import pytest

from sdcalc import oracle
from sdcalc import tube_calculus as tc
from sdcalc.curve_frames import frenet, tube_frame, tube_to_cartesian
from sdcalc.fields import TUBE_VARS, ambient_scalar, ambient_vector, scalar
from sdcalc.geom_core import builtin_curve, expression_curve


def _pts(curve, n=15, tau=0.0, seed=9):
    return oracle.sample_collar(curve, n, np.random.default_rng(seed), tau=tau)


@pytest.mark.parametrize("name", ["helix", "paper"])
def test_ambient_examples(name):
    c = builtin_curve(name)
    s, th, sg = _pts(c)
    x = tube_to_cartesian(c, s, th, sg)
    np.testing.assert_allclose(tc.tube_divergence(c, ambient_vector(["x", "y", "z"]), s, th, sg), 3.0, atol=1e-10)
    np.testing.assert_allclose(tc.tube_scalar_laplacian(c, ambient_scalar("x^2+y^2+z^2"), s, th, sg), 6.0,
                               atol=1e-9)
    np.testing.assert_allclose(tc.tube_gradient(c, ambient_scalar("y"), s, th, sg).cartesian,
                               np.tile([0.0, 1.0, 0.0], (len(s), 1)), atol=1e-11)
    np.testing.assert_allclose(tc.tube_curl(c, ambient_vector(["-y", "x", "0"]), s, th, sg).cartesian,
                               np.tile([0.0, 0.0, 2.0], (len(s), 1)), atol=1e-10)
    np.testing.assert_allclose(tc.tube_vector_laplacian(c, ambient_vector(["x^2", "0", "0"]), s, th, sg).cartesian,
                               np.tile([2.0, 0.0, 0.0], (len(s), 1)), atol=1e-8)
    G = tc.tube_vector_gradient(c, ambient_vector(["2*y", "z - x", "3*x"]), s, th, sg).cartesian
    A = np.array([[0.0, 2.0, 0.0], [-1.0, 0.0, 1.0], [3.0, 0.0, 0.0]])
    np.testing.assert_allclose(G, np.broadcast_to(A.T, G.shape), atol=1e-10)
    assert x.shape == (len(s), 3)


def test_log_sigma_harmonic_around_line():
    c = builtin_curve("line")
    s = np.linspace(-3, 3, 7)
    th = np.linspace(0, 6, 7)
    sg = np.linspace(0.2, 2.0, 7)
    lap = tc.tube_scalar_laplacian(c, scalar("log(sigma)", TUBE_VARS), s, th, sg)
    np.testing.assert_allclose(lap, 0.0, atol=1e-12)
    g = tc.tube_gradient(c, scalar("log(sigma)", TUBE_VARS), s, th, sg).frame
    np.testing.assert_allclose(g, np.stack([0 * sg, 1 / sg, 0 * sg], -1), atol=1e-14)


def test_on_axis_rejected(helix):
    with pytest.raises(tc.OnAxisError):
        tc.tube_scalar_laplacian(helix, scalar("s", TUBE_VARS), [1.0], [0.0], [0.0])


@pytest.fixture(scope="module")
def moving_paper():
    return builtin_curve("paper", c="tau")


def test_frenet_constraints_and_torsion(moving_paper):
    c, tau = moving_paper, 0.4
    m = tc.CurveMotion(c)
    s = np.linspace(0.1, 0.9, 17)
    c1, c2 = tc.frenet_constraint_residuals(c, m, s, tau)
    assert np.max(np.abs(c1)) < 1e-6 and np.max(np.abs(c2)) < 1e-6
    te, fd = tc.torsion_evolution(c, m, s, tau), tc.fd_torsion_rate(c, s, tau)
    assert np.max(np.abs(te - fd) / np.maximum(np.abs(fd), 1e-8)) < 1e-3


def test_frenet_rates_match_fd(moving_paper):
    c, tau = moving_paper, 0.4
    s = np.linspace(0.1, 0.9, 9)
    r = tc.dt_frenet(c, tc.CurveMotion(c), s, tau)
    fr = frenet(c, s, tau=tau)
    F = np.stack([fr.t, fr.n, fr.b], -2)
    np.testing.assert_allclose(np.einsum("bij,bjk->bik", r.matrix, F), tc.fd_frenet_rates(c, s, tau), atol=1e-6)


def test_tube_frame_rates_match_fd(moving_paper):
    c, tau, h = moving_paper, 0.4, 1e-5
    s, th, sg = np.array([0.3, 0.6]), np.array([0.4, 2.0]), np.array([0.2, 0.1])
    r = tc.dt_tube_frame(c, tc.CurveMotion(c), s, th, sg, tau)

    def rows(t):
        f = tube_frame(c, s, th, sg, tau=t)
        return np.stack([f.t_s, f.t_sigma, f.t_theta], -2)

    fd = (rows(tau + h) - rows(tau - h)) / (2 * h)
    np.testing.assert_allclose(np.einsum("bij,bjk->bik", r.dtau_matrix, rows(tau)), fd, atol=1e-6)


def test_rigid_translation_closure():
    V = (0.2, -0.1, 0.4)
    c = expression_curve([f"cos(s)+({V[0]})*tau", f"sin(s)+({V[1]})*tau", f"0.5*s+({V[2]})*tau"], [0, 12])
    tau = 0.5
    m = tc.CurveMotion(c)
    s, th, sg = _pts(c, 10, tau=tau)
    x = tube_to_cartesian(c, s, th, sg, tau=tau)
    for k in "xyz":
        np.testing.assert_allclose(tc.dt_scalar_tube(ambient_scalar(k), m, x, tau), 0.0, atol=1e-11)
    np.testing.assert_allclose(tc.dt_vector_tube(ambient_vector(["y*z", "x^2", "sin(z)"]), m, x, tau), 0.0,
                               atol=1e-10)
    f = tube_frame(c, s, th, sg, tau=tau)
    ds, dsig, dth = tc.dt_tube_coordinates(c, m, x, tau)
    np.testing.assert_allclose(dsig, -(f.t_sigma @ np.array(V)), atol=1e-11)
    np.testing.assert_allclose(ds * frenet(c, s, tau=tau).speed * f.h_s, -(f.t_s @ np.array(V)), atol=1e-11)


def test_explicit_static_motion(helix):
    m = tc.CurveMotion.static(helix)
    s = np.linspace(1, 10, 5)
    c1, c2 = tc.frenet_constraint_residuals(helix, m, s)
    np.testing.assert_allclose(c1, 0.0, atol=1e-13)
    np.testing.assert_allclose(c2, 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        tc.CurveMotion(helix, ("0", "0"))
