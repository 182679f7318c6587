import numpy as np
import pytest

from sdcalc import oracle
from sdcalc import surface_evolution as se
from sdcalc.closest_point import to_cartesian
from sdcalc.fields import ambient_scalar, ambient_vector, scalar
from sdcalc.geom_core import builtin_surface, expression_surface


@pytest.fixture(scope="module")
def inflating():
    return builtin_surface("sphere", R="1+0.3*tau")


@pytest.fixture(scope="module")
def deforming_ellipsoid():
    return builtin_surface("ellipsoid", a="1+0.2*tau", b="sqrt(2)-0.1*tau^2")


def _pts(chart, n=20, tau=0.4, seed=5):
    return oracle.sample_collar(chart, n, np.random.default_rng(seed), tau=tau)


def test_inflating_sphere(inflating):
    tau = 0.4
    R, dR = 1 + 0.3 * tau, 0.3
    m = se.SurfaceMotion(inflating)
    s, sigma = _pts(inflating, tau=tau)
    x = to_cartesian(inflating, s, sigma, tau=tau)
    r = se.dt_coordinates(inflating, m, x, tau)
    np.testing.assert_allclose(r.dsigma, -dR, atol=1e-13)
    np.testing.assert_allclose(r.ds, 0.0, atol=1e-13)
    t1, t2 = se.dtau_tangents(inflating, m, s, tau)
    tb = se.fd_dtau_tangents(inflating, s, tau)
    from sdcalc.surface_frames import tangent_basis
    base = tangent_basis(inflating, s, tau=tau)
    np.testing.assert_allclose(t1, dR / R * base.t1, atol=1e-13)
    np.testing.assert_allclose(t2, dR / R * base.t2, atol=1e-13)
    np.testing.assert_allclose(t1, tb[0], atol=1e-7)
    np.testing.assert_allclose(se.dtau_normal(inflating, m, s, tau), 0.0, atol=1e-13)
    np.testing.assert_allclose(se.fd_dsigma(inflating, x, tau), -dR, atol=1e-8)


def test_rigid_translation():
    V = np.array([0.3, -0.2, 0.5])
    exprs = [f"cos(s1)+({V[0]})*tau", f"sin(s1)*cos(s2)+({V[1]})*tau", f"sin(s1)*sin(s2)+({V[2]})*tau"]
    ch = expression_surface(exprs, [[0, np.pi], [0, 2 * np.pi]], periodic=(False, True))
    ch.normalize = builtin_surface("sphere").normalize
    tau = 0.7
    m = se.SurfaceMotion(ch)
    s, sigma = _pts(ch, tau=tau)
    x = to_cartesian(ch, s, sigma, tau=tau)
    n = (x - V * tau) / np.linalg.norm(x - V * tau, axis=-1)[:, None]
    np.testing.assert_allclose(se.dt_coordinates(ch, m, x, tau).dsigma, -n @ V, atol=1e-12)
    np.testing.assert_allclose(se.dt_scalar(scalar("sigma"), m, x, tau), -n @ V, atol=1e-12)
    np.testing.assert_allclose(se.dt_scalar(ambient_scalar("x*y + z^2"), m, x, tau), 0.0, atol=1e-12)
    np.testing.assert_allclose(se.dtau_normal(ch, m, s, tau), 0.0, atol=1e-12)


def test_deforming_ellipsoid_against_fd(deforming_ellipsoid):
    ch = deforming_ellipsoid
    tau = 0.3
    m = se.SurfaceMotion(ch)
    s, sigma = _pts(ch, tau=tau)
    x = to_cartesian(ch, s, sigma, tau=tau)
    np.testing.assert_allclose(se.dtau_normal(ch, m, s, tau), se.fd_dtau_normal(ch, s, tau), atol=1e-7)
    a, b = se.dtau_tangents(ch, m, s, tau)
    fa, fb = se.fd_dtau_tangents(ch, s, tau)
    np.testing.assert_allclose(a, fa, atol=1e-7)
    np.testing.assert_allclose(b, fb, atol=1e-7)
    np.testing.assert_allclose(se.dt_coordinates(ch, m, x, tau).dsigma, se.fd_dsigma(ch, x, tau), atol=1e-6)


def test_closure_of_ambient_fields(deforming_ellipsoid):
    ch = deforming_ellipsoid
    tau = 0.3
    m = se.SurfaceMotion(ch)
    s, sigma = _pts(ch, tau=tau)
    x = to_cartesian(ch, s, sigma, tau=tau)
    for k in "xyz":
        np.testing.assert_allclose(se.dt_scalar(ambient_scalar(k), m, x, tau), 0.0, atol=1e-12)
    steady = se.dt_vector(ambient_vector(["sin(x)*y", "z^2", "x*y*z"]), m, x, tau)
    np.testing.assert_allclose(steady, 0.0, atol=1e-11)
    unsteady = se.dt_scalar(ambient_scalar("tau*x"), m, x, tau)
    np.testing.assert_allclose(unsteady, x[:, 0], atol=1e-12)


def test_explicit_motion_components():
    ch = builtin_surface("torus")
    m = se.SurfaceMotion(ch, v_sigma="0.1*cos(s1)", v_tangent=("0", "0"))
    s, sigma = _pts(ch, 8, tau=0.0)
    r = se.dt_coordinates(ch, m, (s, sigma))
    np.testing.assert_allclose(r.dsigma, -0.1 * np.cos(s[:, 0]), atol=1e-14)
    with pytest.raises(se.MotionError):
        se.SurfaceMotion(ch, v_tangent=("0",))
