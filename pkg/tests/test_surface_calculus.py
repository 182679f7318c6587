import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import oracle, suites
from sdcalc import surface_calculus as sc
from sdcalc.closest_point import to_cartesian
from sdcalc.fields import ambient_scalar, ambient_vector, scalar, vector
from sdcalc.geom_core import builtin_surface
from sdcalc.surface_frames import shape_operator

GEOMS = [("torus", {}), ("ellipsoid", {}), ("sphere", {"R": 2.0}), ("cylinder", {})]


def _points(chart, n=12, seed=3):
    return oracle.sample_collar(chart, n, np.random.default_rng(seed))


@pytest.mark.parametrize("name, kw", GEOMS)
def test_ambient_examples(name, kw):
    ch = builtin_surface(name, **kw)
    s, sigma = _points(ch)
    x = to_cartesian(ch, s, sigma)
    np.testing.assert_allclose(sc.divergence(ch, ambient_vector(["x", "y", "z"]), s, sigma), 3.0, atol=1e-11)
    np.testing.assert_allclose(sc.scalar_laplacian(ch, ambient_scalar("x^2+y^2+z^2"), s, sigma), 6.0,
                               atol=1e-10)
    np.testing.assert_allclose(sc.gradient(ch, ambient_scalar("x"), s, sigma).cartesian,
                               np.tile([1.0, 0.0, 0.0], (len(s), 1)), atol=1e-12)
    if name == "sphere":
        return  # frame-dependent operators are checked on non-umbilic surfaces below
    np.testing.assert_allclose(sc.curl(ch, ambient_vector(["-y", "x", "0"]), s, sigma).cartesian,
                               np.tile([0.0, 0.0, 2.0], (len(s), 1)), atol=1e-11)
    np.testing.assert_allclose(sc.vector_laplacian(ch, ambient_vector(["x^2", "0", "0"]), s, sigma).cartesian,
                               np.tile([2.0, 0.0, 0.0], (len(s), 1)), atol=1e-9)
    np.testing.assert_allclose(sc.convective_derivative(ch, ambient_vector(["x", "y", "z"]), s, sigma).cartesian,
                               x, atol=1e-11)
    cc = sc.curl_curl(ch, ambient_vector(["y*z", "x^2", "z*x"]), s, sigma).cartesian
    # -curl curl u = lap u - grad div u = (0, 2, 0) - grad(x) = (-1, 2, 0)
    np.testing.assert_allclose(cc, np.tile([-1.0, 2.0, 0.0], (len(s), 1)), atol=1e-9)


def test_vector_gradient_and_hessian_of_polynomials():
    ch = builtin_surface("torus")
    s, sigma = _points(ch)
    A = np.array([[1.0, 2.0, -1.0], [0.5, 0.0, 3.0], [-2.0, 1.0, 1.5]])
    u = ambient_vector([" + ".join(f"({A[i, j]})*{v}" for j, v in enumerate("xyz")) for i in range(3)])
    G = sc.vector_gradient(ch, u, s, sigma).cartesian
    np.testing.assert_allclose(G, np.broadcast_to(A.T, G.shape), atol=1e-10)
    Q = np.array([[1.0, 0.5, 0.0], [0.5, -2.0, 1.0], [0.0, 1.0, 3.0]])
    terms = [f"({Q[i, j]})*{a}*{b}" for i, a in enumerate("xyz") for j, b in enumerate("xyz")]
    H = sc.hessian(ch, ambient_scalar(" + ".join(terms)), s, sigma).cartesian
    np.testing.assert_allclose(H, np.broadcast_to(2 * Q, H.shape), atol=1e-9)


@pytest.mark.parametrize("name, kw", GEOMS + [("plane", {})])
def test_identities_on_random_fields(name, kw):
    ch = builtin_surface(name, **kw)
    rng = np.random.default_rng(11)
    pts = oracle.sample_collar(ch, 40, rng)
    scalars, vectors = suites.draw_fields(ch, rng, 2)
    res = suites.identity_residuals(ch, scalars, vectors, pts)
    for key, val in res.items():
        assert val < 1e-9, key


def test_sphere_jacobian_and_normal_divergence():
    R = 2.0
    ch = builtin_surface("sphere", R=R)
    s, sigma = _points(ch, 20)
    J = sc.jacobian(shape_operator(ch, s), sigma)
    np.testing.assert_allclose(J.det, (1 + sigma / R) ** 2, rtol=1e-13)
    np.testing.assert_allclose(np.einsum("bij,bjk->bik", J.J, J.Jinv), np.broadcast_to(np.eye(3), J.J.shape),
                               atol=1e-13)
    div = sc.divergence(ch, vector(["1", "0", "0"]), s, sigma)
    np.testing.assert_allclose(div, 2.0 / (R + sigma), rtol=1e-12)
    lap = sc.scalar_laplacian(ch, scalar("sigma^2"), s, sigma)
    np.testing.assert_allclose(lap, 2.0 + 2 * sigma * 2.0 / (R + sigma), rtol=1e-12)


def test_shell_volume():
    R, a = 1.0, 0.5
    ch = builtin_surface("sphere", R=R)
    g1, w1 = np.polynomial.legendre.leggauss(24)
    gs, ws = np.polynomial.legendre.leggauss(3)
    s1 = 0.5 * math.pi * (g1 + 1)
    s2 = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    sig = a * gs
    S1, S2, SG = np.meshgrid(s1, s2, sig, indexing="ij")
    W = (0.5 * math.pi * w1)[:, None, None] * (2 * math.pi / 8) * (a * ws)[None, None, :]
    dens = sc.volume_measure(ch, np.stack([S1.ravel(), S2.ravel()], -1), SG.ravel())
    vol = np.sum(dens * np.broadcast_to(W, S1.shape).ravel())
    assert vol == pytest.approx(4 * math.pi / 3 * ((R + a) ** 3 - (R - a) ** 3), rel=1e-12)


def test_singular_jacobian_rejected():
    ch = builtin_surface("sphere")
    with pytest.raises(sc.SingularJacobian):
        sc.scalar_laplacian(ch, scalar("s1"), [[1.0, 0.5]], [-1.0])


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 6.28), st.floats(0.0, 6.28), st.floats(-0.3, 0.3),
       st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_linear_field_gradient_is_constant(s1, s2, sigma, a, b, c):
    ch = builtin_surface("torus")
    f = ambient_scalar(f"({a})*x + ({b})*y + ({c})*z")
    g = sc.gradient(ch, f, [[s1, s2]], [sigma]).cartesian[0]
    np.testing.assert_allclose(g, [a, b, c], atol=1e-11)
    lap = sc.scalar_laplacian(ch, f, [[s1, s2]], [sigma])
    assert abs(lap[0]) < 1e-10
