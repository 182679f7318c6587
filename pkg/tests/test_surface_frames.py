import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdcalc import taylor as tm
from sdcalc.geom_core import builtin_surface
from sdcalc.taylor import TaylorSpace
from sdcalc.surface_frames import (codazzi_egregium_residuals, rotation_coefficients,
                                   shape_operator, surface_divergence, surface_gradient, tangent_basis)


def _grid(chart, n, margin=0.1):
    axes = []
    for k, (lo, hi) in enumerate(chart.domain):
        m = 0.0 if chart.periodic[k] else margin * (hi - lo)
        axes.append(np.linspace(lo + m, hi - m, n, endpoint=not chart.periodic[k]))
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_sphere_curvatures(R):
    c = shape_operator(builtin_surface("sphere", R=R), _grid(builtin_surface("sphere"), 8))
    np.testing.assert_allclose(c.k1, -1.0 / R, atol=1e-12)
    np.testing.assert_allclose(c.k2, -1.0 / R, atol=1e-12)
    assert np.all(c.umbilic)
    assert np.all(np.isnan(c.w1))


def test_cylinder_curvatures_and_flat_rotation():
    ch = builtin_surface("cylinder", R=2.0)
    c = shape_operator(ch, _grid(ch, 8))
    np.testing.assert_allclose(c.k1, 0.0, atol=1e-12)
    np.testing.assert_allclose(c.k2, -0.5, atol=1e-12)
    np.testing.assert_allclose(c.w1, 0.0, atol=1e-12)
    np.testing.assert_allclose(c.w2, 0.0, atol=1e-12)
    # e2 is the circumferential direction
    np.testing.assert_allclose(np.abs(c.e1[:, 2]), 1.0, atol=1e-12)


def test_ellipsoid_normal_direction():
    ch = builtin_surface("ellipsoid")
    s = _grid(ch, 10)
    p = ch.point(s)
    n = tangent_basis(ch, s).n
    ref = p / np.array([1.0, 2.0, 4.0])
    ref /= np.linalg.norm(ref, axis=-1)[:, None]
    np.testing.assert_allclose(n, ref, atol=1e-12)


@pytest.mark.parametrize("name", ["torus", "ellipsoid"])
def test_codazzi_egregium(name):
    ch = builtin_surface(name)
    s = _grid(ch, 32)
    c = shape_operator(ch, s)
    s = s[~c.umbilic]
    r = codazzi_egregium_residuals(ch, s)
    assert max(float(np.max(np.abs(x))) for x in r) < 1e-7


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 6.28), st.floats(0.0, 6.28))
def test_frame_orthonormal_and_shape_tensor(s1, s2):
    c = shape_operator(builtin_surface("torus"), [s1, s2])
    F = np.stack([c.n, c.e1, c.e2])
    np.testing.assert_allclose(F @ F.T, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(c.K @ c.n, 0.0, atol=1e-12)
    np.testing.assert_allclose(c.K @ c.e1, c.k1 * c.e1, atol=1e-12)
    assert c.k1 >= c.k2
    assert c.gauss == pytest.approx(c.k1 * c.k2)


def test_torus_principal_curvatures():
    R, r = 2.0, 0.5
    s = _grid(builtin_surface("torus"), 12)
    c = shape_operator(builtin_surface("torus", R=R, r=r), s)
    kt = -1.0 / r
    kp = -np.cos(s[:, 1]) / (R + r * np.cos(s[:, 1]))
    np.testing.assert_allclose(np.sort(np.stack([c.k1, c.k2], -1), -1),
                               np.sort(np.stack([np.full_like(kp, kt), kp], -1), -1), atol=1e-12)


def test_rotation_coefficients_torus():
    ch = builtin_surface("torus")
    s = _grid(ch, 6)
    rc = rotation_coefficients(ch, s)
    assert not np.any(rc.umbilic)
    assert np.all(np.isfinite(rc.w1)) and np.all(np.isfinite(rc.w2))


def test_projected_constant_field_divergence_on_sphere():
    R = 1.7
    ch = builtin_surface("sphere", R=R)

    def u(S1, S2, tau):
        p = ch.jet(S1, S2, tau=tau)
        cr = tm.cross(p.deriv(0), p.deriv(1))
        n = cr / tm.norm(cr)[..., None]
        nz = n[..., 2]
        return tm.stack([-nz * n[..., 0], -nz * n[..., 1], 1.0 - nz * nz])

    s = _grid(ch, 9, margin=0.2)
    div = surface_divergence(ch, s, u)
    z = ch.point(s)[:, 2]
    np.testing.assert_allclose(div, -2 * z / R ** 2, atol=1e-11)


def test_gradient_divergence_adjoint_on_torus():
    ch = builtin_surface("torus")
    N = 48
    s = _grid(ch, N)

    def f(S1, S2, tau):
        return tm.cos(S1) * (1.0 + tm.sin(S2)) + tm.cos(2 * S2)

    def u(S1, S2, tau):
        p = ch.jet(S1, S2, tau=tau)
        return tm.sin(S1)[..., None] * p.deriv(0) + tm.sin(S2)[..., None] * p.deriv(1)

    tb = tangent_basis(ch, s)
    dA = np.linalg.norm(np.cross(tb.t1, tb.t2), axis=-1) * (2 * math.pi / N) ** 2
    g = surface_gradient(ch, s, f)
    sp = TaylorSpace.get(2, 2)
    S1, S2 = sp.variable(0, s[:, 0]), sp.variable(1, s[:, 1])
    uv = u(S1, S2, 0.0).value
    fv = f(S1, S2, 0.0).value
    lhs = np.sum(np.sum(g * uv, -1) * dA)
    rhs = -np.sum(fv * surface_divergence(ch, s, u) * dA)
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert abs(lhs) > 1e-3
