"""Intrinsic surface geometry: tangent basis, Gauss map, shape operator,
principal curvatures and directions, rotation coefficients.

Everything is computed on Taylor jets in the chart parameters, so
derivatives of the frame (and hence the rotation coefficients and the
Codazzi and Gauss identities) are exact up to floating point.

Sign convention: ``K = -grad_perp n``, so a sphere with outward normal has
``kappa_1 = kappa_2 = -1/R``.  Principal curvatures are ordered
``kappa_1 >= kappa_2``.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import taylor as tm
from .taylor import Taylor, TaylorSpace

DEFAULT_REF = np.array([0.9, 0.4, 0.17])
DEFAULT_REF = DEFAULT_REF / np.linalg.norm(DEFAULT_REF)


class DegenerateChart(ValueError):
    pass


class UmbilicError(ValueError):
    pass


def umbilic_tol(k1, k2):
    return 1e-8 * np.maximum(np.maximum(np.abs(k1), np.abs(k2)), 1.0)


def _vec(c):
    """Broadcast a scalar jet (or array) against a trailing vector axis."""
    return c[..., None]


@dataclass
class DarbouxJets:
    """Frame and curvature jets at a batch of surface points.

    ``nabla(i, F)`` is the arclength derivative of a scalar jet ``F`` along
    principal direction ``i`` (0 or 1).  ``umbilic`` flags isolated umbilics
    where the principal frame is undefined; ``flat_umbilic`` flags points
    where the shape operator is a multiple of the identity on a whole
    neighbourhood (sphere, plane), in which case any orthonormal frame is
    principal and the Gram-Schmidt frame of the chart is used.
    """

    space: TaylorSpace
    s_vars: tuple
    p: Taylor
    t1: Taylor
    t2: Taylor
    n: Taylor
    e1: Taylor
    e2: Taylor
    k1: Taylor
    k2: Taylor
    w1: Taylor
    w2: Taylor
    A: tuple
    umbilic: np.ndarray
    flat_umbilic: np.ndarray

    def nabla(self, i, F):
        a, b = self.s_vars
        return self.A[i][0] * F.deriv(a) + self.A[i][1] * F.deriv(b)

    def nabla_vec(self, i, F):
        a, b = self.s_vars
        return _vec(self.A[i][0]) * F.deriv(a) + _vec(self.A[i][1]) * F.deriv(b)


def darboux_jets(chart, s, order=6, nvars=3, s_vars=(1, 2), tau=0.0, tau_var=None, ref=None):
    """Build frame jets for ``chart`` at parameter points ``s`` (shape (B, 2)).

    Jets live in a ``nvars``-variable space; the chart parameters occupy
    ``s_vars`` and, when ``tau_var`` is given, time occupies that variable.
    """
    s = np.atleast_2d(np.asarray(s, float))
    space = TaylorSpace.get(nvars, order)
    S1 = space.variable(s_vars[0], s[:, 0])
    S2 = space.variable(s_vars[1], s[:, 1])
    if tau_var is not None:
        T = space.variable(tau_var, np.broadcast_to(np.asarray(tau, float), s[:, 0].shape))
    else:
        T = tau
    p = chart.jet(S1, S2, tau=T)
    if not isinstance(p, Taylor):
        raise DegenerateChart("chart does not depend on its parameters")
    t1 = p.deriv(s_vars[0])
    t2 = p.deriv(s_vars[1])
    cr = tm.cross(t1, t2)
    crn = tm.norm(cr)
    l1 = tm.norm(t1)
    l2 = tm.norm(t2)
    if np.any(crn.value < 1e-12 * l1.value * l2.value):
        raise DegenerateChart("degenerate tangents (chart is not an immersion here)")
    n = cr / _vec(crn)

    # Gram-Schmidt basis and the triangular factor with [t1 t2] = [b1 b2] T
    b1 = t1 / _vec(l1)
    T12 = tm.dot(t2, b1)
    w = t2 - _vec(T12) * b1
    T22 = tm.norm(w)
    b2 = w / _vec(T22)
    T11 = l1

    # second fundamental form in s, then in the orthonormal basis
    h11 = tm.dot(t1.deriv(s_vars[0]), n)
    h12 = tm.dot(t1.deriv(s_vars[1]), n)
    h22 = tm.dot(t2.deriv(s_vars[1]), n)
    i11 = 1.0 / T11
    i12 = -T12 / (T11 * T22)
    i22 = 1.0 / T22
    # S = Tinv^T h Tinv with Tinv = [[i11, i12], [0, i22]]
    a = i11 * i11 * h11
    b = i11 * (h11 * i12 + h12 * i22)
    d = i12 * i12 * h11 + 2.0 * i12 * i22 * h12 + i22 * i22 * h22

    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    disc = half * half + b * b
    r0 = np.sqrt(np.maximum(disc.value, 0.0))
    kscale = np.abs(mean.value) + r0
    tol = umbilic_tol(kscale, kscale)
    near = 2.0 * r0 <= tol
    flat = near & np.all(np.abs(disc.c) <= tol ** 2, axis=0)
    iso = near & ~flat

    safe = tm.where(near, 1.0, disc)
    r = safe.sqrt()
    k1 = tm.where(near, mean, mean + r)
    k2 = tm.where(near, mean, mean - r)

    # eigenvector of kappa_1 in the (b1, b2) basis, best-conditioned choice
    ua = (b, k1 - a)
    ub = (k1 - d, b)
    na = ua[0].value ** 2 + ua[1].value ** 2
    nb = ub[0].value ** 2 + ub[1].value ** 2
    pick = na >= nb
    c1 = tm.where(pick, ua[0], ub[0])
    c2 = tm.where(pick, ua[1], ub[1])
    c1 = tm.where(near, 1.0, c1)
    c2 = tm.where(near, 0.0, c2)
    cn = (c1 * c1 + c2 * c2).sqrt()
    c1 = c1 / cn
    c2 = c2 / cn
    e1 = _vec(c1) * b1 + _vec(c2) * b2
    ref = DEFAULT_REF if ref is None else np.asarray(ref, float)
    sign = np.where(np.sum(e1.value * ref, axis=-1) < 0, -1.0, 1.0)
    c1 = c1 * sign
    c2 = c2 * sign
    e1 = _vec(c1) * b1 + _vec(c2) * b2
    e2 = tm.cross(n, e1)

    # nabla_i = sum_l A[i][l] d/ds_l with A[i] = Tinv (V_i), V_0 = (c1, c2), V_1 = (-c2, c1)
    V = ((c1, c2), (-c2, c1))
    A = tuple((i11 * Vi[0] + i12 * Vi[1], i22 * Vi[1]) for Vi in V)

    geo = DarbouxJets(space, tuple(s_vars), p, t1, t2, n, e1, e2, k1, k2, None, None, A, iso, flat)
    geo.w1 = tm.dot(geo.nabla_vec(0, e1), e2)
    geo.w2 = tm.dot(geo.nabla_vec(1, e1), e2)
    if np.any(iso):
        nan = np.where(iso, np.nan, 1.0)
        for name in ("e1", "e2", "w1", "w2"):
            jet = getattr(geo, name)
            setattr(geo, name, jet * (nan[:, None] if jet.c.ndim == 3 else nan))
        geo.A = tuple((x * nan, y * nan) for x, y in geo.A)
    return geo


# -- public numeric API ------------------------------------------------------
TangentBasis = namedtuple("TangentBasis", "t1 t2 g n")
RotationCoefficients = namedtuple("RotationCoefficients", "w1 w2 umbilic")


@dataclass
class CurvatureData:
    k1: np.ndarray
    k2: np.ndarray
    K: np.ndarray
    n: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    umbilic: np.ndarray

    @property
    def mean(self):
        return 0.5 * (self.k1 + self.k2)

    @property
    def sum(self):
        return self.k1 + self.k2

    @property
    def gauss(self):
        return self.k1 * self.k2

    @property
    def sq_sum(self):
        return self.k1 ** 2 + self.k2 ** 2


def _points(s):
    s = np.asarray(s, float)
    return np.atleast_2d(s), s.ndim == 1


def _out(x, single):
    return x[0] if single else x


def tangent_basis(chart, s, tau=0.0):
    """Raw tangents, metric ``g_ij = t_i . t_j`` and unit normal at ``s``."""
    s, single = _points(s)
    chart.check_domain(s[:, 0], s[:, 1])
    space = TaylorSpace.get(2, 1)
    p = chart.jet(space.variable(0, s[:, 0]), space.variable(1, s[:, 1]), tau=tau)
    t1 = p.deriv(0).value
    t2 = p.deriv(1).value
    cr = np.cross(t1, t2)
    crn = np.linalg.norm(cr, axis=-1)
    if np.any(crn < 1e-12 * np.linalg.norm(t1, axis=-1) * np.linalg.norm(t2, axis=-1)):
        raise DegenerateChart("degenerate tangents (chart is not an immersion here)")
    g = np.stack([np.stack([np.sum(t1 * t1, -1), np.sum(t1 * t2, -1)], -1),
                  np.stack([np.sum(t2 * t1, -1), np.sum(t2 * t2, -1)], -1)], -2)
    n = cr / crn[:, None]
    return TangentBasis(_out(t1, single), _out(t2, single), _out(g, single), _out(n, single))


def shape_operator(chart, s, tau=0.0, ref=None):
    """Principal curvatures, directions, shape tensor and rotation coefficients.

    Rotation coefficients are NaN at umbilic points (including everywhere on
    a sphere or plane) and the ``umbilic`` flag is set.
    """
    s, single = _points(s)
    chart.check_domain(s[:, 0], s[:, 1])
    geo = darboux_jets(chart, s, order=3, nvars=2, s_vars=(0, 1), tau=tau, ref=ref)
    k1, k2 = geo.k1.value, geo.k2.value
    n = geo.n.value
    umb = geo.umbilic | geo.flat_umbilic
    if np.any(geo.flat_umbilic):
        # any tangent pair is principal; report the chart's Gram-Schmidt frame
        pass
    e1, e2 = geo.e1.value, geo.e2.value
    K = k1[:, None, None] * e1[:, :, None] * e1[:, None, :] + k2[:, None, None] * e2[:, :, None] * e2[:, None, :]
    w1 = np.where(umb, np.nan, geo.w1.value)
    w2 = np.where(umb, np.nan, geo.w2.value)
    if np.any(geo.umbilic):
        k = np.where(geo.umbilic, 0.5 * (k1 + k2), k1)
        k1, k2 = np.where(geo.umbilic, k, k1), np.where(geo.umbilic, k, k2)
    data = CurvatureData(k1, k2, K, n, e1, e2, w1, w2, umb)
    if single:
        data = CurvatureData(*[getattr(data, f)[0] for f in
                               ("k1", "k2", "K", "n", "e1", "e2", "w1", "w2", "umbilic")])
    return data


def rotation_coefficients(chart, s, tau=0.0, ref=None):
    """``w1 = (nabla_1 t1).t2`` and ``w2 = -(nabla_2 t2).t1``; NaN and flagged at umbilics."""
    c = shape_operator(chart, s, tau=tau, ref=ref)
    return RotationCoefficients(c.w1, c.w2, c.umbilic)


def _scalar_jet(f, S1, S2, tau):
    val = f(S1, S2, tau) if callable(f) else f.evaluate_surface(S1, S2, tau)
    return val


def surface_gradient(chart, s, f, tau=0.0):
    """``grad_perp f = g^ij (df/ds_i) t_j`` for ``f(s1, s2, tau)``."""
    s, single = _points(s)
    space = TaylorSpace.get(2, 1)
    S1, S2 = space.variable(0, s[:, 0]), space.variable(1, s[:, 1])
    p = chart.jet(S1, S2, tau=tau)
    t1, t2 = p.deriv(0).value, p.deriv(1).value
    F = _as_jet(_scalar_jet(f, S1, S2, tau), space, len(s))
    df = np.stack([F.deriv(0).value, F.deriv(1).value], -1)
    g = np.stack([np.stack([np.sum(t1 * t1, -1), np.sum(t1 * t2, -1)], -1),
                  np.stack([np.sum(t2 * t1, -1), np.sum(t2 * t2, -1)], -1)], -2)
    c = np.linalg.solve(g, df[..., None])[..., 0]
    return _out(c[:, :1] * t1 + c[:, 1:] * t2, single)


def _as_jet(F, space, B):
    if isinstance(F, Taylor):
        return F
    return space.constant(np.broadcast_to(np.asarray(F, float), (B,)))


def _as_vec_jet(U, space, B):
    if isinstance(U, Taylor):
        return U
    comps = [_as_jet(u, space, B) for u in U]
    return tm.stack(comps)


def surface_divergence(chart, s, u, tau=0.0, ref=None):
    """Surface divergence of a tangent field ``u(s1, s2, tau) -> (ux, uy, uz)``.

    Uses ``nabla_1 u_1 + nabla_2 u_2 + w2 u_1 - w1 u_2`` in the principal
    frame; at umbilic points the trace over the chart's orthonormalised
    basis is used instead.
    """
    s, single = _points(s)
    geo = darboux_jets(chart, s, order=3, nvars=2, s_vars=(0, 1), tau=tau, ref=ref)
    S1 = geo.space.variable(0, s[:, 0])
    S2 = geo.space.variable(1, s[:, 1])
    U = _as_vec_jet(u(S1, S2, tau), geo.space, len(s))
    normal = np.abs(np.sum(U.value * geo.n.value, -1))
    if np.any(normal > 1e-8 * np.maximum(np.linalg.norm(U.value, axis=-1), 1.0)):
        raise ValueError("field is not tangent to the surface")
    u1 = tm.dot(U, geo.e1)
    u2 = tm.dot(U, geo.e2)
    umb = geo.umbilic | geo.flat_umbilic
    out = (geo.nabla(0, u1) + geo.nabla(1, u2) + geo.w2 * u1 - geo.w1 * u2).value
    if np.any(umb):
        # frame-free trace sum_k b_k . d_{b_k} u over the Gram-Schmidt basis
        t1v, t2v = geo.t1.value, geo.t2.value
        l1 = np.linalg.norm(t1v, axis=-1)
        bb1 = t1v / l1[:, None]
        T12 = np.sum(t2v * bb1, -1)
        wv = t2v - T12[:, None] * bb1
        T22 = np.linalg.norm(wv, axis=-1)
        bb2 = wv / T22[:, None]
        dU1 = U.deriv(0).value
        dU2 = U.deriv(1).value
        d_b1 = dU1 / l1[:, None]
        d_b2 = (dU2 - (T12 / l1)[:, None] * dU1) / T22[:, None]
        alt = np.sum(bb1 * d_b1, -1) + np.sum(bb2 * d_b2, -1)
        out = np.where(umb, alt, out)
    return _out(out, single)


def codazzi_egregium_residuals(chart, s, tau=0.0, ref=None):
    """Residuals of the two Codazzi-Mainardi equations and the Theorema Egregium."""
    s, single = _points(s)
    geo = darboux_jets(chart, s, order=5, nvars=2, s_vars=(0, 1), tau=tau, ref=ref)
    if np.any(geo.umbilic):
        raise UmbilicError("Codazzi residuals undefined at an isolated umbilic point")
    dk = geo.k1 - geo.k2
    r1 = geo.nabla(1, geo.k1) - geo.w1 * dk
    r2 = geo.nabla(0, geo.k2) - geo.w2 * dk
    r3 = geo.nabla(0, geo.w2) - geo.nabla(1, geo.w1) + geo.w1 * geo.w1 + geo.w2 * geo.w2 + geo.k1 * geo.k2
    return tuple(_out(r.value, single) for r in (r1, r2, r3))


def grad_perp_normal(chart, s, tau=0.0):
    """Surface gradient of the Gauss map, ``(grad_perp n)_ij = t^i-direction derivative of n_j``."""
    s, single = _points(s)
    space = TaylorSpace.get(2, 2)
    p = chart.jet(space.variable(0, s[:, 0]), space.variable(1, s[:, 1]), tau=tau)
    t1, t2 = p.deriv(0), p.deriv(1)
    cr = tm.cross(t1, t2)
    n = cr / _vec(tm.norm(cr))
    dn = np.stack([n.deriv(0).value, n.deriv(1).value], 1)  # (B, 2, 3)
    tv = np.stack([t1.value, t2.value], 1)
    g = np.einsum("bik,bjk->bij", tv, tv)
    ginv = np.linalg.inv(g)
    # grad_perp n = g^ij t_i (x) d_j n
    G = np.einsum("bij,bik,bjl->bkl", ginv, tv, dn)
    return _out(G, single)
