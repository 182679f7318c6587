"""Time derivatives in signed-distance coordinates around a moving surface.

Everything here is expressed in the chart tangent basis ``t_i = d p / d s_i``
rather than the principal frame: moving charts need not stay aligned with
lines of curvature, and the basis stays defined at umbilics.  The shape
operator acts on tangent coefficients through ``M = G^{-1} h`` with ``G``
the metric and ``h_ij = p_ij . n``, so that ``K t_j = sum_i M_ij t_i``.
"""

from collections import namedtuple

import numpy as np

from . import expr as ex
from . import taylor as tm
from .closest_point import signed_distance
from .geom_core import ChartError
from .surface_calculus import SingularJacobian, SurfaceCalc
from .surface_frames import UmbilicError, _vec
from .taylor import Taylor

SIG, S1, S2, TAU = 0, 1, 2, 3
FD_TAU = 1e-5

CoordinateRates = namedtuple("CoordinateRates", "dsigma ds_t ds")


class MotionError(ChartError):
    pass


class SurfaceMotion:
    """Surface velocity ``d p/d tau = v_sigma n + v_perp``.

    With no components given the velocity is extracted from the chart's
    ``tau`` dependence.  Otherwise ``v_sigma`` is an expression or callable
    in ``(s1, s2, tau)`` and ``v_tangent`` a pair of coefficients on the chart
    tangents, ``v_perp = v_1 t_1 + v_2 t_2`` (tangent by construction).
    """

    def __init__(self, chart, v_sigma=None, v_tangent=None):
        self.chart = chart
        self.extracted = v_sigma is None and v_tangent is None
        names = {"s1", "s2", "tau"}
        self._vs = _component(v_sigma if v_sigma is not None else 0.0, names)
        vt = v_tangent if v_tangent is not None else (0.0, 0.0)
        if len(vt) != 2:
            raise MotionError("v_tangent takes two coefficients (on t1 and t2)")
        self._vt = tuple(_component(c, names) for c in vt)

    @classmethod
    def static(cls, chart):
        return cls(chart, 0.0, (0.0, 0.0))

    def jets(self, b):
        """``(v_sigma, (v_1, v_2), v_perp)`` as jets on the basis ``b``."""
        if self.extracted:
            v = b.p.deriv(TAU)
            vs = tm.dot(v, b.n)
            vp = v - _vec(vs) * b.n
            return vs, b.coords(vp), vp
        env = (b.S1, b.S2, b.T)
        vs = b.lift(_eval(self._vs, env))
        c = tuple(b.lift(_eval(x, env)) for x in self._vt)
        return vs, c, b.vec(c)


def _component(c, names):
    if callable(c):
        return c
    if isinstance(c, (int, float)):
        return float(c)
    return ex.parse_expr(str(c), names)


def _eval(c, env):
    if isinstance(c, float):
        return c
    if callable(c):
        return c(*env)
    return ex.evaluate(c, dict(zip(("s1", "s2", "tau"), env)))


class _Basis:
    """Chart tangent basis, metric and shape matrix as jets in ``(sigma, s1, s2, tau)``."""

    def __init__(self, calc):
        g = calc.geo
        self.calc = calc
        self.space = calc.space
        self.B = calc.B
        self.S1, self.S2, self.T = calc.S1, calc.S2, calc.tau
        self.sigma = calc.sigma
        self.p, self.t1, self.t2, self.n = g.p, g.t1, g.t2, g.n
        g11, g12, g22 = tm.dot(self.t1, self.t1), tm.dot(self.t1, self.t2), tm.dot(self.t2, self.t2)
        det = g11 * g22 - g12 * g12
        self.Gi = ((g22 / det, -g12 / det), (-g12 / det, g11 / det))
        h11 = tm.dot(self.t1.deriv(S1), self.n)
        h12 = tm.dot(self.t1.deriv(S2), self.n)
        h22 = tm.dot(self.t2.deriv(S2), self.n)
        self.h = ((h11, h12), (h12, h22))
        self.M = self._mat(self.Gi, self.h)

    def lift(self, v):
        return v if isinstance(v, Taylor) else self.calc.const(v)

    @staticmethod
    def _mat(A, B):
        return tuple(tuple(A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)) for i in range(2))

    @staticmethod
    def apply(A, c):
        return (A[0][0] * c[0] + A[0][1] * c[1], A[1][0] * c[0] + A[1][1] * c[1])

    def vec(self, c):
        return _vec(c[0]) * self.t1 + _vec(c[1]) * self.t2

    def coords(self, w):
        return self.apply(self.Gi, (tm.dot(w, self.t1), tm.dot(w, self.t2)))

    def grad_perp(self, f):
        """Tangent coefficients of the surface gradient of a scalar jet."""
        return self.apply(self.Gi, (f.deriv(S1), f.deriv(S2)))

    def K(self, c):
        return self.apply(self.M, c)

    def Jinv(self, c):
        s = self.sigma
        a, b = 1.0 - s * self.M[0][0], -s * self.M[0][1]
        d, e = -s * self.M[1][0], 1.0 - s * self.M[1][1]
        det = a * e - b * d
        if np.any(det.value <= 1e-12):
            raise SingularJacobian("sigma at or beyond a focal distance (J singular)")
        return ((e * c[0] - b * c[1]) / det, (a * c[1] - d * c[0]) / det)

    def along(self, c, W):
        """``sum_i c_i d W / d s_i`` for a scalar or vector jet ``W``."""
        if W.c.ndim == 3:
            return _vec(c[0]) * W.deriv(S1) + _vec(c[1]) * W.deriv(S2)
        return c[0] * W.deriv(S1) + c[1] * W.deriv(S2)

    def tangential(self, W):
        return W - _vec(tm.dot(W, self.n)) * self.n


def _basis(chart, s, sigma, tau, order):
    try:
        calc = SurfaceCalc(chart, s, sigma, tau=tau, order=order, time=True)
    except TypeError as err:
        raise MotionError(f"chart has no tau-derivatives: {err}") from err
    return _Basis(calc)


def _require_time(motion):
    if motion.extracted and not getattr(motion.chart, "time_dependent", False):
        raise MotionError("chart is not time-dependent; supply the motion explicitly")


def _v(x):
    return x.value


def dtau_tangents(chart, motion, s, tau=0.0, order=4):
    """``d t_i / d tau`` at fixed ``s``, each of shape (B, 3)."""
    _require_time(motion)
    b = _basis(chart, s, 0.0, tau, order)
    vs, cv, vp = motion.jets(b)
    dvs = (vs.deriv(S1), vs.deriv(S2))
    Kv = b.apply(b.h, cv)  # t_i . K v_perp
    out = []
    for i, t in enumerate((b.t1, b.t2)):
        Kt = b.vec((b.M[0][i], b.M[1][i]))
        w = _vec(dvs[i] + Kv[i]) * b.n - _vec(vs) * Kt + b.tangential(vp.deriv(S1 + i))
        out.append(_v(w))
    return tuple(out)


def dtau_normal(chart, motion, s, tau=0.0, order=4):
    """``d n / d tau = -(grad_perp v_sigma + K v_perp)``."""
    _require_time(motion)
    b = _basis(chart, s, 0.0, tau, order)
    vs, cv, _ = motion.jets(b)
    g = b.grad_perp(vs)
    k = b.K(cv)
    return -_v(b.vec((g[0] + k[0], g[1] + k[1])))


def _rates(b, motion):
    vs, cv, vp = motion.jets(b)
    gv = b.grad_perp(vs)
    jg = b.Jinv(gv)
    ds = (-cv[0] + b.sigma * jg[0], -cv[1] + b.sigma * jg[1])
    return vs, cv, vp, ds


def _locate(chart, point, tau):
    if isinstance(point, tuple) and len(point) == 2:
        s, sigma = point
        s = np.atleast_2d(np.asarray(s, float))
        return s, np.broadcast_to(np.asarray(sigma, float), s[:, 0].shape)
    x = np.atleast_2d(np.asarray(point, float))
    co = signed_distance(chart, x, tau=tau)
    return co.s, co.sigma


def dt_coordinates(chart, motion, x, tau=0.0, order=4):
    """Cartesian time derivatives of ``(sigma, s)`` at fixed ambient ``x``.

    Returns ``dsigma = -v_sigma``, ``ds_t = sum_i (d_t s_i) t_i`` and the
    coefficients ``ds = d_t s_i`` themselves.
    """
    s, sigma = _locate(chart, x, tau)
    b = _basis(chart, s, sigma, tau, order)
    vs, _, _, ds = _rates(b, motion)
    return CoordinateRates(-vs.value, _v(b.vec(ds)), np.stack([ds[0].value, ds[1].value], -1))


def _field_jet(b, f):
    calc = b.calc
    return calc.scalar(f)


def dt_scalar(f, motion, point, tau=0.0, order=4):
    """Cartesian ``d_t f`` of a scalar field at ``point``.

    ``point`` is an array of ambient points or a tuple ``(s, sigma)``.
    """
    s, sigma = _locate(motion.chart, point, tau)
    b = _basis(motion.chart, s, sigma, tau, order)
    F = _field_jet(b, f)
    vs, cv, vp, ds = _rates(b, motion)
    out = F.deriv(TAU) - vs * F.deriv(SIG) + b.along(ds, F)
    return out.value


def _vector_jet(b, u):
    calc = b.calc
    if u.ambient:
        X = calc.position()
        return tm.stack([calc.lift(c) for c in u.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=calc.tau)])
    if np.any(calc.umbilic):
        raise UmbilicError("frame components are undefined at an isolated umbilic")
    us, u1, u2 = calc.vector(u)
    g = calc.geo
    return _vec(us) * g.n + _vec(u1) * g.e1 + _vec(u2) * g.e2


def dt_vector(u, motion, point, tau=0.0, order=4):
    """Cartesian ``d_t u`` of a vector field at ``point``, shape (B, 3).

    Normal and tangential parts are assembled separately; the moving basis
    contributes ``d_tau n`` and ``d_tau t_i`` through their own evolution formulas.
    """
    s, sigma = _locate(motion.chart, point, tau)
    b = _basis(motion.chart, s, sigma, tau, order)
    U = _vector_jet(b, u)
    vs, cv, vp, ds = _rates(b, motion)
    n = b.n
    us = tm.dot(U, n)
    up = U - _vec(us) * n
    cu = b.coords(up)

    gvs = b.grad_perp(vs)
    Kv = b.K(cv)
    dn = (-(gvs[0] + Kv[0]), -(gvs[1] + Kv[1]))  # tangent coefficients of d_tau n
    # d_tau u_perp = (d_tau u_i) t_i + (u_perp . (grad v_sigma + K v_perp)) n + u_perp . (grad v_perp . Pi - v_sigma K)
    hu = b.apply(b.h, cu)
    u_dot_dn = (cu[0] * vs.deriv(S1) + cu[1] * vs.deriv(S2)) + (hu[0] * cv[0] + hu[1] * cv[1])
    Ku = b.K(cu)
    dtau_up = (b.vec((cu[0].deriv(TAU), cu[1].deriv(TAU))) + _vec(u_dot_dn) * n
               + b.tangential(b.along(cu, vp)) - _vec(vs) * b.vec(Ku))

    hd = b.apply(b.h, ds)  # t_i . K w with w = sum ds_i t_i
    normal = (us.deriv(TAU) - vs * us.deriv(SIG) + b.along(ds, us)
              + (cu[0] * hd[0] + cu[1] * hd[1]))
    Kw = b.K(ds)
    tang = (dtau_up + _vec(us) * b.vec(dn) - _vec(vs) * up.deriv(SIG)
            + b.tangential(b.along(ds, up)) - _vec(us) * b.vec(Kw))
    return _v(_vec(normal) * n + tang)


# -- finite-difference contracts ------------------------------------------------
def fd_dtau_tangents(chart, s, tau=0.0, h=FD_TAU):
    from .surface_frames import tangent_basis

    a = tangent_basis(chart, s, tau=tau + h)
    c = tangent_basis(chart, s, tau=tau - h)
    return ((a.t1 - c.t1) / (2 * h), (a.t2 - c.t2) / (2 * h))


def fd_dtau_normal(chart, s, tau=0.0, h=FD_TAU):
    from .surface_frames import tangent_basis

    return (tangent_basis(chart, s, tau=tau + h).n - tangent_basis(chart, s, tau=tau - h).n) / (2 * h)


def fd_dsigma(chart, x, tau=0.0, h=FD_TAU):
    """Re-projection estimate of ``d_t sigma`` at fixed ambient ``x``."""
    a = signed_distance(chart, x, tau=tau + h).sigma
    c = signed_distance(chart, x, tau=tau - h).sigma
    return (a - c) / (2 * h)
