"""Vector calculus in orthogonal tube coordinates and evolving-curve rates.

Frame order is ``(t_s, t_sigma, t_theta)`` (right-handed) and vector
components are ``(u_s, u_sigma, u_theta)``.  The connection coefficients are

    A = kappa cs / h_s,   B = -kappa sn / h_s,   C = 1 / sigma,

with ``cs = cos(theta + phi)``, ``sn = sin(theta + phi)`` and
``h_s = 1 - sigma kappa cs``.
"""

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import taylor as tm
from ._fault import kappa_offset
from .curve_frames import (CollarError, CurveError, bishop_angle, frenet, tube_from_cartesian,
                           tube_jets)
from .surface_calculus import FrameTensor, FrameVector
from .taylor import Taylor

S_VAR, TH_VAR, SG_VAR, TAU_VAR = 0, 1, 2, 3
SIGMA_MIN = 1e-6
KAPPA_MIN = 1e-12
FD_TAU = 1e-5
DEFAULT_ORDER = 6


class OnAxisError(CurveError):
    pass


# -- the exact calculus ----------------------------------------------------------
class TubeCalc:
    """Jets at a batch of tube points in ``(s, theta, sigma[, tau])``."""

    def __init__(self, curve, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, time=False, phi0=0.0,
                 rotate=True, check=True):
        sigma = np.asarray(sigma, float)
        if check and np.any(sigma < SIGMA_MIN):
            raise OnAxisError(f"tube operators need sigma >= {SIGMA_MIN:g} (on-axis frame is undefined)")
        self.tj = tj = tube_jets(curve, s, theta, sigma, tau=tau, order=order, time=time, phi0=phi0,
                                 rotate=rotate)
        if check and np.any(tj.hs.value <= 0):
            raise CollarError("point beyond the focal distance (h_s <= 0)")
        self.curve = curve
        self.space = tj.space
        self.B = tj.S.shape[0] if tj.S.shape else 1
        self.time = time
        fr = tj.fr
        self.kappa, self.omega = fr.kappa + kappa_offset(), fr.omega
        self.cs, self.sn, self.hs = tj.cs, tj.sn, tj.hs
        if kappa_offset():
            self.hs = 1.0 - tj.SG * self.kappa * tj.cs
        self.sigma = tj.SG
        self.A = self.kappa * tj.cs / self.hs
        self.B_ = -self.kappa * tj.sn / self.hs
        self.C = 1.0 / (tj.SG if check else tm.where(sigma > 0, tj.SG, 1.0))
        self.tau = tj.T

    def ds(self, F):
        return self.tj.ds(F)

    def dth(self, F):
        return F.deriv(TH_VAR)

    def dsig(self, F):
        return F.deriv(SG_VAR)

    def lift(self, v):
        return v if isinstance(v, Taylor) else self.space.constant(np.broadcast_to(np.asarray(v, float), self.tj.S.shape))

    def env(self):
        tj = self.tj
        return {"s": tj.S, "theta": tj.TH, "sigma": tj.SG, "tau": tj.T}

    def scalar(self, field):
        if field.is_vector:
            raise ValueError("expected a scalar field")
        if field.ambient:
            X = self.tj.x
            return self.lift(field.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=self.tau))
        return self.lift(field.evaluate(**self.env()))

    def cartesian(self, field):
        X = self.tj.x
        return tm.stack([self.lift(c) for c in field.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=self.tau)])

    def vector(self, field):
        """Components ``(u_s, u_sigma, u_theta)``."""
        if not field.is_vector:
            raise ValueError("expected a vector field")
        if field.ambient:
            U = self.cartesian(field)
            tj = self.tj
            return (tm.dot(U, tj.ts), tm.dot(U, tj.tsig), tm.dot(U, tj.tth))
        return tuple(self.lift(c) for c in field.evaluate(**self.env()))

    def frame(self):
        tj = self.tj
        return np.stack([tj.ts.value, tj.tsig.value, tj.tth.value], -2)


# -- operator formulas --------------------------------------------------------------
def op_gradient(c, f):
    return (c.ds(f) / c.hs, c.dsig(f), c.dth(f) / c.sigma)


def op_vector_gradient(c, u):
    us, ug, ut = u
    A, B, C, hs, sg = c.A, c.B_, c.C, c.hs, c.sigma
    return [
        [c.ds(us) / hs - A * ug - B * ut, c.ds(ug) / hs + A * us, c.ds(ut) / hs + B * us],
        [c.dsig(us), c.dsig(ug), c.dsig(ut)],
        [c.dth(us) / sg, c.dth(ug) / sg - C * ut, c.dth(ut) / sg + C * ug],
    ]


def op_divergence(c, u):
    us, ug, ut = u
    return c.ds(us) / c.hs + c.dsig(ug) + c.dth(ut) / c.sigma + (c.C - c.A) * ug - c.B_ * ut


def op_laplacian(c, f):
    hs, sg = c.hs, c.sigma
    dsf = c.ds(f)
    return (c.ds(dsf) / (hs * hs) + c.dsig(c.dsig(f)) + c.dth(c.dth(f)) / (sg * sg)
            - c.ds(hs) / (hs * hs * hs) * dsf + (c.C - c.A) * c.dsig(f) - c.B_ / sg * c.dth(f))


def op_curl(c, u):
    us, ug, ut = u
    hs, sg = c.hs, c.sigma
    return (c.dsig(ut) - c.dth(ug) / sg + c.C * ut,
            c.dth(us) / sg - c.ds(ut) / hs - c.B_ * us,
            c.ds(ug) / hs - c.dsig(us) + c.A * us)


def op_vector_laplacian(c, u):
    us, ug, ut = u
    A, B, C, hs, sg = c.A, c.B_, c.C, c.hs, c.sigma
    dA, dB = c.ds(A), c.ds(B)
    comp_s = (op_laplacian(c, us) - 2 * A / hs * c.ds(ug) - 2 * B / hs * c.ds(ut)
              - (A * A + B * B) * us - dA / hs * ug - dB / hs * ut)
    comp_g = (op_laplacian(c, ug) + 2 * A / hs * c.ds(us) - 2 * C / sg * c.dth(ut)
              + dA / hs * us - (A * A + C * C) * ug + (-A * B + B * C) * ut)
    comp_t = (op_laplacian(c, ut) + 2 * B / hs * c.ds(us) + 2 * C / sg * c.dth(ug)
              + dB / hs * us + (-A * B - B * C) * ug - (B * B + C * C) * ut)
    return (comp_s, comp_g, comp_t)


# -- public operators -------------------------------------------------------------------
def _vals(comps):
    return np.stack([x.value for x in comps], -1)


def _vector_out(c, comps):
    fr = _vals(comps)
    return FrameVector(fr, np.einsum("...k,...kj->...j", fr, c.frame()), np.zeros(fr.shape[:-1], bool))


def _tensor_out(c, rows):
    fr = np.stack([np.stack([x.value for x in row], -1) for row in rows], -2)
    E = c.frame()
    cart = np.einsum("...ai,...ac,...cj->...ij", E, fr, E)
    return FrameTensor(fr, cart, np.zeros(fr.shape[:-2], bool))


def _calc(curve, s, theta, sigma, tau, order, phi0):
    return TubeCalc(curve, s, theta, sigma, tau=tau, order=order, phi0=phi0)


def tube_gradient(curve, f, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return _vector_out(c, op_gradient(c, c.scalar(f)))


def tube_vector_gradient(curve, u, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    """``grad u``; first index is the derivative direction."""
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return _tensor_out(c, op_vector_gradient(c, c.vector(u)))


def tube_divergence(curve, u, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return op_divergence(c, c.vector(u)).value


def tube_scalar_laplacian(curve, f, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return op_laplacian(c, c.scalar(f)).value


def tube_curl(curve, u, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return _vector_out(c, op_curl(c, c.vector(u)))


def tube_vector_laplacian(curve, u, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    c = _calc(curve, s, theta, sigma, tau, order, phi0)
    return _vector_out(c, op_vector_laplacian(c, c.vector(u)))


# -- evolving curves ---------------------------------------------------------------------
class CurveMotion:
    """Curve velocity ``d p/d tau = v_t t + v_n n + v_b b``.

    With no components the velocity is extracted from the chart's ``tau``
    dependence; otherwise ``(v_t, v_n, v_b)`` are expressions or callables
    in ``(s, tau)``.
    """

    def __init__(self, curve, components=None):
        self.curve = curve
        self.extracted = components is None
        if components is not None:
            if len(components) != 3:
                raise ValueError("curve motion takes three Frenet components (v_t, v_n, v_b)")
            self._comps = [c if callable(c) else ex.parse_expr(str(c), {"s", "tau"}) for c in components]

    @classmethod
    def static(cls, curve):
        return cls(curve, (0.0, 0.0, 0.0))

    def frenet_components(self, c):
        fr = c.tj.fr
        if self.extracted:
            if not c.time:
                raise ValueError("motion extraction needs time jets")
            v = fr.p.deriv(TAU_VAR)
            return tm.dot(v, fr.that), tm.dot(v, fr.n), tm.dot(v, fr.b)
        env = {"s": c.tj.S, "tau": c.tj.T}
        out = []
        for comp in self._comps:
            val = comp(env["s"], env["tau"]) if callable(comp) else ex.evaluate(comp, env)
            out.append(c.lift(val))
        return tuple(out)


@dataclass
class FrenetRates:
    """``d_tau (t, n, b) = W (t, n, b)`` with ``W = [[0, a, b], [-a, 0, g], [-b, -g, 0]]``."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    matrix: np.ndarray
    singular: np.ndarray


@dataclass
class TubeFrameRates:
    alpha_p: np.ndarray
    beta_p: np.ndarray
    gamma_p: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    dtau_matrix: np.ndarray
    dt_matrix: np.ndarray


def _antisym(x, y, z):
    zero = np.zeros_like(x)
    return np.stack([np.stack([zero, x, y], -1), np.stack([-x, zero, z], -1), np.stack([-y, -z, zero], -1)], -2)


class _Kin:
    """Velocity components and frame rates as jets at a batch of tube points."""

    def __init__(self, c, motion):
        self.c = c
        fr = c.tj.fr
        vt, vn, vb = motion.frenet_components(c)
        k, w = fr.kappa, fr.omega
        self.vt, self.vn, self.vb = vt, vn, vb
        self.singular = k.value < KAPPA_MIN
        ksafe = tm.where(self.singular, 1.0, k)
        self.alpha = k * vt - w * vb + c.ds(vn)
        self.beta = w * vn + c.ds(vb)
        self.gamma = tm.where(self.singular, np.nan, (w * self.alpha + c.ds(self.beta)) / ksafe)
        cs, sn = c.cs, c.sn
        self.alpha_p = cs * self.alpha + sn * self.beta
        self.beta_p = -sn * self.alpha + cs * self.beta
        self.dphi = c.tj.phi.deriv(TAU_VAR) if c.time else c.lift(0.0)
        self.gamma_p = self.gamma + self.dphi
        self.v_sigma = cs * vn + sn * vb
        self.v_theta = -sn * vn + cs * vb
        sg, hs = c.sigma, c.hs
        self.a = (self.alpha_p - vt * k * cs) / hs
        self.b = self.beta_p + c.B_ * (sg * self.alpha_p - vt)
        axis = sg.value == 0
        sgs = tm.where(axis, 1.0, sg)
        self.cc = tm.where(axis, np.nan, -self.v_theta / sgs)
        # coordinate rates at fixed x
        self.dts_arc = -(vt - sg * self.alpha_p) / hs  # d_t s times |t|
        self.dt_sigma = -self.v_sigma
        self.dt_theta = tm.where(axis, np.nan, -(self.v_theta + sg * self.gamma_p) / sgs)

    def dt(self, F):
        c = self.c
        return F.deriv(TAU_VAR) + self.dts_arc * c.ds(F) + self.dt_sigma * c.dsig(F) + self.dt_theta * c.dth(F)


def _time_calc(curve, s, theta, sigma, tau, order, phi0, check=True):
    return TubeCalc(curve, s, theta, sigma, tau=tau, order=order, time=True, phi0=phi0, check=check)


def _need_time(motion):
    if motion.extracted and not getattr(motion.curve, "time_dependent", False):
        raise ValueError("curve is not time-dependent; supply the motion explicitly")


def dt_frenet(curve, motion, s, tau=0.0, order=DEFAULT_ORDER):
    """``alpha, beta, gamma`` and the rate matrix of the Frenet frame (``gamma`` NaN where kappa = 0)."""
    _need_time(motion)
    s = np.asarray(s, float)
    c = _time_calc(curve, s, np.zeros_like(s), np.zeros_like(s), tau, order, 0.0, check=False)
    k = _Kin(c, motion)
    al, be, ga = k.alpha.value, k.beta.value, k.gamma.value
    return FrenetRates(al, be, ga, _antisym(al, be, ga), k.singular)


def frenet_constraint_residuals(curve, motion, s, tau=0.0, order=DEFAULT_ORDER):
    """``(c1, c2)`` from orthonormality of the moving Frenet frame.

    ``c1 = nabla_s v_t - kappa v_n - d_tau|t| / |t|``: the last term is the
    stretching rate of a non-arclength parameter and vanishes for arclength
    charts.  ``c2`` is the curvature-evolution constraint.
    """
    s = np.asarray(s, float)
    c = _time_calc(curve, s, np.zeros_like(s), np.zeros_like(s), tau, order, 0.0, check=False)
    fr = c.tj.fr
    vt, vn, vb = motion.frenet_components(c)
    k, w = fr.kappa, fr.omega
    stretch = fr.speed.deriv(TAU_VAR) / fr.speed
    c1 = c.ds(vt) - k * vn - stretch
    c2 = (-vb * c.ds(w) - 2 * w * c.ds(vb) - k.deriv(TAU_VAR) + c.ds(c.ds(vn)) + vt * c.ds(k)
          + (k * k - w * w) * vn)
    return c1.value, c2.value


def dt_tube_frame(curve, motion, s, theta, sigma, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    """Rates of the tube frame: ``alpha', beta', gamma'`` (fixed coordinates) and ``a, b, c`` (fixed x).

    ``a = (alpha' - v_t kappa cs) / h_s``, ``b = beta' + B (sigma alpha' - v_t)``,
    ``c = -v_theta / sigma``.
    """
    _need_time(motion)
    c = _time_calc(curve, s, theta, sigma, tau, order, phi0)
    k = _Kin(c, motion)
    if np.any(k.singular):
        raise CurveError("frame rates need kappa > 0")
    ap, bp, gp = k.alpha_p.value, k.beta_p.value, k.gamma_p.value
    a, b, cc = k.a.value, k.b.value, k.cc.value
    return TubeFrameRates(ap, bp, gp, a, b, cc, _antisym(ap, bp, gp), _antisym(a, b, cc))


def _locate(curve, point, tau, phi0):
    if isinstance(point, tuple) and len(point) == 3:
        s, th, sg = (np.asarray(v, float) for v in point)
        return np.broadcast_arrays(s, th, sg)
    co = tube_from_cartesian(curve, point, tau=tau, phi0=phi0)
    return co.s, co.theta, co.sigma


def dt_tube_coordinates(curve, motion, x, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    """``(d_t s, d_t sigma, d_t theta)`` at fixed ambient ``x``."""
    s, th, sg = _locate(curve, x, tau, phi0)
    c = _time_calc(curve, s, th, sg, tau, order, phi0)
    k = _Kin(c, motion)
    speed = c.tj.fr.speed.value
    return k.dts_arc.value / speed, k.dt_sigma.value, k.dt_theta.value


def dt_scalar_tube(f, motion, point, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    """Cartesian ``d_t f``; ``point`` is ambient ``x`` or a tuple ``(s, theta, sigma)``."""
    curve = motion.curve
    s, th, sg = _locate(curve, point, tau, phi0)
    c = _time_calc(curve, s, th, sg, tau, order, phi0)
    k = _Kin(c, motion)
    F = c.scalar(f)
    out = (F.deriv(TAU_VAR) - (k.vt - sg * k.alpha_p) / c.hs * c.ds(F) - k.v_sigma * c.dsig(F)
           - (k.v_theta + sg * k.gamma_p) / sg * c.dth(F))
    return out.value


def dt_vector_tube(u, motion, point, tau=0.0, order=DEFAULT_ORDER, phi0=0.0):
    """Cartesian ``d_t u`` as a Cartesian vector, assembled from component rates and ``a, b, c``."""
    curve = motion.curve
    s, th, sg = _locate(curve, point, tau, phi0)
    c = _time_calc(curve, s, th, sg, tau, order, phi0)
    k = _Kin(c, motion)
    us, ug, ut = c.vector(u)
    a, b, cc = k.a, k.b, k.cc
    comps = (k.dt(us) - a * ug - b * ut, k.dt(ug) + a * us - cc * ut, k.dt(ut) + b * us + cc * ug)
    return np.einsum("...k,...kj->...j", _vals(comps), c.frame())


def torsion_evolution(curve, motion, s, tau=0.0, order=8):
    """``d_tau omega`` at fixed ``s`` from the velocity's Frenet components."""
    s = np.asarray(s, float)
    c = _time_calc(curve, s, np.zeros_like(s), np.zeros_like(s), tau, order, 0.0, check=False)
    fr = c.tj.fr
    if np.any(fr.kappa.value < KAPPA_MIN):
        raise CurveError("torsion evolution needs kappa > 0")
    vt, vn, vb = motion.frenet_components(c)
    k, w, D = fr.kappa, fr.omega, c.ds
    dk, dw = D(k), D(w)
    dvb, dvn = D(vb), D(vn)
    d2vb, d2vn = D(dvb), D(dvn)
    out = (w * w * vb * dk / (k * k) - dk * d2vb / (k * k) - w * w * dvb / k - 2 * w * vb * dw / k
           + k * dvb + D(d2vb) / k - 2 * w * dk * dvn / (k * k) - vn * dk * dw / (k * k)
           + 2 * w * d2vn / k + 3 * dw * dvn / k + vn * D(dw) / k + vt * dw + 2 * k * w * vn)
    return out.value


# -- finite-difference contracts --------------------------------------------------------
def fd_dphi_tau(curve, s, tau=0.0, phi0=0.0, h=FD_TAU):
    """``d phi/d tau`` by central differences over two Bishop integrations."""
    a = bishop_angle(curve, tau=tau + h, phi0=phi0)
    b = bishop_angle(curve, tau=tau - h, phi0=phi0)
    n = max(a.n, b.n) // 2
    a = bishop_angle(curve, tau=tau + h, phi0=phi0, n_min=n)
    b = bishop_angle(curve, tau=tau - h, phi0=phi0, n_min=n)
    return (a(s) - b(s)) / (2 * h)


def fd_torsion_rate(curve, s, tau=0.0, h=1e-4):
    return (frenet(curve, s, tau=tau + h).omega - frenet(curve, s, tau=tau - h).omega) / (2 * h)


def fd_frenet_rates(curve, s, tau=0.0, h=FD_TAU):
    """Central differences in ``tau`` of ``(t, n, b)``, shape (..., 3, 3)."""
    a, b = frenet(curve, s, tau=tau + h), frenet(curve, s, tau=tau - h)
    return np.stack([(a.t - b.t), (a.n - b.n), (a.b - b.b)], -2) / (2 * h)
