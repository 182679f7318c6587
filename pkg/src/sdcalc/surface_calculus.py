"""Differential operators in signed-distance coordinates around a surface.

The operator formulas are written once, against a small "calculus" object
that supplies the normal coordinate ``sigma``, the curvature data, the
normal derivative ``ds`` and the principal directional derivatives ``nab``.
:class:`SurfaceCalc` supplies these as exact Taylor jets; the asymptotics
module supplies eps-series, and the very same formulas then produce the
boundary-layer expansions.

Vector components are ordered ``(u_sigma, u_1, u_2)`` in the Darboux frame
``(n, t1, t2)``.  Tensors follow ``(grad u)_ab = (t_a . grad)(u . t_b)``-style
indexing: the first index is the derivative direction.
"""

from dataclasses import dataclass

import numpy as np

from . import taylor as tm
from ._fault import kappa_offset
from .surface_frames import UmbilicError, _vec, darboux_jets
from .taylor import Taylor

DEFAULT_ORDER = 6


class SingularJacobian(ValueError):
    pass


# -- the exact calculus -------------------------------------------------------
class SurfaceCalc:
    """Exact calculus at a batch of collar points ``(s, sigma)``.

    Jets live in the variables ``(sigma, s1, s2)`` plus ``tau`` when
    ``time=True``.  Geometry is independent of ``sigma``.
    """

    def __init__(self, chart, s, sigma, tau=0.0, order=DEFAULT_ORDER, time=False, ref=None):
        s = np.atleast_2d(np.asarray(s, float))
        sigma = np.broadcast_to(np.asarray(sigma, float), s[:, 0].shape).copy()
        nvars = 4 if time else 3
        self.chart = chart
        self.geo = geo = darboux_jets(chart, s, order=order, nvars=nvars, s_vars=(1, 2), tau=tau,
                                      tau_var=3 if time else None, ref=ref)
        sp = geo.space
        self.space = sp
        self.B = len(s)
        self.s = s
        self.sigma_value = sigma
        self.sigma = sp.variable(0, sigma)
        self.S1 = sp.variable(1, s[:, 0])
        self.S2 = sp.variable(2, s[:, 1])
        self.tau = sp.variable(3, np.full(self.B, float(tau))) if time else tau
        self.k1, self.k2, self.w1, self.w2 = geo.k1 + kappa_offset(), geo.k2, geo.w1, geo.w2
        self.J1 = 1.0 - self.sigma * self.k1
        self.J2 = 1.0 - self.sigma * self.k2
        self.detJ = self.J1 * self.J2
        if np.any(self.J1.value <= 1e-12) or np.any(self.J2.value <= 1e-12):
            raise SingularJacobian("sigma at or beyond a focal distance (J singular)")
        self.umbilic = geo.umbilic

    def ds(self, F):
        return F.deriv(0)

    def nab(self, i, F):
        return self.geo.nabla(i, F)

    def const(self, v):
        return self.space.constant(np.broadcast_to(np.asarray(v, float), (self.B,)))

    def position(self):
        return self.geo.p + _vec(self.sigma) * self.geo.n

    def env(self):
        return {"sigma": self.sigma, "s1": self.S1, "s2": self.S2, "tau": self.tau}

    def lift(self, v):
        return v if isinstance(v, Taylor) else self.const(v)

    def scalar(self, field):
        """Jet of a scalar field at the batch."""
        if field.is_vector:
            raise ValueError("expected a scalar field")
        if field.ambient:
            X = self.position()
            return self.lift(field.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=self.tau))
        return self.lift(field.evaluate(**self.env()))

    def vector(self, field):
        """Frame components ``(u_sigma, u_1, u_2)`` of a vector field."""
        if not field.is_vector:
            raise ValueError("expected a vector field")
        if field.ambient:
            X = self.position()
            U = [self.lift(c) for c in field.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=self.tau)]
            U = tm.stack(U)
            return (tm.dot(U, self.geo.n), tm.dot(U, self.geo.e1), tm.dot(U, self.geo.e2))
        return tuple(self.lift(c) for c in field.evaluate(**self.env()))

    def frame(self):
        """Frame vectors ``(n, t1, t2)`` as a (B, 3, 3) array, rows are vectors."""
        g = self.geo
        return np.stack([g.n.value, g.e1.value, g.e2.value], 1)


# -- operator formulas (generic over jets and eps-series) ----------------------
def _J(c):
    J1 = 1.0 - c.sigma * c.k1
    J2 = 1.0 - c.sigma * c.k2
    return J1, J2, J1 * J2


def surf_div_perp(c, w1, w2):
    """``div_perp w = nabla_1 w_1 + nabla_2 w_2 + w2 w_1 - w1 w_2`` (rotation coefficients w1, w2)."""
    return c.nab(0, w1) + c.nab(1, w2) + c.w2 * w1 - c.w1 * w2


def surf_div_rot(c, w1, w2):
    """Rotated divergence ``(n x grad_perp) . w``."""
    return c.nab(0, w2) + c.w1 * w1 - c.nab(1, w1) + c.w2 * w2


def op_gradient(c, f):
    J1, J2, _ = _J(c)
    return (c.ds(f), c.nab(0, f) / J1, c.nab(1, f) / J2)


def op_divergence(c, u):
    us, u1, u2 = u
    J1, J2, dJ = _J(c)
    return (c.ds(dJ * us) + surf_div_perp(c, J2 * u1, J1 * u2)) / dJ


def op_laplacian(c, f):
    J1, J2, dJ = _J(c)
    return (c.ds(dJ * c.ds(f)) + surf_div_perp(c, (J2 / J1) * c.nab(0, f), (J1 / J2) * c.nab(1, f))) / dJ


def op_curl(c, u):
    us, u1, u2 = u
    J1, J2, dJ = _J(c)
    # rotated tangential part n x u_perp = (-u2, u1); its adjugate image
    r1 = -(J2 * u2)
    r2 = J1 * u1
    normal = -surf_div_perp(c, r1, r2) / dJ
    # Jhat^{-1} (ds(Jhat u^perp) - grad^perp u_sigma), grad^perp = (-nabla_2, nabla_1)
    c1 = (c.ds(r1) + c.nab(1, us)) / J2
    c2 = (c.ds(r2) - c.nab(0, us)) / J1
    return (normal, c1, c2)


def _curlcurl_parts(c, u):
    us, u1, u2 = u
    J1, J2, dJ = _J(c)
    W1 = (J2 / J1) * (c.ds(J1 * u1) - c.nab(0, us))
    W2 = (J1 / J2) * (c.ds(J2 * u2) - c.nab(1, us))
    Rq = surf_div_rot(c, J1 * u1, J2 * u2) / dJ
    Q = c.ds(dJ * us) / dJ
    P = surf_div_perp(c, J2 * u1, J1 * u2) / dJ
    return J1, J2, dJ, W1, W2, Rq, Q, P


def op_curl_curl(c, u):
    """``-curl curl u``."""
    J1, J2, dJ, W1, W2, Rq, Q, P = _curlcurl_parts(c, u)
    normal = -surf_div_perp(c, W1, W2) / dJ
    t1 = c.ds(W1) / J2 - c.nab(1, Rq) / J2
    t2 = c.ds(W2) / J1 + c.nab(0, Rq) / J1
    return (normal, t1, t2)


def op_vector_laplacian(c, u):
    J1, J2, dJ, W1, W2, Rq, Q, P = _curlcurl_parts(c, u)
    D = Q + P
    normal = c.ds(D) - surf_div_perp(c, W1, W2) / dJ
    # Jhat^{-1} ds W + J^{-1} grad_perp Q + (vector surface Laplacian)
    t1 = c.ds(W1) / J2 + c.nab(0, Q) / J1 + c.nab(0, P) / J1 - c.nab(1, Rq) / J2
    t2 = c.ds(W2) / J1 + c.nab(1, Q) / J2 + c.nab(1, P) / J2 + c.nab(0, Rq) / J1
    return (normal, t1, t2)


def _tangential_derivs(c, u1, u2):
    """``(nabla_i u_perp) . t_j`` for i, j in {1, 2}."""
    R = (c.w1, c.w2)
    return [[c.nab(i, u1) - u2 * R[i], c.nab(i, u2) + u1 * R[i]] for i in range(2)]


def op_vector_gradient(c, u):
    us, u1, u2 = u
    J1, J2, _ = _J(c)
    Ji = (J1, J2)
    k = (c.k1, c.k2)
    ut = (u1, u2)
    D = _tangential_derivs(c, u1, u2)
    rows = [[c.ds(us), c.ds(u1), c.ds(u2)]]
    for i in range(2):
        row = [(c.nab(i, us) + k[i] * ut[i]) / Ji[i]]
        for j in range(2):
            g = D[i][j] - us * k[i] if i == j else D[i][j]
            row.append(g / Ji[i])
        rows.append(row)
    return rows


def op_convective(c, u):
    us, u1, u2 = u
    J1, J2, _ = _J(c)
    Ji = (J1, J2)
    k = (c.k1, c.k2)
    ut = (u1, u2)
    D = _tangential_derivs(c, u1, u2)
    normal = us * c.ds(us) + sum(ut[i] * (c.nab(i, us) + k[i] * ut[i]) / Ji[i] for i in range(2))
    tang = []
    for j in range(2):
        acc = us * c.ds(ut[j])
        for i in range(2):
            g = D[i][j] - k[i] * us if i == j else D[i][j]
            acc = acc + ut[i] * g / Ji[i]
        tang.append(acc)
    return (normal, tang[0], tang[1])


def op_hessian(c, f):
    """The nine-term frame expansion of ``grad grad f``."""
    J1, J2, dJ = _J(c)
    s = c.sigma
    k1, k2, w1, w2 = c.k1, c.k2, c.w1, c.w2
    df = c.ds(f)
    n1 = c.nab(0, f)
    n2 = c.nab(1, f)
    n1d = c.nab(0, df)
    n2d = c.nab(1, df)
    dk11 = c.nab(0, k1)
    dk12 = c.nab(0, k2)
    dk21 = c.nab(1, k1)
    dk22 = c.nab(1, k2)
    H = [[None] * 3 for _ in range(3)]
    H[0][0] = c.ds(df)
    H[0][1] = k1 * n1 / (J1 * J1) + c.ds(n1) / J1
    H[0][2] = k2 * n2 / (J2 * J2) + c.ds(n2) / J2
    H[1][1] = -k1 * df / J1 + c.nab(0, n1) / (J1 * J1) - w1 * n2 / dJ + s * dk11 * n1 / (J1 * J1 * J1)
    H[1][2] = c.nab(0, n2) / dJ + w1 * n1 / (J1 * J1) + s * dk12 * n2 / (dJ * J2)
    H[1][0] = n1d / J1 + k1 * n1 / (J1 * J1)
    H[2][2] = -k2 * df / J2 + c.nab(1, n2) / (J2 * J2) + w2 * n1 / dJ + s * dk22 * n2 / (J2 * J2 * J2)
    H[2][1] = c.nab(1, n1) / dJ - w2 * n2 / (J2 * J2) + s * dk21 * n1 / (dJ * J1)
    H[2][0] = n2d / J2 + k2 * n2 / (J2 * J2)
    return H


def op_commutators(c, f):
    """Residuals of ``[ds, nabla_i] f = 0`` and the ``[nabla_1, nabla_2]`` identity."""
    J1, J2, dJ = _J(c)
    s = c.sigma
    n1 = c.nab(0, f)
    n2 = c.nab(1, f)
    r_s1 = c.ds(n1) - c.nab(0, c.ds(f))
    r_s2 = c.ds(n2) - c.nab(1, c.ds(f))
    lhs = c.nab(0, n2) - c.nab(1, n1)
    rhs = (-dJ / (J1 * J1) * c.w1 * n1 - dJ / (J2 * J2) * c.w2 * n2
           + s * (c.nab(1, c.k1) / J1 * n1 - c.nab(0, c.k2) / J2 * n2))
    return (r_s1, r_s2, lhs - rhs)


# -- umbilic fallback in the chart's orthonormalised frame ----------------------
class _GramSchmidtCalc:
    """Full-shape-matrix calculus in the Gram-Schmidt frame; no principal directions needed."""

    def __init__(self, calc):
        g = calc.geo
        self.c = calc
        self.ds = calc.ds
        sv = g.s_vars
        t1, t2 = g.t1, g.t2
        l1 = tm.norm(t1)
        self.b1 = t1 / _vec(l1)
        T12 = tm.dot(t2, self.b1)
        w = t2 - _vec(T12) * self.b1
        T22 = tm.norm(w)
        self.b2 = w / _vec(T22)
        i11, i12, i22 = 1.0 / l1, -T12 / (l1 * T22), 1.0 / T22
        self.D = ((i11, 0.0 * i11), (i12, i22))
        self.sv = sv
        n = g.n
        h11 = tm.dot(t1.deriv(sv[0]), n)
        h12 = tm.dot(t1.deriv(sv[1]), n)
        h22 = tm.dot(t2.deriv(sv[1]), n)
        self.a = i11 * i11 * h11
        self.b = i11 * (h11 * i12 + h12 * i22)
        self.d = i12 * i12 * h11 + 2.0 * i12 * i22 * h12 + i22 * i22 * h22
        self.r1 = tm.dot(self.nabv(0, self.b1), self.b2)
        self.r2 = tm.dot(self.nabv(1, self.b1), self.b2)

    def nab(self, k, F):
        a, b = self.sv
        return self.D[k][0] * F.deriv(a) + self.D[k][1] * F.deriv(b)

    def nabv(self, k, F):
        a, b = self.sv
        return _vec(self.D[k][0]) * F.deriv(a) + _vec(self.D[k][1]) * F.deriv(b)

    def divp(self, w1, w2):
        return self.nab(0, w1) + self.nab(1, w2) + self.r2 * w1 - self.r1 * w2

    def jac(self):
        s = self.c.sigma
        J11, J12, J22 = 1.0 - s * self.a, -s * self.b, 1.0 - s * self.d
        det = J11 * J22 - J12 * J12
        return (J22, -J12, J11), det  # adjugate entries (11, 12, 22)

    def gradient(self, f):
        (A11, A12, A22), det = self.jac()
        d1, d2 = self.nab(0, f), self.nab(1, f)
        return (self.ds(f), (A11 * d1 + A12 * d2) / det, (A12 * d1 + A22 * d2) / det)

    def divergence(self, us, U):
        (A11, A12, A22), det = self.jac()
        u1, u2 = tm.dot(U, self.b1), tm.dot(U, self.b2)
        return (self.ds(det * us) + self.divp(A11 * u1 + A12 * u2, A12 * u1 + A22 * u2)) / det

    def laplacian(self, f):
        (A11, A12, A22), det = self.jac()
        d1, d2 = self.nab(0, f), self.nab(1, f)
        # adj(J) J^{-1} = adj(J)^2 / det
        M11 = (A11 * A11 + A12 * A12) / det
        M12 = (A11 * A12 + A12 * A22) / det
        M22 = (A12 * A12 + A22 * A22) / det
        return (self.ds(det * self.ds(f)) + self.divp(M11 * d1 + M12 * d2, M12 * d1 + M22 * d2)) / det


# -- public API ------------------------------------------------------------------
@dataclass
class FrameVector:
    """Vector result: components in the Darboux frame ``(n, t1, t2)`` and Cartesian."""

    frame: np.ndarray
    cartesian: np.ndarray
    umbilic: np.ndarray


@dataclass
class FrameTensor:
    frame: np.ndarray
    cartesian: np.ndarray
    umbilic: np.ndarray


def _vals(comps):
    return np.stack([c.value for c in comps], -1)


def _check_umbilic(calc, on_error):
    if np.any(calc.umbilic) and on_error == "raise":
        raise UmbilicError("operator needs rotation coefficients at an isolated umbilic point")


def _vector_out(calc, comps):
    fr = _vals(comps)
    cart = np.einsum("bk,bkj->bj", fr, calc.frame())
    return FrameVector(fr, cart, calc.umbilic.copy())


def _tensor_out(calc, rows):
    fr = np.stack([np.stack([x.value for x in row], -1) for row in rows], -2)
    E = calc.frame()
    cart = np.einsum("zai,zac,zcj->zij", E, fr, E)
    return FrameTensor(fr, cart, calc.umbilic.copy())


def _calc(chart, s, sigma, tau, order, ref):
    return SurfaceCalc(chart, s, sigma, tau=tau, order=order, ref=ref)


def gradient(chart, f, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None):
    """``grad f = n ds f + J^{-1} grad_perp f``."""
    c = _calc(chart, s, sigma, tau, order, ref)
    F = c.scalar(f)
    out = _vector_out(c, op_gradient(c, F))
    if np.any(c.umbilic):
        gs = _GramSchmidtCalc(c)
        g = gs.gradient(F)
        cart = (g[0].value[:, None] * c.geo.n.value + g[1].value[:, None] * gs.b1.value
                + g[2].value[:, None] * gs.b2.value)
        out.cartesian = np.where(c.umbilic[:, None], cart, out.cartesian)
        out.frame = np.where(c.umbilic[:, None], _vals(g), out.frame)
    return out


def divergence(chart, u, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None):
    c = _calc(chart, s, sigma, tau, order, ref)
    U = c.vector(u)
    out = op_divergence(c, U).value
    if np.any(c.umbilic):
        gs = _GramSchmidtCalc(c)
        Uc = _ambient_vector(c, u)
        out = np.where(c.umbilic, gs.divergence(tm.dot(Uc, c.geo.n), Uc).value, out)
    return out


def scalar_laplacian(chart, f, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None):
    c = _calc(chart, s, sigma, tau, order, ref)
    F = c.scalar(f)
    out = op_laplacian(c, F).value
    if np.any(c.umbilic):
        out = np.where(c.umbilic, _GramSchmidtCalc(c).laplacian(F).value, out)
    return out


def _ambient_vector(c, u):
    if u.ambient:
        X = c.position()
        return tm.stack([c.lift(v) for v in u.evaluate(x=X[..., 0], y=X[..., 1], z=X[..., 2], tau=c.tau)])
    raise UmbilicError("intrinsic vector field components are undefined at an isolated umbilic")


def _vector_op(op):
    def run(chart, u, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None, on_error="raise"):
        c = _calc(chart, s, sigma, tau, order, ref)
        _check_umbilic(c, on_error)
        return _vector_out(c, op(c, c.vector(u)))

    return run


curl = _vector_op(op_curl)
curl.__name__ = "curl"
curl.__doc__ = "Curl, with the rotated quantities ``n x u_perp`` and ``n x grad_perp``."
vector_laplacian = _vector_op(op_vector_laplacian)
vector_laplacian.__name__ = "vector_laplacian"
vector_laplacian.__doc__ = "Vector Laplacian ``grad div u - curl curl u``, assembled in frame components."
curl_curl = _vector_op(op_curl_curl)
curl_curl.__name__ = "curl_curl"
curl_curl.__doc__ = "The divergence-free vector Laplacian ``-curl curl u``."
convective_derivative = _vector_op(op_convective)
convective_derivative.__name__ = "convective_derivative"
convective_derivative.__doc__ = "``u . grad u``."


def vector_gradient(chart, u, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None, on_error="raise"):
    """``grad u`` with first index the derivative direction."""
    c = _calc(chart, s, sigma, tau, order, ref)
    _check_umbilic(c, on_error)
    return _tensor_out(c, op_vector_gradient(c, c.vector(u)))


def hessian(chart, f, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None, on_error="raise"):
    c = _calc(chart, s, sigma, tau, order, ref)
    _check_umbilic(c, on_error)
    return _tensor_out(c, op_hessian(c, c.scalar(f)))


def commutator_residuals(chart, f, s, sigma, tau=0.0, order=DEFAULT_ORDER, ref=None):
    """``([ds, nabla_1] f, [ds, nabla_2] f, [nabla_1, nabla_2] f - rhs)`` for a probe field."""
    c = _calc(chart, s, sigma, tau, order, ref)
    if np.any(c.umbilic):
        raise UmbilicError("commutators need principal directions")
    return tuple(r.value for r in op_commutators(c, c.scalar(f)))


# -- numeric Jacobian data ------------------------------------------------------
@dataclass
class BoundaryJacobian:
    sigma: np.ndarray
    J: np.ndarray
    Jinv: np.ndarray
    Jhat: np.ndarray
    Jhat_inv: np.ndarray
    det: np.ndarray
    Pi: np.ndarray
    Khat: np.ndarray


def jacobian(curv, sigma):
    """``J = I - sigma K``, its adjugate, inverse, determinant and the projector.

    ``curv`` is a :class:`~sdcalc.surface_frames.CurvatureData`.
    """
    sigma = np.asarray(sigma, float)
    k1, k2 = np.asarray(curv.k1), np.asarray(curv.k2)
    f1, f2 = 1.0 - sigma * k1, 1.0 - sigma * k2
    if np.any(f1 <= 1e-12) or np.any(f2 <= 1e-12):
        raise SingularJacobian("sigma at or beyond a focal distance (J singular)")
    e1, e2, n = np.asarray(curv.e1), np.asarray(curv.e2), np.asarray(curv.n)
    P1 = e1[..., :, None] * e1[..., None, :]
    P2 = e2[..., :, None] * e2[..., None, :]
    Pn = n[..., :, None] * n[..., None, :]
    k1_, k2_ = k1[..., None, None], k2[..., None, None]
    f1_, f2_ = f1[..., None, None], f2[..., None, None]
    J = Pn + f1_ * P1 + f2_ * P2
    Jinv = Pn + P1 / f1_ + P2 / f2_
    Jhat = Pn + f2_ * P1 + f1_ * P2
    Jhat_inv = Pn + P1 / f2_ + P2 / f1_
    Pi = np.eye(3) - Pn
    Khat = k2_ * P1 + k1_ * P2
    return BoundaryJacobian(sigma, J, Jinv, Jhat, Jhat_inv, f1 * f2, Pi, Khat)


def volume_measure(chart, s, sigma, tau=0.0):
    """Volume density ``|J| |t1 x t2|`` of ``dsigma ds1 ds2`` (``|J||t1||t2|`` for orthogonal charts)."""
    from .surface_frames import shape_operator, tangent_basis

    tb = tangent_basis(chart, s, tau=tau)
    cd = shape_operator(chart, s, tau=tau)
    sigma = np.asarray(sigma, float)
    det = (1.0 - sigma * cd.k1) * (1.0 - sigma * cd.k2)
    return det * np.linalg.norm(np.cross(tb.t1, tb.t2), axis=-1)
