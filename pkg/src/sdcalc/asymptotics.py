"""Boundary-layer expansions in the rescaled normal coordinate ``sigma = eps xi``.

The exact operator formulas of :mod:`surface_calculus` and :mod:`tube_calculus`
are generic over a "calc" object.  The layer calcs below feed them eps-series
whose coefficients are Taylor jets in ``(xi, s1, s2[, tau])`` or
``(s, theta, xi[, tau])``: ``sigma`` becomes ``eps xi``, a normal derivative
becomes ``eps^-1 d_xi`` and every ``1/J`` or ``1/h_s`` turns into its
geometric series.  The same code path therefore yields both the exact value
at ``sigma = eps xi`` and the truncated expansion, which is what the
convergence-slope check compares.

Layer fields are functions of the rescaled coordinate ``xi`` (and the
surface or curve coordinates), independent of ``eps``.
"""

from collections import namedtuple
from dataclasses import dataclass
from itertools import product
from math import factorial

import numpy as np

from . import surface_calculus as sc
from . import tube_calculus as tc
from .fields import SURFACE_LAYER_VARS, TUBE_LAYER_VARS, Field, FieldError
from .series import EpsSeries
from .surface_calculus import SurfaceCalc
from .surface_evolution import SurfaceMotion, _Basis, _rates
from .taylor import Taylor

DEFAULT_K = 2
MAX_K = 6
DEFAULT_EPS = (10 ** -1.0, 10 ** -1.5, 10 ** -2.0, 10 ** -2.5)
UNDERFLOW = 1e-13
JET_ORDER = 6

SURFACE_OPS = ("grad_scalar", "grad_vector", "div", "scalar_lap", "curl_curl", "advect_scalar",
               "advect_vector", "dt", "curl", "vector_lap")
TUBE_OPS = ("grad_scalar", "grad_vector", "div", "scalar_lap", "vector_lap", "curl", "dt_scalar",
            "dt_vector", "advect_scalar", "advect_vector")
_SCALAR_IN = {"grad_scalar", "scalar_lap", "advect_scalar", "dt", "dt_scalar"}


class SeriesValidityError(ValueError):
    """Evaluation at an eps with ``|eps xi kappa| >= 1``."""


@dataclass
class LayerPoint:
    """Surface or curve coordinates plus the rescaled normal coordinate ``xi``.

    ``coords`` is ``(s1, s2)`` on a surface and ``(s, theta)`` on a tube;
    either may be batched along a leading axis.
    """

    coords: tuple
    xi: object

    def arrays(self):
        c = np.atleast_2d(np.asarray(self.coords, float))
        if c.shape[-1] != 2 and c.shape[0] == 2:
            c = c.T
        xi = np.broadcast_to(np.asarray(self.xi, float), c[:, 0].shape).copy()
        if not np.all(np.isfinite(xi)):
            raise ValueError("xi must be finite")
        return c, xi


def _point(point):
    if isinstance(point, LayerPoint):
        return point.arrays()
    coords, xi = point
    return LayerPoint(coords, xi).arrays()


class LayerSeries(EpsSeries):
    """An :class:`EpsSeries` of numeric coefficients that knows its validity radius.

    ``eps_max = 1 / max|xi kappa|``; evaluating at ``eps >= eps_max`` raises
    :class:`SeriesValidityError`.
    """

    def __init__(self, coeffs, min_order, kmax, eps_max, shape=()):
        super().__init__(coeffs, min_order, kmax=kmax, cap=kmax)
        self.eps_max = eps_max
        self.shape = shape

    def coefficient(self, k):
        c = self.coeff(k)
        return np.zeros(self.shape) + c

    def evaluate(self, eps, K=None):
        if abs(eps) >= self.eps_max:
            raise SeriesValidityError(f"eps = {eps:g} violates |eps xi kappa| < 1 (eps_max = {self.eps_max:g})")
        return super().evaluate(eps, K)


# -- layer calcs -----------------------------------------------------------------------
def _d(c, v):
    return c.deriv(v) if isinstance(c, Taylor) else 0.0 * c


class _LayerBase:
    cap = 0
    xi_var = 0

    def ser(self, F):
        return F if isinstance(F, EpsSeries) else EpsSeries.constant(F, self.cap)

    def dsig(self, F):
        v = self.xi_var
        return self.ser(F).map(lambda c: _d(c, v)).shift(-1)

    def dtau(self, F):
        return self.ser(F).map(lambda c: _d(c, 3))


class SurfaceLayerCalc(_LayerBase):
    """Series calculus around a surface; jets in ``(xi, s1, s2[, tau])``."""

    xi_var = 0

    def __init__(self, chart, s, xi, cap, tau=0.0, order=JET_ORDER, time=False, ref=None):
        self.base = base = SurfaceCalc(chart, s, 0.0, tau=tau, order=order, time=time, ref=ref)
        self.cap = cap
        self.space = base.space
        self.geo = base.geo
        self.XI = base.space.variable(0, xi)
        self.sigma = EpsSeries.eps_times(self.XI, cap)
        self.k1, self.k2, self.w1, self.w2 = base.k1, base.k2, base.w1, base.w2
        self.umbilic = base.umbilic
        self.kmax = np.maximum(np.abs(base.k1.value), np.abs(base.k2.value))

    def ds(self, F):
        return self.dsig(F)

    def nab(self, i, F):
        if isinstance(F, Taylor):
            return self.geo.nabla(i, F)
        return self.ser(F).map(lambda c: self.geo.nabla(i, c) if isinstance(c, Taylor) else 0.0 * c)

    def env(self):
        b = self.base
        return {"xi": self.XI, "s1": b.S1, "s2": b.S2, "tau": b.tau}

    def lift(self, v):
        return self.base.lift(v)


class TubeLayerCalc(_LayerBase):
    """Series calculus around a curve; jets in ``(s, theta, xi[, tau])``."""

    xi_var = 2

    def __init__(self, curve, s, theta, xi, cap, tau=0.0, order=JET_ORDER, time=False, phi0=0.0):
        s, theta, xi = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float),
                                           np.asarray(xi, float))
        self.base = base = tc.TubeCalc(curve, s, theta, np.zeros_like(s), tau=tau, order=order,
                                       time=time, phi0=phi0, check=False)
        self.cap = cap
        self.tj = base.tj
        self.space = base.space
        self.XI = base.space.variable(2, xi)
        self.sigma = EpsSeries.eps_times(self.XI, cap)
        self.kappa, self.cs, self.sn = base.kappa, base.cs, base.sn
        self.hs = 1.0 - self.sigma * (self.kappa * self.cs)
        ihs = self.hs.reciprocal()
        self.A = ihs * (self.kappa * self.cs)
        self.B_ = ihs * (-self.kappa * self.sn)
        self.C = EpsSeries([1.0 / self.XI], -1, kmax=cap, cap=cap)
        self.kmax = np.abs(base.kappa.value)

    def ds(self, F):
        if isinstance(F, Taylor):
            return self.tj.ds(F)
        return self.ser(F).map(lambda c: self.tj.ds(c) if isinstance(c, Taylor) else 0.0 * c)

    def dth(self, F):
        if isinstance(F, Taylor):
            return F.deriv(1)
        return self.ser(F).map(lambda c: _d(c, 1))

    def env(self):
        tj = self.tj
        return {"s": tj.S, "theta": tj.TH, "xi": self.XI, "tau": tj.T}

    def lift(self, v):
        return self.base.lift(v)


# -- exact counterparts at sigma = eps xi --------------------------------------------------
class _SurfaceExact:
    def __init__(self, chart, s, xi, eps, tau=0.0, order=JET_ORDER, time=False, ref=None):
        self.calc = c = SurfaceCalc(chart, s, eps * xi, tau=tau, order=order, time=time, ref=ref)
        self.eps = eps
        for name in ("sigma", "k1", "k2", "w1", "w2", "geo", "space"):
            setattr(self, name, getattr(c, name))

    def ds(self, F):
        return self.calc.ds(F)

    dsig = ds

    def nab(self, i, F):
        return self.calc.nab(i, F)

    def dtau(self, F):
        return F.deriv(3)

    def env(self):
        c = self.calc
        return {"xi": c.sigma * (1.0 / self.eps), "s1": c.S1, "s2": c.S2, "tau": c.tau}

    def lift(self, v):
        return self.calc.lift(v)


class _TubeExact:
    def __init__(self, curve, s, theta, xi, eps, tau=0.0, order=JET_ORDER, time=False, phi0=0.0):
        self.calc = c = tc.TubeCalc(curve, s, theta, eps * xi, tau=tau, order=order, time=time,
                                    phi0=phi0, check=False)
        self.eps = eps
        for name in ("sigma", "hs", "A", "B_", "C", "kappa", "cs", "sn", "tj", "space"):
            setattr(self, name, getattr(c, name))

    def ds(self, F):
        return self.calc.ds(F)

    def dth(self, F):
        return F.deriv(1)

    def dsig(self, F):
        return F.deriv(2)

    def dtau(self, F):
        return F.deriv(3)

    def env(self):
        tj = self.tj
        return {"s": tj.S, "theta": tj.TH, "xi": tj.SG * (1.0 / self.eps), "tau": tj.T}

    def lift(self, v):
        return self.calc.lift(v)


# -- fields ------------------------------------------------------------------------------------
def layer_field(exprs, geometry="surface"):
    """A layer field from expressions in ``(xi, s1, s2, tau)`` or ``(s, theta, xi, tau)``."""
    variables = SURFACE_LAYER_VARS if geometry == "surface" else TUBE_LAYER_VARS
    if isinstance(exprs, str) or callable(exprs):
        return Field([exprs], "scalar", variables)
    return Field(list(exprs), "vector", variables)


def _check_layer(field, geometry):
    if field is None or callable(field):
        return
    want = SURFACE_LAYER_VARS if geometry == "surface" else TUBE_LAYER_VARS
    if field.ambient or tuple(field.variables) != want:
        raise FieldError(f"layer fields are functions of {', '.join(want)}")


def _values(c, field, vector):
    """Field components on a calc: a Field or a callable ``env -> value(s)``."""
    env = c.env()
    raw = field(env) if callable(field) and not isinstance(field, Field) else field.evaluate(**env)
    if vector:
        if not isinstance(raw, (list, tuple)) or len(raw) != 3:
            raise FieldError("expected a vector field")
        return tuple(c.lift(x) if not isinstance(x, EpsSeries) else x for x in raw)
    if isinstance(raw, (list, tuple)):
        raise FieldError("expected a scalar field")
    return c.lift(raw) if not isinstance(raw, EpsSeries) else raw


# -- operator dispatch ---------------------------------------------------------------------------
def _contract(v, rows):
    return tuple(v[0] * rows[0][j] + v[1] * rows[1][j] + v[2] * rows[2][j] for j in range(3))


def _surface_dt(c, motion, F, basis_calc):
    b = _Basis(basis_calc)
    vs, cv, _, ds = _rates(b, motion) if not isinstance(c, SurfaceLayerCalc) else _series_rates(c, b, motion)
    return c.dtau(F) - vs * c.ds(F) + ds[0] * _raw(c, F, 1) + ds[1] * _raw(c, F, 2)


def _raw(c, F, v):
    if isinstance(F, Taylor):
        return F.deriv(v)
    return c.ser(F).map(lambda x: _d(x, v))


def _series_rates(c, b, motion):
    vs, cv, vp = motion.jets(b)
    g = b.grad_perp(vs)
    s = c.sigma
    M = b.M
    a, bb = 1.0 - s * M[0][0], -s * M[0][1]
    d, e = -s * M[1][0], 1.0 - s * M[1][1]
    idet = (a * e - bb * d).reciprocal()
    jg = ((e * g[0] - bb * g[1]) * idet, (a * g[1] - d * g[0]) * idet)
    ds = (s * jg[0] - cv[0], s * jg[1] - cv[1])
    return vs, cv, vp, ds


def _surface_apply(c, op, field, velocity, motion, basis_calc):
    if op == "grad_scalar":
        return sc.op_gradient(c, _values(c, field, False))
    if op == "grad_vector":
        return sc.op_vector_gradient(c, _values(c, field, True))
    if op == "div":
        return sc.op_divergence(c, _values(c, field, True))
    if op == "scalar_lap":
        return sc.op_laplacian(c, _values(c, field, False))
    if op == "curl_curl":
        return sc.op_curl_curl(c, _values(c, field, True))
    if op == "curl":
        return sc.op_curl(c, _values(c, field, True))
    if op == "vector_lap":
        return sc.op_vector_laplacian(c, _values(c, field, True))
    if op == "advect_scalar":
        v = _values(c, velocity, True)
        g = sc.op_gradient(c, _values(c, field, False))
        return v[0] * g[0] + v[1] * g[1] + v[2] * g[2]
    if op == "advect_vector":
        u = _values(c, field, True)
        v = u if velocity is None else _values(c, velocity, True)
        return _contract(v, sc.op_vector_gradient(c, u))
    if op == "dt":
        return _surface_dt(c, motion, _values(c, field, False), basis_calc)
    raise ValueError(f"unknown surface op {op!r}; choose from {', '.join(SURFACE_OPS)}")


class _SeriesKin:
    """Tube frame and coordinate rates with ``sigma`` an eps-series."""

    def __init__(self, c, k):
        s = c.sigma
        ihs = c.hs.reciprocal()
        self.dts_arc = -(k.vt - s * k.alpha_p) * ihs
        self.dt_sigma = -k.v_sigma
        self.dt_theta = -(k.v_theta * c.C) - k.gamma_p
        self.a = (k.alpha_p - k.vt * c.kappa * c.cs) * ihs
        self.b = k.beta_p + c.B_ * (s * k.alpha_p - k.vt)
        self.cc = -(k.v_theta * c.C)


def _tube_dt(c, q, F):
    return c.dtau(F) + q.dts_arc * c.ds(F) + q.dt_sigma * c.dsig(F) + q.dt_theta * c.dth(F)


def _tube_kin(c, motion):
    if isinstance(c, TubeLayerCalc):
        return _SeriesKin(c, tc._Kin(c.base, motion))
    return tc._Kin(c.calc, motion)


def _tube_apply(c, op, field, velocity, motion):
    if op == "grad_scalar":
        return tc.op_gradient(c, _values(c, field, False))
    if op == "grad_vector":
        return tc.op_vector_gradient(c, _values(c, field, True))
    if op == "div":
        return tc.op_divergence(c, _values(c, field, True))
    if op == "scalar_lap":
        return tc.op_laplacian(c, _values(c, field, False))
    if op == "vector_lap":
        return tc.op_vector_laplacian(c, _values(c, field, True))
    if op == "curl":
        return tc.op_curl(c, _values(c, field, True))
    if op == "advect_scalar":
        v = _values(c, velocity, True)
        g = tc.op_gradient(c, _values(c, field, False))
        return v[0] * g[0] + v[1] * g[1] + v[2] * g[2]
    if op == "advect_vector":
        u = _values(c, field, True)
        v = u if velocity is None else _values(c, velocity, True)
        return _contract(v, tc.op_vector_gradient(c, u))
    if op == "dt_scalar":
        return _tube_dt(c, _tube_kin(c, motion), _values(c, field, False))
    if op == "dt_vector":
        q = _tube_kin(c, motion)
        us, ug, ut = _values(c, field, True)
        return (_tube_dt(c, q, us) - q.a * ug - q.b * ut,
                _tube_dt(c, q, ug) + q.a * us - q.cc * ut,
                _tube_dt(c, q, ut) + q.b * us + q.cc * ug)
    raise ValueError(f"unknown tube op {op!r}; choose from {', '.join(TUBE_OPS)}")


# -- packing results -----------------------------------------------------------------------------
def _flatten(res):
    """Nested tuples/lists of components -> (flat list, shape)."""
    if isinstance(res, (list, tuple)):
        if isinstance(res[0], (list, tuple)):
            return [x for row in res for x in row], (len(res), len(res[0]))
        return list(res), (len(res),)
    return [res], ()


def _num(c, B):
    if isinstance(c, Taylor):
        return c.value
    return np.broadcast_to(np.asarray(c, float), (B,))


def _pack_exact(res, B):
    flat, shape = _flatten(res)
    vals = np.stack([_num(x, B) for x in flat], -1)
    return vals.reshape((B,) + shape)


def _pack_series(res, B, K, eps_max):
    flat, shape = _flatten(res)
    flat = [x if isinstance(x, EpsSeries) else EpsSeries.constant(x, K) for x in flat]
    lo = min(x.min_order for x in flat)
    hi = min(x.kmax for x in flat)
    if hi < K:
        return None
    coeffs = []
    for k in range(lo, K + 1):
        vals = np.stack([_num(x.coeff(k), B) for x in flat], -1)
        coeffs.append(vals.reshape((B,) + shape))
    out = LayerSeries(coeffs, lo, K, eps_max, (B,) + shape)
    while len(out.coeffs) > 1 and not np.any(out.coeffs[0]):
        out = LayerSeries(out.coeffs[1:], out.min_order + 1, K, eps_max, out.shape)
    return out


def _eps_max(kabs, xi):
    r = np.max(np.abs(xi) * kabs)
    return np.inf if r == 0 else 1.0 / r


def _check_K(K):
    K = int(K)
    if K < -2 or K > MAX_K:
        raise ValueError(f"truncation order must lie in [-2, {MAX_K}]")
    return K


# -- public expansion API -----------------------------------------------------------------------
def expand_surface(chart, op_kind, field, point, K=DEFAULT_K, velocity=None, motion=None, tau=0.0,
                   order=JET_ORDER, ref=None):
    """eps-series of a surface operator applied to a layer field, through ``eps^K``.

    ``velocity`` is the advecting layer vector field for ``advect_scalar``
    (required) and ``advect_vector`` (defaults to the field itself);
    ``motion`` is a :class:`~sdcalc.surface_evolution.SurfaceMotion` for ``dt``.
    """
    K = _check_K(K)
    _check_layer(field, "surface")
    _check_layer(velocity, "surface")
    s, xi = _point(point)
    time = op_kind == "dt"
    if time and motion is None:
        motion = SurfaceMotion(chart)
    if op_kind == "advect_scalar" and velocity is None:
        raise ValueError("advect_scalar needs a velocity field")
    for extra in (4, 8, 12):
        c = SurfaceLayerCalc(chart, s, xi, K + extra, tau=tau, order=order, time=time, ref=ref)
        res = _surface_apply(c, op_kind, field, velocity, motion, c.base)
        out = _pack_series(res, len(s), K, _eps_max(c.kmax, xi))
        if out is not None:
            return out
    raise RuntimeError("series lost too many orders")


def exact_surface(chart, op_kind, field, point, eps, velocity=None, motion=None, tau=0.0,
                  order=JET_ORDER, ref=None):
    """The exact operator at ``sigma = eps xi`` on the same layer field."""
    s, xi = _point(point)
    time = op_kind == "dt"
    if time and motion is None:
        motion = SurfaceMotion(chart)
    c = _SurfaceExact(chart, s, xi, eps, tau=tau, order=order, time=time, ref=ref)
    return _pack_exact(_surface_apply(c, op_kind, field, velocity, motion, c.calc), len(s))


def expand_tube(curve, op_kind, field, point, K=DEFAULT_K, velocity=None, motion=None, tau=0.0,
                order=JET_ORDER, phi0=0.0):
    """eps-series of a tube operator applied to a layer field ``f(s, theta, xi[, tau])``."""
    K = _check_K(K)
    _check_layer(field, "tube")
    _check_layer(velocity, "tube")
    st, xi = _point(point)
    time = op_kind.startswith("dt")
    if time and motion is None:
        motion = tc.CurveMotion(curve)
    if op_kind == "advect_scalar" and velocity is None:
        raise ValueError("advect_scalar needs a velocity field")
    for extra in (4, 8, 12):
        c = TubeLayerCalc(curve, st[:, 0], st[:, 1], xi, K + extra, tau=tau, order=order, time=time,
                          phi0=phi0)
        res = _tube_apply(c, op_kind, field, velocity, motion)
        out = _pack_series(res, len(st), K, _eps_max(c.kmax, xi))
        if out is not None:
            return out
    raise RuntimeError("series lost too many orders")


def exact_tube(curve, op_kind, field, point, eps, velocity=None, motion=None, tau=0.0,
               order=JET_ORDER, phi0=0.0):
    st, xi = _point(point)
    time = op_kind.startswith("dt")
    if time and motion is None:
        motion = tc.CurveMotion(curve)
    c = _TubeExact(curve, st[:, 0], st[:, 1], xi, eps, tau=tau, order=order, time=time, phi0=phi0)
    return _pack_exact(_tube_apply(c, op_kind, field, velocity, motion), len(st))


# -- convergence -------------------------------------------------------------------------------
SlopeResult = namedtuple("SlopeResult", "slope predicted eps errors exact min_order relative")


def _size(a, B):
    a = np.asarray(a).reshape(B, -1)
    return np.sqrt(np.sum(a * a, -1))


def convergence_slope(geometry, op_kind, field, point, K=DEFAULT_K, eps_list=DEFAULT_EPS, relative=True,
                      **kw):
    """Least-squares slope of log error vs log eps for the order-``K`` truncation.

    With ``relative=True`` the error ``|exact - series|`` is measured against
    the size of the leading term ``|c_m eps^m|`` and the prediction is
    ``K + 1 - m``; with ``relative=False`` it is the absolute error,
    predicted ``K + 1``.  Errors below 1e-13 are dropped; if fewer than two
    remain the series is reported exact (slope NaN, ``exact=True``).
    """
    tube = getattr(geometry, "kind", "") == "curve"
    expand, exact = (expand_tube, exact_tube) if tube else (expand_surface, exact_surface)
    ser = expand(geometry, op_kind, field, point, K=K, **kw)
    B = ser.shape[0]
    scale = max(float(np.max(np.abs(ser.coefficient(j)))) for j in ser.orders)
    lead = ser.min_order
    for k in ser.orders:
        if np.max(np.abs(ser.coefficient(k))) > 1e-12 * max(1.0, scale):
            lead = k
            break
    size = _size(ser.coefficient(lead), B)
    eps_used, errs = [], []
    for eps in eps_list:
        approx = ser.evaluate(eps)
        ex = exact(geometry, op_kind, field, point, eps, **kw)
        diff = _size(ex - approx, B)
        if relative:
            e = np.max(diff / np.maximum(size * eps ** lead, 1e-300))
        else:
            e = np.max(diff)
        if e >= UNDERFLOW:
            eps_used.append(float(eps))
            errs.append(float(e))
    predicted = K + 1 - lead if relative else K + 1
    if len(errs) < 2:
        return SlopeResult(float("nan"), predicted, eps_used, errs, True, lead, relative)
    slope = np.polyfit(np.log(eps_used), np.log(errs), 1)[0]
    return SlopeResult(float(slope), predicted, eps_used, errs, False, lead, relative)


# -- linear channels --------------------------------------------------------------------------
def _probe(alpha, names, xi_var):
    def make(env):
        out = None
        for v, a in enumerate(alpha):
            if a == 0:
                continue
            X = env[names[v]]
            term = X - X.value
            piece = term
            for _ in range(a - 1):
                piece = piece * term
            piece = piece * (1.0 / factorial(a))
            out = piece if out is None else out * piece
        if out is None:
            return 1.0
        return out

    return make


def _channel_name(alpha, names):
    parts = []
    for n, a in zip(names, alpha):
        if a == 1:
            parts.append(f"d_{n}")
        elif a > 1:
            parts.append(f"d_{n}^{a}")
    return " ".join(parts) or "f"


def linear_channels(geometry, op_kind, point, K=DEFAULT_K, max_order=2, time=False, **kw):
    """Coefficients of each derivative channel of a linear scalar-input operator.

    Returns ``{channel: LayerSeries}`` where ``channel`` names the partial
    derivative of the field (``"d_xi"``, ``"d_xi^2"``, ``"d_s1 d_xi"``...),
    i.e. ``op f = sum_channel coeff * channel(f)`` order by order.
    """
    if op_kind not in _SCALAR_IN:
        raise ValueError(f"channels are defined for scalar-input ops {sorted(_SCALAR_IN)}")
    tube = getattr(geometry, "kind", "") == "curve"
    names = TUBE_LAYER_VARS if tube else SURFACE_LAYER_VARS
    nv = 4 if (time or op_kind.startswith("dt")) else 3
    expand = expand_tube if tube else expand_surface
    out = {}
    for alpha in product(range(max_order + 1), repeat=nv):
        if sum(alpha) > max_order:
            continue
        alpha = tuple(alpha) + (0,) * (4 - nv)
        ser = expand(geometry, op_kind, _probe(alpha, names, None), point, K=K, **kw)
        if any(np.any(ser.coefficient(k)) for k in ser.orders):
            out[_channel_name(alpha, names)] = ser
    return out


# -- closed-form leading terms (for cross-checks) ----------------------------------------------
def surface_laplacian_leading(chart, field, point, tau=0.0, order=JET_ORDER, ref=None):
    """``(c_-2, c_-1, c_0)`` of the layer Laplacian from the closed forms

    ``c_-2 = d_xi^2 f``, ``c_-1 = -(kappa_1 + kappa_2) d_xi f`` and
    ``c_0 = div_perp grad_perp f - xi (kappa_1^2 + kappa_2^2) d_xi f``.
    """
    s, xi = _point(point)
    c = SurfaceLayerCalc(chart, s, xi, 0, tau=tau, order=order, ref=ref)
    F = _values(c, field, False)
    dF = F.deriv(0)
    g = c.geo
    lap_perp = sc.surf_div_perp(c, g.nabla(0, F), g.nabla(1, F))
    k1, k2 = c.k1, c.k2
    return (dF.deriv(0).value, (-(k1 + k2) * dF).value, (lap_perp - c.XI * (k1 * k1 + k2 * k2) * dF).value)


def tube_laplacian_leading(curve, field, point, tau=0.0, order=JET_ORDER, phi0=0.0):
    """``(c_-2, c_-1)`` of the layer tube Laplacian from the closed forms

    ``c_-2 = d_xi^2 f + d_xi f / xi + d_theta^2 f / xi^2`` and
    ``c_-1 = -kappa cs d_xi f + (kappa sn / xi) d_theta f``.
    """
    st, xi = _point(point)
    c = TubeLayerCalc(curve, st[:, 0], st[:, 1], xi, 0, tau=tau, order=order, phi0=phi0)
    F = _values(c, field, False)
    X = c.XI
    fx, ft = F.deriv(2), F.deriv(1)
    cm2 = fx.deriv(2) + fx / X + ft.deriv(1) / (X * X)
    cm1 = -c.kappa * c.cs * fx + c.kappa * c.sn / X * ft
    return cm2.value, cm1.value
