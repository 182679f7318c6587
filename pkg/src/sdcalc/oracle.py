"""Ambient finite-difference oracle.

Curvilinear fields are pulled back to Cartesian callables through the
closest-point projection, and every operator is then evaluated with central
differences in ``x, y, z`` plus one level of Richardson extrapolation.  The
oracle shares chart evaluation, projection and frame vectors with the rest of
the package but none of the operator formulas.
"""

from collections import OrderedDict

import numpy as np

from . import surface_calculus as sc
from . import tube_calculus as tc
from ._fault import curvature_fault
from ._parallel import chunked
from .closest_point import signed_distance, to_cartesian
from .curve_frames import frenet, tube_frame, tube_from_cartesian, tube_to_cartesian
from .fields import Field
from .surface_frames import shape_operator

H1 = 1e-4
H2 = 1e-3
SHRINKS = 4
REL_FLOOR = 1e-8
COLLAR_MARGIN = 1e-6

SURFACE_OPS = ("grad", "div", "curl", "lap", "veclap", "curlcurl", "hessian", "vecgrad", "convective")
TUBE_OPS = ("grad", "vecgrad", "div", "lap", "curl", "veclap")
_VECTOR_IN = {"div", "curl", "veclap", "curlcurl", "vecgrad", "convective"}


class CollarError(ValueError):
    """Ambient evaluation outside the tubular neighbourhood."""


# -- ambient fields -----------------------------------------------------------------
class AmbientField:
    """A Cartesian callable ``x (..., 3) -> (...)`` or ``(..., 3)``.

    ``raw(x, anchor)`` returns NaN outside the collar instead of raising;
    ``anchor`` (same shape as ``x``) lets frame-based pullbacks continue the
    frame orientation from a nearby point so stencils see a smooth field.
    """

    def __init__(self, func, vector, name="field"):
        self._func = func
        self.is_vector = bool(vector)
        self.name = name

    def raw(self, x, anchor=None):
        return self._func(np.asarray(x, float), anchor)

    def __call__(self, x):
        out = self.raw(x)
        if np.any(np.isnan(out)):
            raise CollarError(f"{self.name}: point outside the collar or projection failed")
        return out


def from_expressions(field, tau=0.0):
    """AmbientField from an ambient :class:`~sdcalc.fields.Field` in ``x, y, z``."""
    if not field.ambient:
        raise ValueError("expected a field in x, y, z; use pullback for curvilinear fields")

    def f(x, anchor=None):
        vals = field.evaluate(x=x[..., 0], y=x[..., 1], z=x[..., 2], tau=tau)
        if field.is_vector:
            return np.stack([np.broadcast_to(np.asarray(v, float), x.shape[:-1]) for v in vals], -1)
        return np.broadcast_to(np.asarray(vals, float), x.shape[:-1]).copy()

    return AmbientField(f, field.is_vector, field.name)


class _Projector:
    """Memoised projection of point batches (stencils are reused across fields)."""

    def __init__(self, geometry, tau, phi0):
        self.g = geometry
        self.tau = tau
        self.phi0 = phi0
        self.tube = geometry.kind == "curve"
        self.cache = OrderedDict()

    def coords(self, x):
        key = x.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            self.cache.move_to_end(key)
            return hit
        out = self._tube(x) if self.tube else self._surface(x)
        self.cache[key] = out
        if len(self.cache) > 32:
            self.cache.popitem(last=False)
        return out

    def _surface(self, x):
        co = signed_distance(self.g, x, tau=self.tau, on_error="nan")
        ok = co.status == 0
        s, sigma = co.s, co.sigma
        frame = np.full(x.shape[:-1] + (3, 3), np.nan)
        if np.any(ok):
            cd = shape_operator(self.g, s[ok], tau=self.tau)
            J = np.minimum(1.0 - sigma[ok] * cd.k1, 1.0 - sigma[ok] * cd.k2)
            inside = J > COLLAR_MARGIN
            fr = np.stack([cd.n, cd.e1, cd.e2], -2)
            fr[~inside] = np.nan
            frame[ok] = fr
        valid = np.all(np.isfinite(frame), axis=(-1, -2))
        return {"sigma": np.where(valid, sigma, np.nan), "s1": s[..., 0], "s2": s[..., 1],
                "frame": frame, "valid": valid}

    def _tube(self, x):
        co = tube_from_cartesian(self.g, x, tau=self.tau, phi0=self.phi0, on_error="nan")
        ok = (co.status == 0) & (co.sigma > COLLAR_MARGIN)
        frame = np.full(x.shape[:-1] + (3, 3), np.nan)
        if np.any(ok):
            fr = _tube_frame_safe(self.g, co.s[ok], co.theta[ok], co.sigma[ok], self.tau, self.phi0)
            frame[ok] = fr
        valid = np.all(np.isfinite(frame), axis=(-1, -2))
        return {"s": co.s, "theta": co.theta, "sigma": np.where(valid, co.sigma, np.nan),
                "frame": frame, "valid": valid}


def _tube_frame_safe(curve, s, theta, sigma, tau, phi0):
    try:
        tf = tube_frame(curve, s, theta, sigma, tau=tau, phi0=phi0)
        fr = np.stack([tf.t_s, tf.t_sigma, tf.t_theta], -2)
        return np.where((tf.h_s > COLLAR_MARGIN)[:, None, None], fr, np.nan)
    except ValueError:
        out = np.full(s.shape + (3, 3), np.nan)
        for i in range(len(s)):
            try:
                tf = tube_frame(curve, s[i:i + 1], theta[i:i + 1], sigma[i:i + 1], tau=tau, phi0=phi0)
                out[i] = np.stack([tf.t_s[0], tf.t_sigma[0], tf.t_theta[0]], -2)
            except ValueError:
                pass
        return out


_PROJECTORS = {}


def _projector(geometry, tau, phi0):
    key = (id(geometry), float(tau), float(phi0))
    p = _PROJECTORS.get(key)
    if p is None or p.g is not geometry:
        if len(_PROJECTORS) > 16:
            _PROJECTORS.clear()
        p = _PROJECTORS[key] = _Projector(geometry, tau, phi0)
    return p


def pullback(field, geometry, tau=0.0, phi0=0.0):
    """AmbientField ``x -> field(coordinates_of(x))``.

    Vector components are taken in the local frame (``n, e1, e2`` on a
    surface, ``t_s, t_sigma, t_theta`` on a tube) and returned Cartesian.
    """
    if field.ambient:
        return from_expressions(field, tau)
    proj = _projector(geometry, tau, phi0)
    tube = geometry.kind == "curve"

    def f(x, anchor=None):
        shape = x.shape[:-1]
        flat = x.reshape(-1, 3)
        c = proj.coords(flat)
        env = {k: c[k] for k in (("s", "theta", "sigma") if tube else ("sigma", "s1", "s2"))}
        env["tau"] = tau
        vals = field.evaluate(**env)
        valid = c["valid"]
        if not field.is_vector:
            out = np.broadcast_to(np.asarray(vals, float), valid.shape)
            return np.where(valid, out, np.nan).reshape(shape)
        comps = np.stack([np.broadcast_to(np.asarray(v, float), valid.shape) for v in vals], -1)
        frame = c["frame"]
        if anchor is not None and not tube:
            frame = _align(frame, proj.coords(anchor.reshape(-1, 3))["frame"])
        out = np.einsum("bk,bkj->bj", comps, frame)
        return np.where(valid[:, None], out, np.nan).reshape(shape + (3,))

    return AmbientField(f, field.is_vector, field.name)


def _align(frame, ref):
    """Flip ``(e1, e2)`` where ``e1`` disagrees in sign with the anchor's ``e1``."""
    flip = np.sum(frame[:, 1] * ref[:, 1], -1) < 0
    out = frame.copy()
    out[flip, 1:] *= -1.0
    return out


# -- stencils -------------------------------------------------------------------------
def _steps(x, h, scale):
    if h is None:
        h = scale
    return h * np.maximum(1.0, np.linalg.norm(x, axis=-1))


_E = np.eye(3)


def _first(field, x, h):
    """Central first derivatives ``D[b, i, ...] = d_i f`` with step ``h`` (per point)."""
    off = np.concatenate([_E, -_E])  # (6, 3)
    X = x[:, None, :] + h[:, None, None] * off[None]
    anchor = np.broadcast_to(x[:, None, :], X.shape)
    v = field.raw(X.reshape(-1, 3), anchor.reshape(-1, 3)).reshape((len(x), 6) + (() if not field.is_vector else (3,)))
    hh = h.reshape((-1, 1) + (1,) * (v.ndim - 2))
    return (v[:, :3] - v[:, 3:]) / (2 * hh)


_PAIRS = [(0, 1), (0, 2), (1, 2)]


def _second(field, x, h):
    """Central second derivatives ``D[b, i, j, ...]``."""
    offs = [np.zeros(3)]
    for i in range(3):
        offs += [_E[i], -_E[i]]
    for i, j in _PAIRS:
        offs += [_E[i] + _E[j], _E[i] - _E[j], -_E[i] + _E[j], -_E[i] - _E[j]]
    off = np.array(offs)
    X = x[:, None, :] + h[:, None, None] * off[None]
    anchor = np.broadcast_to(x[:, None, :], X.shape)
    tail = (3,) if field.is_vector else ()
    v = field.raw(X.reshape(-1, 3), anchor.reshape(-1, 3)).reshape((len(x), len(off)) + tail)
    hh = h.reshape((-1,) + (1,) * len(tail))
    D = np.empty((len(x), 3, 3) + tail)
    f0 = v[:, 0]
    for i in range(3):
        D[:, i, i] = (v[:, 1 + 2 * i] - 2 * f0 + v[:, 2 + 2 * i]) / (hh * hh)
    for k, (i, j) in enumerate(_PAIRS):
        b = 7 + 4 * k
        m = (v[:, b] - v[:, b + 1] - v[:, b + 2] + v[:, b + 3]) / (4 * hh * hh)
        D[:, i, j] = m
        D[:, j, i] = m
    return D


def _richardson(kernel, field, x, h):
    """One Richardson level with up to SHRINKS halvings for stencils that leave the collar."""
    x = np.atleast_2d(np.asarray(x, float))
    out = None
    todo = np.arange(len(x))
    h = h.copy()
    for _ in range(SHRINKS + 1):
        xs, hs = x[todo], h[todo]
        coarse = kernel(field, xs, hs)
        fine = kernel(field, xs, hs / 2)
        est = (4 * fine - coarse) / 3
        if out is None:
            out = np.full((len(x),) + est.shape[1:], np.nan)
        bad = np.any(np.isnan(est.reshape(len(xs), -1)), axis=1)
        out[todo[~bad]] = est[~bad]
        todo = todo[bad]
        if not len(todo):
            break
        h[todo] = h[todo] / 2
    return out


def _first_derivs(field, x, h=None):
    x = np.atleast_2d(np.asarray(x, float))
    return _richardson(_first, field, x, _steps(x, h, H1))


def _second_derivs(field, x, h=None):
    x = np.atleast_2d(np.asarray(x, float))
    return _richardson(_second, field, x, _steps(x, h, H2))


def fd_grad(field, x, h=None):
    """Gradient of a scalar AmbientField, shape (N, 3)."""
    return _first_derivs(field, x, h)


def fd_jacobian(field, x, h=None):
    """``J[b, i, j] = d_i u_j`` for a vector AmbientField (first index: derivative direction)."""
    return _first_derivs(field, x, h)


def fd_div(field, x, h=None):
    J = fd_jacobian(field, x, h)
    return J[:, 0, 0] + J[:, 1, 1] + J[:, 2, 2]


def _curl_of(J):
    return np.stack([J[:, 1, 2] - J[:, 2, 1], J[:, 2, 0] - J[:, 0, 2], J[:, 0, 1] - J[:, 1, 0]], -1)


def fd_curl(field, x, h=None):
    return _curl_of(fd_jacobian(field, x, h))


def fd_hessian(field, x, h=None):
    """Hessian of a scalar field (N, 3, 3); for a vector field (N, 3, 3, 3) indexed ``[b, i, j, k] = d_i d_j u_k``."""
    return _second_derivs(field, x, h)


def fd_scalar_lap(field, x, h=None):
    H = fd_hessian(field, x, h)
    return H[:, 0, 0] + H[:, 1, 1] + H[:, 2, 2]


def fd_vector_lap(field, x, h=None):
    H = fd_hessian(field, x, h)
    return H[:, 0, 0] + H[:, 1, 1] + H[:, 2, 2]


def fd_grad_div(field, x, h=None):
    H = fd_hessian(field, x, h)
    return np.einsum("bijj->bi", H)


def fd_curl_curl(field, x, h=None):
    """``curl curl u = grad div u - lap u``."""
    H = fd_hessian(field, x, h)
    return np.einsum("bijj->bi", H) - (H[:, 0, 0] + H[:, 1, 1] + H[:, 2, 2])


def fd_convective(field, x, h=None):
    x = np.atleast_2d(np.asarray(x, float))
    J = fd_jacobian(field, x, h)
    u = field.raw(x, x)
    return np.einsum("bi,bij->bj", u, J)


def fd_operator(op, field, x, h1=None, h2=None):
    """Oracle value of a named operator at ambient points."""
    table = {
        "grad": lambda: fd_grad(field, x, h1),
        "vecgrad": lambda: fd_jacobian(field, x, h1),
        "div": lambda: fd_div(field, x, h1),
        "curl": lambda: fd_curl(field, x, h1),
        "convective": lambda: fd_convective(field, x, h1),
        "lap": lambda: fd_scalar_lap(field, x, h2),
        "veclap": lambda: fd_vector_lap(field, x, h2),
        "curlcurl": lambda: fd_curl_curl(field, x, h2),
        "hessian": lambda: fd_hessian(field, x, h2),
    }
    if op not in table:
        raise ValueError(f"unknown oracle operator {op!r}")
    return table[op]()


# -- the curvilinear side --------------------------------------------------------------------
def _surface_op(op, chart, field, s, sigma, tau):
    if op == "grad":
        return sc.gradient(chart, field, s, sigma, tau=tau).cartesian
    if op == "div":
        return sc.divergence(chart, field, s, sigma, tau=tau)
    if op == "lap":
        return sc.scalar_laplacian(chart, field, s, sigma, tau=tau)
    if op == "curl":
        return sc.curl(chart, field, s, sigma, tau=tau).cartesian
    if op == "veclap":
        return sc.vector_laplacian(chart, field, s, sigma, tau=tau).cartesian
    if op == "curlcurl":
        return -sc.curl_curl(chart, field, s, sigma, tau=tau).cartesian
    if op == "hessian":
        return sc.hessian(chart, field, s, sigma, tau=tau).cartesian
    if op == "vecgrad":
        return sc.vector_gradient(chart, field, s, sigma, tau=tau).cartesian
    if op == "convective":
        return sc.convective_derivative(chart, field, s, sigma, tau=tau).cartesian
    raise ValueError(f"unknown surface operator {op!r}")


def _tube_op(op, curve, field, s, theta, sigma, tau, phi0):
    args = (curve, field, s, theta, sigma)
    kw = {"tau": tau, "phi0": phi0}
    if op == "grad":
        return tc.tube_gradient(*args, **kw).cartesian
    if op == "vecgrad":
        return tc.tube_vector_gradient(*args, **kw).cartesian
    if op == "div":
        return tc.tube_divergence(*args, **kw)
    if op == "lap":
        return tc.tube_scalar_laplacian(*args, **kw)
    if op == "curl":
        return tc.tube_curl(*args, **kw).cartesian
    if op == "veclap":
        return tc.tube_vector_laplacian(*args, **kw).cartesian
    raise ValueError(f"unknown tube operator {op!r}")


def _curvilinear(op, geometry, field, pts, tau, phi0):
    """Operator values per point; failures become NaN plus a message."""
    tube = geometry.kind == "curve"

    def run(idx):
        if tube:
            return _tube_op(op, geometry, field, pts[0][idx], pts[1][idx], pts[2][idx], tau, phi0)
        return _surface_op(op, geometry, field, pts[0][idx], pts[1][idx], tau)

    n = len(pts[0])
    idx = np.arange(n)
    try:
        return np.asarray(run(idx), float), {}
    except (ValueError, ArithmeticError):
        pass
    vals, errs = [], {}
    for i in range(n):
        try:
            vals.append(np.asarray(run(idx[i:i + 1]), float)[0])
        except (ValueError, ArithmeticError) as err:
            vals.append(None)
            errs[i] = f"{type(err).__name__}: {err}"
    shape = next((np.shape(v) for v in vals if v is not None), ())
    return np.stack([np.full(shape, np.nan) if v is None else v for v in vals]), errs


def _cartesian_points(geometry, pts, tau, phi0):
    if geometry.kind == "curve":
        return tube_to_cartesian(geometry, pts[0], pts[1], pts[2], tau=tau, phi0=phi0)
    return to_cartesian(geometry, pts[0], pts[1], tau=tau)


def _as_points(geometry, points, tau, phi0):
    """Curvilinear tuple ``(s, sigma)`` / ``(s, theta, sigma)`` or Cartesian (N, 3)."""
    if isinstance(points, tuple):
        pts = tuple(np.asarray(p, float) for p in points)
        return pts, _cartesian_points(geometry, pts, tau, phi0)
    x = np.atleast_2d(np.asarray(points, float))
    if geometry.kind == "curve":
        co = tube_from_cartesian(geometry, x, tau=tau, phi0=phi0)
        return (co.s, co.theta, co.sigma), x
    co = signed_distance(geometry, x, tau=tau)
    return (co.s, co.sigma), x


def compare(op_name, geometry, field, points, tau=0.0, phi0=0.0, h1=None, h2=None, fault=0.0,
            fault_control=None):
    """Curvilinear operator vs ambient FD at ``points``.

    Returns ``{op, max_abs, max_rel, worst_point, n_points, failures}``;
    relative error is ``|calc - oracle| / max(|oracle|, 1e-8)`` per point
    (Frobenius norm for vectors and tensors).  ``fault`` adds a curvature
    offset on the curvilinear side only.  With ``fault_control=delta`` the
    faulted values are also compared against the same oracle values and
    reported as ``fault_max_rel`` (the negative control).
    """
    pts, x = _as_points(geometry, points, tau, phi0)
    amb = pullback(field, geometry, tau=tau, phi0=phi0)

    def work(sl):
        sub = tuple(p[sl] for p in pts)
        with _fault_ctx(fault):
            calc, errs = _curvilinear(op_name, geometry, field, sub, tau, phi0)
        ref = fd_operator(op_name, amb, x[sl], h1, h2)
        return calc, ref, {k + sl.start: v for k, v in errs.items()}

    parts = chunked(work, len(x), serial=bool(fault))
    calc = np.concatenate([p[0] for p in parts])
    ref = np.concatenate([p[1] for p in parts])
    errs = {}
    for p in parts:
        errs.update(p[2])
    report = _report(op_name, x, calc, ref, errs)
    if fault_control:
        with _fault_ctx(fault_control):
            bad, _ = _curvilinear(op_name, geometry, field, pts, tau, phi0)
        report["fault_max_rel"] = _report(op_name, x, bad, ref, {})["max_rel"]
    return report


def _rel(calc, ref):
    n = len(ref)
    d = (calc - ref).reshape(n, -1)
    r = ref.reshape(n, -1)
    absd = np.sqrt(np.sum(d * d, -1))
    return absd, absd / np.maximum(np.sqrt(np.sum(r * r, -1)), REL_FLOOR)


def _report(op_name, x, calc, ref, errs):
    absd, rel = _rel(calc, ref)
    n = len(x)
    failures = []
    for i in range(n):
        if i in errs:
            failures.append({"index": i, "error": errs[i]})
        elif not np.isfinite(rel[i]):
            failures.append({"index": i, "error": "oracle stencil left the collar"})
    ok = np.isfinite(rel)
    if np.any(ok):
        w = int(np.flatnonzero(ok)[np.argmax(rel[ok])])
        report = {"op": op_name, "max_abs": float(np.max(absd[ok])), "max_rel": float(rel[w]),
                  "worst_point": [float(v) for v in x[w]]}
    else:
        report = {"op": op_name, "max_abs": float("nan"), "max_rel": float("nan"), "worst_point": None}
    report["n_points"] = int(np.sum(ok))
    report["failures"] = failures
    return report


def _fault_ctx(delta):
    return curvature_fault(delta) if delta else _null()


class _null:
    def __enter__(self):
        return self

    def __exit__(self, *a):
        return False


# -- sampling and random fields ----------------------------------------------------------------
def sample_collar(geometry, n, rng, fraction=0.7, margin=0.1, tau=0.0, phi0=0.0):
    """Random collar points: surface ``(s, sigma)`` or tube ``(s, theta, sigma)``.

    Parameters stay a ``margin`` fraction away from non-periodic domain ends
    (and from the poles of polar charts); ``|sigma|`` stays within
    ``fraction`` of the local focal distance.  Points whose projection does
    not return them (outside the global injectivity radius) are redrawn.
    """
    out = _draw(geometry, n, rng, fraction, margin, tau)
    for _ in range(20):
        bad = ~_roundtrip(geometry, out, tau, phi0)
        if not np.any(bad):
            return out
        new = _draw(geometry, int(np.sum(bad)), rng, fraction, margin, tau)
        for a, b in zip(out, new):
            a[bad] = b
    raise ValueError("could not sample collar points with a unique projection")


def _roundtrip(geometry, pts, tau, phi0):
    x = _cartesian_points(geometry, pts, tau, phi0)
    if geometry.kind == "curve":
        co = tube_from_cartesian(geometry, x, tau=tau, phi0=phi0, on_error="nan")
        ok = (co.status == 0) & (np.abs(co.sigma - pts[2]) < 1e-8) & (np.abs(co.s - pts[0]) < 1e-6)
    else:
        co = signed_distance(geometry, x, tau=tau, on_error="nan")
        back = to_cartesian(geometry, np.where(np.isfinite(co.s), co.s, 0.0), np.nan_to_num(co.sigma), tau=tau)
        ok = (co.status == 0) & (np.abs(co.sigma - pts[1]) < 1e-8) & (np.linalg.norm(back - x, axis=-1) < 1e-8)
    return ok


def _draw(geometry, n, rng, fraction, margin, tau):
    dom = geometry.domain
    if geometry.kind == "curve":
        lo, hi = dom[0]
        span = hi - lo
        if geometry.periodic[0]:
            s = rng.uniform(lo, hi, n)
        else:
            s = rng.uniform(lo + margin * span, hi - margin * span, n)
        theta = rng.uniform(0.0, 2 * np.pi, n)
        k = np.max(frenet(geometry, np.linspace(lo + 0.01 * span, hi - 0.01 * span, 257), tau=tau).kappa)
        top = fraction / k if k > 0 else 1.0
        sigma = rng.uniform(0.1 * top, top, n)
        return s, theta, sigma
    s = np.empty((n, 2))
    for k in range(2):
        lo, hi = dom[k]
        m = 0.0 if geometry.periodic[k] else margin * (hi - lo)
        if geometry.normalize is not None and k == 0:
            m = max(m, 0.15 * (hi - lo))
        s[:, k] = rng.uniform(lo + m, hi - m, n)
    cd = shape_operator(geometry, s, tau=tau)
    kmax = np.maximum(np.abs(cd.k1), np.abs(cd.k2))
    top = np.where(kmax > 0, fraction / np.where(kmax > 0, kmax, 1.0), 1.0)
    top = np.minimum(top, 1.0)
    sigma = rng.uniform(-1.0, 1.0, n) * top
    return s, sigma


def _coef(rng, lo=-1.0, hi=1.0):
    return round(float(rng.uniform(lo, hi)), 3)


def _freq(rng, periodic):
    return int(rng.integers(1, 3)) if periodic else round(float(rng.uniform(0.3, 1.2)), 3)


def _fmt(v):
    return f"({v})" if isinstance(v, float) and v < 0 else f"{v}"


def random_scalar(geometry, rng):
    """A smooth random scalar field in the geometry's coordinates (expression text is reproducible)."""
    if geometry.kind == "curve":
        names = ("s", "theta")
        per = (geometry.periodic[0], True)
        normal = "sigma"
    else:
        names = ("s1", "s2")
        per = geometry.periodic
        normal = "sigma"
    a = [_coef(rng) for _ in range(5)]
    f = [_freq(rng, p) for p in per]
    ph = [_coef(rng, 0, 3) for _ in range(2)]
    if geometry.kind == "curve":
        lead = f"{_fmt(a[0])}*{normal}^2*cos(theta+{ph[1]})"
    else:
        lead = f"{_fmt(a[0])}*{normal}^2"
    text = (f"{lead} + {_fmt(a[1])}*{normal}*sin({f[0]}*{names[0]}+{ph[0]})"
            f" + {_fmt(a[2])}*cos({f[0]}*{names[0]})*sin({f[1]}*{names[1]}+{ph[1]})"
            f" + {_fmt(a[3])}*exp({_fmt(a[4])}*{normal})*cos({f[1]}*{names[1]})")
    variables = ("s", "theta", "sigma", "tau") if geometry.kind == "curve" else ("sigma", "s1", "s2", "tau")
    return Field([text], "scalar", variables)


def random_vector(geometry, rng, ambient=None):
    """Random vector field: intrinsic frame components, or Cartesian polynomials when ``ambient``.

    On the ellipsoid-like charts with isolated umbilics the principal frame
    spins near the umbilic, so ambient components are the default there.
    """
    if ambient is None:
        ambient = geometry.kind == "surface" and geometry.name == "ellipsoid"
    if ambient:
        comps = []
        for _ in range(3):
            a = [_coef(rng) for _ in range(5)]
            comps.append(f"{_fmt(a[0])} + {_fmt(a[1])}*x*y + {_fmt(a[2])}*sin(z+{_fmt(a[3])}) + {_fmt(a[4])}*y^2*z")
        return Field(comps, "vector", ambient=True)
    return Field([random_scalar(geometry, rng).texts[0] for _ in range(3)], "vector",
                 ("s", "theta", "sigma", "tau") if geometry.kind == "curve" else ("sigma", "s1", "s2", "tau"))
