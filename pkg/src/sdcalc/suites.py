"""Verification suites behind ``sdcalc verify``.

Each suite returns ``{suite, geometry, seed, per_op, passed}`` where every
``per_op`` entry carries ``max_abs, max_rel, n_points, failures``, the
tolerance it is judged against and ``passed``.  Everything is derived from
the seed, so reports are reproducible byte for byte.

For residual checks (closure, constraints, identities) the reference value
is zero and ``max_rel`` is the residual itself.
"""

import numpy as np

from . import asymptotics as asy
from . import oracle
from . import surface_calculus as sc
from . import surface_evolution as se
from . import tube_calculus as tc
from .closest_point import to_cartesian
from .curve_frames import tube_from_cartesian, tube_to_cartesian
from .fields import ambient_scalar, ambient_vector

SUITES = ("surface", "tube", "evolution", "asymptotics")
ORACLE_TOL = 1e-4
FAULT_DELTA = 1e-3
IDENTITY_TOL = 1e-6
SLOPE_TOL = 0.2
COEF_TOL = 1e-10
DEFAULTS = {"surface": 200, "tube": 200, "evolution": 100, "asymptotics": 3}


class SuiteError(ValueError):
    pass


def _entry(max_abs, max_rel, n, failures, tol, **extra):
    out = {"max_abs": _f(max_abs), "max_rel": _f(max_rel), "n_points": int(n), "failures": failures,
           "tolerance": tol}
    out.update(extra)
    ok = n > 0 and np.isfinite(max_rel) and max_rel < tol and not failures
    if "fault_max_rel" in extra:
        ok = ok and extra["fault_detected"]
    out["passed"] = bool(ok)
    return out


def _f(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _residual(name, vals, tol, n=None):
    vals = np.abs(np.asarray(vals, float)).reshape(len(vals), -1).max(-1) if np.ndim(vals) else np.abs([vals])
    bad = [{"index": int(i), "error": "non-finite residual"} for i in np.flatnonzero(~np.isfinite(vals))]
    m = float(np.max(vals[np.isfinite(vals)])) if np.any(np.isfinite(vals)) else float("nan")
    return _entry(m, m, n if n is not None else int(np.sum(np.isfinite(vals))), bad, tol)


def run_suite(suite, geometry, seed=42, n_points=None, n_fields=3, tau=0.0, phi0=0.0, h1=None, h2=None,
              tolerance=None, fault=FAULT_DELTA):
    """Run one suite on a chart and return the report dict."""
    if suite not in SUITES:
        raise SuiteError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    n = DEFAULTS[suite] if n_points is None else int(n_points)
    if n < 1:
        raise SuiteError("n_points must be positive")
    rng = np.random.default_rng(seed)
    curve = geometry.kind == "curve"
    if suite == "surface":
        if curve:
            raise SuiteError("the surface suite needs a surface geometry")
        per_op = _oracle_suite(oracle.SURFACE_OPS, geometry, rng, n, n_fields, tau, phi0, h1, h2,
                               tolerance or ORACLE_TOL, fault)
    elif suite == "tube":
        if not curve:
            raise SuiteError("the tube suite needs a curve geometry")
        per_op = _oracle_suite(oracle.TUBE_OPS, geometry, rng, n, n_fields, tau, phi0, h1, h2,
                               tolerance or ORACLE_TOL, fault)
    elif suite == "evolution":
        per_op = (_curve_evolution if curve else _surface_evolution)(geometry, rng, n, tau, phi0, tolerance)
    else:
        per_op = _asymptotics_suite(geometry, rng, n, tau, phi0, tolerance)
    return {"suite": suite, "geometry": geometry.name, "seed": seed, "per_op": per_op,
            "passed": all(e["passed"] for e in per_op.values())}


# -- oracle suites ---------------------------------------------------------------------------
def draw_fields(geometry, rng, n_fields):
    scalars = [oracle.random_scalar(geometry, rng) for _ in range(n_fields)]
    vectors = [oracle.random_vector(geometry, rng) for _ in range(n_fields)]
    return scalars, vectors


def _oracle_suite(ops, geometry, rng, n, n_fields, tau, phi0, h1, h2, tol, fault):
    pts = oracle.sample_collar(geometry, n, rng, tau=tau, phi0=phi0)
    scalars, vectors = draw_fields(geometry, rng, n_fields)
    per_op = {}
    for op in ops:
        fields = vectors if op in oracle._VECTOR_IN else scalars
        max_abs = max_rel = fault_rel = 0.0
        count, failures = 0, []
        for k, fld in enumerate(fields):
            r = oracle.compare(op, geometry, fld, pts, tau=tau, phi0=phi0, h1=h1, h2=h2,
                               fault_control=fault)
            if r["n_points"]:
                max_abs = max(max_abs, r["max_abs"])
                max_rel = max(max_rel, r["max_rel"])
            fault_rel = max(fault_rel, r["fault_max_rel"] or 0.0)
            count += r["n_points"]
            failures += [dict(f, field=k) for f in r["failures"]]
        per_op[op] = _entry(max_abs, max_rel, count, failures, tol,
                            fault_max_rel=_f(fault_rel), fault_detected=bool(fault_rel > tol))
    return per_op


def identity_residuals(chart, scalars, vectors, pts, tau=0.0):
    """Largest residual of each vector-calculus identity over the fields, on ``pts = (s, sigma)``."""
    s, sigma = pts
    out = {"curl_grad": 0.0, "div_curl": 0.0, "veclap_decomposition": 0.0, "hessian_symmetry": 0.0,
           "commutators": 0.0}
    for f in scalars:
        calc = sc.SurfaceCalc(chart, s, sigma, tau=tau)
        g = sc.op_gradient(calc, calc.scalar(f))
        out["curl_grad"] = max(out["curl_grad"], _maxabs(sc.op_curl(calc, g)))
        H = sc.hessian(chart, f, s, sigma, tau=tau).frame
        out["hessian_symmetry"] = max(out["hessian_symmetry"], _maxabs(H - np.swapaxes(H, -1, -2)))
        out["commutators"] = max(out["commutators"], _maxabs(sc.commutator_residuals(chart, f, s, sigma, tau=tau)))
    for u in vectors:
        calc = sc.SurfaceCalc(chart, s, sigma, tau=tau)
        U = calc.vector(u)
        out["div_curl"] = max(out["div_curl"], _maxabs(sc.op_divergence(calc, sc.op_curl(calc, U))))
        lap = sc.op_vector_laplacian(calc, U)
        gd = sc.op_gradient(calc, sc.op_divergence(calc, U))
        mcc = sc.op_curl_curl(calc, U)  # -curl curl u
        out["veclap_decomposition"] = max(out["veclap_decomposition"],
                                          _maxabs([a - b - c for a, b, c in zip(lap, gd, mcc)]))
    return out


def _maxabs(v):
    if isinstance(v, (list, tuple)):
        return max(_maxabs(x) for x in v)
    v = getattr(v, "value", v)
    return float(np.max(np.abs(v)))


# -- evolution -------------------------------------------------------------------------------
def _surface_evolution(chart, rng, n, tau, phi0, tol):
    m = se.SurfaceMotion(chart)
    s, sigma = oracle.sample_collar(chart, n, rng, tau=tau)
    x = to_cartesian(chart, s, sigma, tau=tau)
    per = {}
    r = se.dt_coordinates(chart, m, x, tau)
    fd = se.fd_dsigma(chart, x, tau)
    d = np.abs(r.dsigma - fd)
    per["dsigma_reprojection"] = _entry(d.max(), (d / np.maximum(np.abs(fd), oracle.REL_FLOOR)).max(), n, [],
                                        tol or 1e-5)
    clo = np.stack([se.dt_scalar(ambient_scalar(k), m, x, tau) for k in "xyz"], -1)
    per["closure"] = _residual("closure", clo, tol or 1e-6)
    steady = se.dt_vector(ambient_vector(["sin(x)*y", "z^2", "x*y*z"]), m, x, tau)
    per["steady_vector"] = _residual("steady_vector", steady, tol or 1e-6)
    t = se.dtau_tangents(chart, m, s, tau)
    ft = se.fd_dtau_tangents(chart, s, tau)
    per["mixed_partials"] = _residual("mixed_partials", np.concatenate([t[0] - ft[0], t[1] - ft[1]], -1),
                                      tol or 1e-6)
    return per


def _curve_evolution(curve, rng, n, tau, phi0, tol):
    m = tc.CurveMotion(curve) if getattr(curve, "time_dependent", False) else tc.CurveMotion.static(curve)
    s, th, sg = oracle.sample_collar(curve, n, rng, tau=tau, phi0=phi0)
    per = {}
    c1, c2 = tc.frenet_constraint_residuals(curve, m, s, tau)
    per["frenet_constraints"] = _residual("frenet_constraints", np.stack([c1, c2], -1), tol or 1e-6)
    if getattr(curve, "time_dependent", False):
        te = tc.torsion_evolution(curve, m, s, tau)
        tf = tc.fd_torsion_rate(curve, s, tau)
        d = np.abs(te - tf)
        per["torsion_evolution"] = _entry(d.max(), (d / np.maximum(np.abs(tf), oracle.REL_FLOOR)).max(), n, [],
                                          tol or 1e-3)
    x = tube_to_cartesian(curve, s, th, sg, tau=tau, phi0=phi0)
    clo = np.stack([tc.dt_scalar_tube(ambient_scalar(k), m, x, tau, phi0=phi0) for k in "xyz"], -1)
    per["closure"] = _residual("closure", clo, tol or 1e-6)
    if getattr(curve, "time_dependent", False):
        h = se.FD_TAU
        dts = tc.dt_tube_coordinates(curve, m, x, tau, phi0=phi0)
        a = tube_from_cartesian(curve, x, tau + h, phi0=phi0)
        b = tube_from_cartesian(curve, x, tau - h, phi0=phi0)
        fd = (a.sigma - b.sigma) / (2 * h)
        d = np.abs(dts[1] - fd)
        per["dsigma_reprojection"] = _entry(d.max(), (d / np.maximum(np.abs(fd), oracle.REL_FLOOR)).max(), n, [],
                                            tol or 1e-5)
    return per


# -- asymptotics -----------------------------------------------------------------------------
_SURF_ASY = (("scalar_lap", "scalar"), ("div", "vector"), ("advect_scalar", "scalar"))
_TUBE_ASY = (("scalar_lap", "scalar"), ("div", "vector"), ("advect_scalar", "scalar"))


def random_layer_scalar(geometry, rng):
    curve = geometry.kind == "curve"
    a, b = (_c(rng) for _ in range(2))
    k = int(rng.integers(1, 3))
    if curve:
        text = f"sin({a}*xi+{k}*s)*cos(theta) + {b}*xi^2*cos({k}*theta) + xi*sin(s)"
    else:
        text = f"sin({a}*xi+{k}*s1)*cos(s2) + {b}*xi^2*s1 + xi*cos(s2)"
    return asy.layer_field(text, "tube" if curve else "surface")


def random_layer_vector(geometry, rng):
    curve = geometry.kind == "curve"
    a, b, c = (_c(rng) for _ in range(3))
    if curve:
        comps = [f"cos({a}*xi)*sin(s)+0.3", f"sin(xi+theta)*{b}", f"xi*cos(theta)*s+{c}"]
    else:
        comps = [f"cos({a}*xi)*s1+0.3", f"sin(xi+s2)*{b}", f"xi*s1*s2+{c}"]
    return asy.layer_field(comps, "tube" if curve else "surface")


def _c(rng):
    return f"{rng.uniform(0.5, 1.5):.3f}"


def sample_layer_points(geometry, rng, n):
    dom = geometry.domain
    if geometry.kind == "curve":
        lo, hi = dom[0]
        s = rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), n)
        th = rng.uniform(0, 2 * np.pi, n)
        return [asy.LayerPoint((float(a), float(b)), float(x)) for a, b, x in zip(s, th, rng.uniform(0.3, 1.0, n))]
    out = []
    for _ in range(n):
        s = [float(rng.uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo))) for lo, hi in dom]
        out.append(asy.LayerPoint(tuple(s), float(rng.uniform(-1.0, 1.0))))
    return out


def _asymptotics_suite(geometry, rng, n, tau, phi0, tol):
    curve = geometry.kind == "curve"
    pts = sample_layer_points(geometry, rng, n)
    f = random_layer_scalar(geometry, rng)
    u = random_layer_vector(geometry, rng)
    kw = {"tau": tau}
    if curve:
        kw["phi0"] = phi0
    per = {}
    for op, kind in (_TUBE_ASY if curve else _SURF_ASY):
        fld = f if kind == "scalar" else u
        extra = {"velocity": u} if op.startswith("advect") else {}
        for K in (0, 1, 2):
            devs, failures, exact = [], [], 0
            for i, p in enumerate(pts):
                try:
                    r = asy.convergence_slope(geometry, op, fld, p, K=K, **kw, **extra)
                except (ValueError, ArithmeticError) as err:
                    failures.append({"index": i, "error": str(err)})
                    continue
                if r.exact:
                    exact += 1
                    devs.append(0.0)
                else:
                    devs.append(abs(r.slope - r.predicted))
            m = max(devs) if devs else float("nan")
            per[f"{op}_K{K}"] = _entry(m, m, len(devs), failures, tol or SLOPE_TOL, exact_points=exact)
    if _constant_curvature(geometry):
        per["laplacian_leading"] = _coefficient_check(geometry, f, pts, kw)
    return per


def _constant_curvature(geometry):
    return geometry.name in ("plane", "sphere", "cylinder", "circle", "line")


def _coefficient_check(geometry, f, pts, kw):
    """Series coefficients of the scalar Laplacian vs the closed-form leading terms."""
    worst = 0.0
    for p in pts:
        if geometry.kind == "curve":
            ser = asy.expand_tube(geometry, "scalar_lap", f, p, K=0, **kw)
            lead = asy.tube_laplacian_leading(geometry, f, p, **kw)
        else:
            ser = asy.expand_surface(geometry, "scalar_lap", f, p, K=0, **kw)
            lead = asy.surface_laplacian_leading(geometry, f, p, **kw)
        for k, ref in zip((-2, -1, 0), lead):
            worst = max(worst, float(np.max(np.abs(ser.coefficient(k) - ref))))
    return _entry(worst, worst, len(pts), [], COEF_TOL)
