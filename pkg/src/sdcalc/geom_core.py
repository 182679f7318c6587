"""Geometry inputs: parametric surface and curve charts, derivative jets, and
the built-in chart library.

A chart is a map from parameters (and optionally a time ``tau``) to three
Cartesian components.  The map is evaluated generically, so the same chart
returns points for float arrays and full Taylor jets for jet inputs.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import expr as ex
from .taylor import Taylor, TaylorSpace, stack

MAX_JET_ORDER = 8

Vec3 = np.ndarray
Tensor2 = np.ndarray


class ChartError(ValueError):
    pass


class DomainError(ChartError):
    pass


class OrderError(ChartError):
    pass


class _Chart:
    nparams = 0
    kind = ""

    def __init__(self, func, domain, periodic=None, name="custom", exprs=None,
                 time_dependent=False, normalize=None, params=None):
        self.func = func
        self.domain = np.array(domain, float).reshape(self.nparams, 2)
        self.periodic = tuple(bool(p) for p in (periodic or (False,) * self.nparams))
        self.name = name
        self.exprs = exprs
        self.time_dependent = bool(time_dependent)
        self.normalize = normalize
        self.params = dict(params or {})

    @property
    def expression_backed(self):
        return self.exprs is not None

    def evaluate(self, *args, tau=0.0):
        return self.func(*args, tau)

    def check_domain(self, *args, slack=1e-9):
        for k, a in enumerate(args):
            if self.periodic[k]:
                continue
            lo, hi = self.domain[k]
            tol = slack * max(1.0, hi - lo)
            a = np.asarray(a.value if isinstance(a, Taylor) else a)
            if np.any(a < lo - tol) or np.any(a > hi + tol):
                raise DomainError(f"parameter {k} outside chart domain [{lo}, {hi}]")

    def wrap(self, params):
        """Bring parameters back into the domain on periodic axes (and chart-specific folds)."""
        params = np.array(params, float)
        if self.normalize is not None:
            params = self.normalize(params)
        for k in range(self.nparams):
            if self.periodic[k]:
                lo, hi = self.domain[k]
                params[..., k] = lo + np.mod(params[..., k] - lo, hi - lo)
        return params


class SurfaceChart(_Chart):
    """``(s1, s2[, tau]) -> p``; ``func(s1, s2, tau)`` returns three components."""

    nparams = 2
    kind = "surface"
    variables = ("s1", "s2", "tau")

    def point(self, s, tau=0.0):
        s = np.asarray(s, float)
        return stack(self.func(s[..., 0], s[..., 1], tau))

    def jet(self, S1, S2, tau=0.0):
        """Evaluate on jets; returns a vector Taylor of batch shape (..., 3)."""
        return stack(self.func(S1, S2, tau))


class CurveChart(_Chart):
    """``(s[, tau]) -> p``; ``func(s, tau)`` returns three components."""

    nparams = 1
    kind = "curve"
    variables = ("s", "tau")

    def __init__(self, func, domain, closed=False, **kw):
        kw.setdefault("periodic", (closed,))
        super().__init__(func, domain, **kw)
        self.closed = bool(closed)

    def point(self, s, tau=0.0):
        return stack(self.func(np.asarray(s, float), tau))

    def jet(self, S, tau=0.0):
        return stack(self.func(S, tau))


# -- expression-backed charts ----------------------------------------------
def _as_ast(value, variables):
    if isinstance(value, (int, float)):
        return ex.Num(float(value))
    return ex.parse_expr(str(value), variables)


def _expr_func(asts, names):
    def func(*args):
        env = dict(zip(names, args))
        return [ex.evaluate(a, env) for a in asts]

    return func


def expression_surface(exprs, domain, periodic=(False, False), name="exprs", params=None, normalize=None):
    """Surface chart from three component expressions in ``s1, s2, tau``."""
    return _expression_chart(SurfaceChart, exprs, domain, ("s1", "s2", "tau"), name, params,
                             periodic=periodic, normalize=normalize)


def expression_curve(exprs, domain, closed=False, name="exprs", params=None):
    """Curve chart from three component expressions in ``s, tau``."""
    return _expression_chart(CurveChart, exprs, domain, ("s", "tau"), name, params, closed=closed)


def _expression_chart(cls, exprs, domain, names, name, params, **kw):
    if len(exprs) != 3:
        raise ChartError("a chart needs exactly three component expressions")
    params = dict(params or {})
    pvars = set(params) | set(names)
    subs = {k: _as_ast(v, set(names)) for k, v in params.items()}
    asts = [ex.substitute(_as_ast(e, pvars), subs) for e in exprs]
    time_dep = any("tau" in ex.free_variables(a) for a in asts)
    chart = cls(_expr_func(asts, names), domain, name=name, exprs=asts,
                time_dependent=time_dep, params=params, **kw)
    chart.variables = names
    return chart


def closure_surface(func, domain, periodic=(False, False), name="closure", time_dependent=False):
    """Surface chart from a Python callable ``func(s1, s2, tau) -> (x, y, z)``.

    The callable must be written with the generic math helpers in
    :mod:`sdcalc.taylor` (or plain arithmetic) so that it accepts jets.
    """
    return SurfaceChart(func, domain, periodic=periodic, name=name, time_dependent=time_dependent)


def closure_curve(func, domain, closed=False, name="closure", time_dependent=False):
    return CurveChart(func, domain, closed=closed, name=name, time_dependent=time_dependent)


# -- built-in library ------------------------------------------------------
def _polar_fold(params):
    # s1 in [0, pi] with poles; reflect through the pole onto the other meridian
    s1 = np.mod(params[..., 0], 2 * math.pi)
    flip = s1 > math.pi
    params[..., 0] = np.where(flip, 2 * math.pi - s1, s1)
    params[..., 1] = np.where(flip, params[..., 1] + math.pi, params[..., 1])
    return params


TWO_PI = 2 * math.pi

_SURFACES = {
    "plane": (("s1", "s2", "0"), {}, [[-10, 10], [-10, 10]], (False, False), None),
    "sphere": (("R*cos(s1)", "R*sin(s1)*cos(s2)", "R*sin(s1)*sin(s2)"), {"R": 1.0},
               [[0, math.pi], [0, TWO_PI]], (False, True), _polar_fold),
    "ellipsoid": (("a*sin(s1)*cos(s2)", "b*sin(s1)*sin(s2)", "c*cos(s1)"),
                  {"a": 1.0, "b": math.sqrt(2.0), "c": 2.0},
                  [[0, math.pi], [0, TWO_PI]], (False, True), _polar_fold),
    "torus": (("(R+r*cos(s2))*cos(s1)", "(R+r*cos(s2))*sin(s1)", "r*sin(s2)"), {"R": 2.0, "r": 0.5},
              [[0, TWO_PI], [0, TWO_PI]], (True, True), None),
    "cylinder": (("R*cos(s1)", "R*sin(s1)", "s2"), {"R": 1.0},
                 [[0, TWO_PI], [-5, 5]], (True, False), None),
}

_CURVES = {
    "line": (("ox+dx*s", "oy+dy*s", "oz+dz*s"),
             {"ox": 0.0, "oy": 0.0, "oz": 0.0, "dx": 0.0, "dy": 0.0, "dz": 1.0}, [-10, 10], False),
    "circle": (("R*cos(s)", "R*sin(s)", "0"), {"R": 1.0}, [0, TWO_PI], True),
    "helix": (("a*cos(s)", "a*sin(s)", "b*s"), {"a": 1.0, "b": 0.5}, [0, 4 * math.pi], False),
    "paper": (("cos(2*pi*s)", "sin(2*pi*s)", "c*s^2"), {"c": 1.0}, [0, 1], False),
}


def builtin_surface(name, domain=None, **params):
    """Built-in surface: plane, sphere(R), cylinder(R), torus(R, r), ellipsoid(a, b, c), graph(f).

    Parameters may be numbers or expressions in ``tau``.
    """
    if name == "graph":
        f = params.pop("f", "0")
        f_ast = ex.parse_expr(str(f), {"x", "y", "s1", "s2", "tau"})
        f_ast = ex.substitute(f_ast, {"x": ex.Var("s1"), "y": ex.Var("s2")})
        exprs = ("s1", "s2", ex.to_string(f_ast))
        return expression_surface(exprs, domain or [[-1, 1], [-1, 1]], name="graph", params=params)
    if name not in _SURFACES:
        raise ChartError(f"unknown built-in surface {name!r}")
    exprs, defaults, dom, periodic, fold = _SURFACES[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ChartError(f"unknown parameter(s) {sorted(unknown)} for {name}")
    merged = {**defaults, **params}
    return expression_surface(exprs, domain or dom, periodic=periodic, name=name,
                              params=merged, normalize=fold)


def builtin_curve(name, domain=None, **params):
    """Built-in curve: line, circle(R), helix(a, b), paper (cos 2 pi s, sin 2 pi s, c s^2)."""
    if name not in _CURVES:
        raise ChartError(f"unknown built-in curve {name!r}")
    exprs, defaults, dom, closed = _CURVES[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ChartError(f"unknown parameter(s) {sorted(unknown)} for {name}")
    merged = {**defaults, **params}
    if domain is not None:
        closed = False
    return expression_curve(exprs, domain or dom, closed=closed, name=name, params=merged)


def load_geometry(spec):
    """Build a chart from a geometry spec (dict, JSON text or path)."""
    src = "<geometry>"
    if isinstance(spec, (str, Path)) and not str(spec).lstrip().startswith("{"):
        src = str(spec)
        spec = json.loads(Path(spec).read_text())
    elif isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict):
        raise ChartError(f"{src}: geometry spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in ("surface", "curve"):
        raise ChartError(f"{src}: field 'kind' must be 'surface' or 'curve'")
    domain = spec.get("domain")
    try:
        if "builtin" in spec:
            b = spec["builtin"]
            if isinstance(b, str):
                b = {"name": b}
            b = dict(b)
            if "params" in b:
                b.update(b.pop("params"))
            name = b.pop("name")
            if kind == "surface":
                return builtin_surface(name, domain=domain, **b)
            return builtin_curve(name, domain=domain, **b)
        if "exprs" in spec:
            if domain is None:
                raise ChartError("field 'domain' is required with 'exprs'")
            if kind == "surface":
                return expression_surface(spec["exprs"], domain, periodic=tuple(spec.get("periodic", (False, False))))
            return expression_curve(spec["exprs"], domain[0] if np.ndim(domain) == 2 else domain,
                                    closed=bool(spec.get("closed", False)))
    except (ex.ExprError, KeyError, TypeError) as err:
        raise ChartError(f"{src}: {err}") from err
    raise ChartError(f"{src}: expected field 'builtin' or 'exprs'")


# -- derivative jets --------------------------------------------------------
@dataclass
class Jet:
    """Partial derivatives at one point, keyed by sorted multi-index of variable numbers.

    ``jet[()]`` is the value, ``jet[(0, 1)]`` the mixed second derivative in
    variables 0 and 1; any permutation of the key gives the same entry.
    """

    derivs: dict = field(default_factory=dict)
    nvars: int = 0
    order: int = 0

    def __getitem__(self, multi):
        key = tuple(sorted(multi))
        if len(key) > self.order:
            raise OrderError(f"derivative {key} exceeds jet order {self.order}")
        return self.derivs[key]

    @property
    def value(self):
        return self.derivs[()]

    def keys(self):
        return self.derivs.keys()


def _multi_indices(nvars, order):
    import itertools
    out = []
    for d in range(order + 1):
        out.extend(itertools.combinations_with_replacement(range(nvars), d))
    return out


@lru_cache(maxsize=256)
def _symbolic_tree(ast, var_names, key):
    if not key:
        return ast
    return ex.diff(_symbolic_tree(ast, var_names, key[:-1]), var_names[key[-1]])


def chart_jet(chart, params, max_order, tau=0.0):
    """All partial derivatives of the chart up to ``max_order`` at ``params``.

    Variables are the chart parameters followed by ``tau``.  Expression charts
    differentiate their syntax trees exactly; other charts are pushed through
    Taylor jets.
    """
    params = np.atleast_1d(np.asarray(params, float))
    if params.shape[-1] != chart.nparams:
        raise ChartError(f"expected {chart.nparams} parameter(s)")
    if max_order > MAX_JET_ORDER or max_order < 0:
        raise OrderError(f"order {max_order} not supported (max {MAX_JET_ORDER})")
    chart.check_domain(*[params[..., k] for k in range(chart.nparams)])
    nvars = chart.nparams + 1
    names = tuple(chart.variables) if chart.expression_backed else None
    out = {}
    if chart.expression_backed:
        env = dict(zip(names, [params[..., k] for k in range(chart.nparams)] + [tau]))
        for key in _multi_indices(nvars, max_order):
            comps = [ex.evaluate(_symbolic_tree(a, names, key), env) for a in chart.exprs]
            out[key] = np.stack(np.broadcast_arrays(*[np.asarray(c, float) for c in comps]), -1)
        return Jet(out, nvars, max_order)
    space = TaylorSpace.get(nvars, max_order)
    args = [space.variable(k, params[..., k]) for k in range(chart.nparams)]
    T = space.variable(chart.nparams, np.broadcast_to(np.asarray(tau, float), params.shape[:-1]))
    p = chart.jet(*args, tau=T)
    for key in _multi_indices(nvars, max_order):
        m = [0] * nvars
        for v in key:
            m[v] += 1
        out[key] = p.partial(m)
    return Jet(out, nvars, max_order)


def fd_derivative(f, x, order=1):
    """Central-difference first or second derivative with the standard optimal steps."""
    eps = np.finfo(float).eps
    scale = max(1.0, abs(x))
    if order == 1:
        h = eps ** (1 / 3) * scale
        vals = (f(x + h), f(x - h))
        out = (vals[0] - vals[1]) / (2 * h)
    elif order == 2:
        h = eps ** (1 / 4) * scale
        vals = (f(x + h), f(x), f(x - h))
        out = (vals[0] - 2 * vals[1] + vals[2]) / (h * h)
    else:
        raise ValueError("order must be 1 or 2")
    if not all(np.all(np.isfinite(v)) for v in vals):
        raise FloatingPointError("non-finite sample in finite difference")
    return out
