"""``sdcalc`` command line.

Exit codes: 0 success, 1 usage or input error, 2 validation failure
(a ``verify`` suite above tolerance).  Settings resolve as command-line
flags, then a ``--config`` JSON file, then built-in defaults.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import surface_calculus as sc
from . import surface_evolution as se
from . import tube_calculus as tc
from ._parallel import chunked
from .closest_point import signed_distance, to_cartesian
from .curve_frames import bishop_angle, frenet, tube_from_cartesian
from .fields import load_field
from .geom_core import load_geometry
from .suites import SUITES, run_suite
from .surface_frames import shape_operator

WIDTH = 80


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(prog):
    return argparse.HelpFormatter(prog, width=WIDTH, max_help_position=30)


# -- parser --------------------------------------------------------------------------------
SURFACE_OP_NAMES = ("laplacian", "lap", "grad", "div", "curl", "veclap", "curlcurl", "hessian", "vecgrad",
                    "convective")
TUBE_OP_NAMES = ("grad", "vecgrad", "div", "lap", "curl", "veclap", "dtscalar", "dtvector", "dtorsion")
EXPAND_OPS = {"lap": "scalar_lap", "div": "div", "grad": "grad_scalar", "vecgrad": "grad_vector",
              "veclap": "vector_lap", "curl": "curl", "curlcurl": "curl_curl", "advect": "advect_scalar",
              "advect_vector": "advect_vector", "dt": "dt", "dtscalar": "dt_scalar", "dtvector": "dt_vector"}

DEFAULTS = {
    "tau": 0.0, "phi0": 0.0, "format": None, "samples": 512, "order": asy.DEFAULT_K, "xi": 0.7,
    "eps": ",".join(repr(e) for e in asy.DEFAULT_EPS), "seed": 42, "n_points": None, "n_fields": 3,
    "h1": None, "h2": None, "tolerance": None, "fault": 1e-3,
}


def _common(p, geom=True):
    if geom:
        p.add_argument("--geom", metavar="PATH", help="geometry spec (JSON)")
    p.add_argument("--config", metavar="PATH", help="JSON file of flag values (flags take precedence)")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--help", action="help", help="show this help message and exit")


def _points_args(p, what):
    p.add_argument("--points", metavar="PATH", help=f"CSV of points ({what})")
    p.add_argument("--grid", metavar="SPEC", help="grid lo:hi:n per axis, comma separated")


def _format_arg(p):
    p.add_argument("--format", choices=("csv", "json"), help="output format (default: from --out, else csv)")


def build_parser():
    p = _Parser(prog="sdcalc", add_help=False, formatter_class=_fmt, allow_abbrev=False,
                description="Signed-distance coordinates, operators and their verification.")
    p.add_argument("--help", action="help", help="show this help message and exit")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, text):
        return sub.add_parser(name, help=text, description=text, add_help=False, formatter_class=_fmt,
                              allow_abbrev=False)

    q = add("project", "Closest-point coordinates of ambient points.")
    _common(q)
    _points_args(q, "x,y,z")
    q.add_argument("--tau", type=float, help="time parameter")
    q.add_argument("--phi0", type=float, help="initial Bishop angle (curves)")
    _format_arg(q)

    q = add("frames", "Darboux frames and principal curvatures on a surface.")
    _common(q)
    _points_args(q, "s1,s2")
    q.add_argument("--tau", type=float, help="time parameter")
    _format_arg(q)

    q = add("op", "Differential operators in surface signed-distance coordinates.")
    _common(q)
    q.add_argument("--op", choices=SURFACE_OP_NAMES, help="operator")
    q.add_argument("--field", metavar="PATH", help="field spec (JSON)")
    _points_args(q, "s1,s2,sigma or x,y,z")
    q.add_argument("--tau", type=float, help="time parameter")
    _format_arg(q)

    q = add("evolve", "Time derivatives at fixed ambient points on a moving surface.")
    _common(q)
    q.add_argument("--op", choices=("dtscalar", "dtvector", "dtcoords"), help="quantity")
    q.add_argument("--field", metavar="PATH", help="field spec (JSON)")
    q.add_argument("--motion", metavar="PATH", help="velocity spec (JSON); default: from the chart's tau")
    _points_args(q, "s1,s2,sigma or x,y,z")
    q.add_argument("--tau", type=float, help="time parameter")
    _format_arg(q)

    q = add("tube-frames", "Frenet data and Bishop-rotated tube frames along a curve.")
    _common(q)
    q.add_argument("--phi0", type=float, help="initial Bishop angle")
    q.add_argument("--samples", type=int, help="number of equispaced samples")
    q.add_argument("--tau", type=float, help="time parameter")
    _format_arg(q)

    q = add("tube-op", "Differential operators in tube coordinates around a curve.")
    _common(q)
    q.add_argument("--op", choices=TUBE_OP_NAMES, help="operator")
    q.add_argument("--field", metavar="PATH", help="field spec (JSON)")
    q.add_argument("--motion", metavar="PATH", help="velocity spec (JSON) for dt ops")
    _points_args(q, "s,theta,sigma or x,y,z; s for dtorsion")
    q.add_argument("--tau", type=float, help="time parameter")
    q.add_argument("--phi0", type=float, help="initial Bishop angle")
    _format_arg(q)

    q = add("expand", "Boundary-layer series of an operator at a point.")
    _common(q)
    q.add_argument("--op", choices=tuple(EXPAND_OPS), help="operator")
    q.add_argument("--order", type=int, help="highest power of eps kept (0..6)")
    q.add_argument("--at", metavar="S", help="surface s1,s2 or curve s,theta (default: domain centre)")
    q.add_argument("--xi", type=float, help="stretched normal coordinate")
    q.add_argument("--eps", metavar="LIST", help="comma-separated eps values for the slope test")
    q.add_argument("--field", metavar="PATH", help="layer field spec (JSON); default: derivative channels")
    q.add_argument("--velocity", metavar="PATH", help="layer velocity field for advection")
    q.add_argument("--tau", type=float, help="time parameter")

    q = add("verify", "Run a verification suite against the finite-difference oracle.")
    _common(q)
    q.add_argument("--suite", choices=SUITES, help="suite to run")
    q.add_argument("--seed", type=int, help="random seed")
    q.add_argument("--n-points", type=int, dest="n_points", help="sample size (suite default if omitted)")
    q.add_argument("--n-fields", type=int, dest="n_fields", help="random fields per operator")
    q.add_argument("--h1", type=float, help="first-derivative FD step scale")
    q.add_argument("--h2", type=float, help="second-derivative FD step scale")
    q.add_argument("--tolerance", type=float, help="override the per-check tolerance")
    q.add_argument("--fault", type=float, help="curvature offset of the negative control")
    q.add_argument("--tau", type=float, help="time parameter")
    q.add_argument("--phi0", type=float, help="initial Bishop angle (curves)")
    return p


def _resolve(args):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ValueError(f"{args.config}: {err}") from err
        if not isinstance(cfg, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is None:
            ck = key.replace("_", "-")
            if key in cfg:
                val = cfg[key]
            elif ck in cfg:
                val = cfg[ck]
            else:
                val = DEFAULTS.get(key)
            setattr(args, key, val)
    return args


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"sdcalc {args.command}: --{n.replace('_', '-')} is required")


# -- input ---------------------------------------------------------------------------------
def _read_points(path):
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: no points")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in rows], float)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from err
    if data.ndim != 2 or (header and data.shape[1] != len(header)):
        raise ValueError(f"{path}: rows must all have the same number of columns")
    return header, data


def _grid(spec, naxes):
    parts = spec.split(",")
    if len(parts) != naxes:
        raise ValueError(f"--grid needs {naxes} axes, got {len(parts)}")
    axes = []
    for p in parts:
        try:
            lo, hi, n = p.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError as err:
            raise ValueError(f"--grid axis {p!r}: expected lo:hi:n") from err
        if n < 2:
            raise ValueError(f"--grid axis {p!r}: count must be at least 2")
        axes.append(np.linspace(lo, hi, n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], -1)


def _points(args, names, ambient_ok=True):
    """Point table as (kind, array): kind is 'curvilinear' or 'ambient'."""
    if args.points and args.grid:
        raise UsageError(f"sdcalc {args.command}: use either --points or --grid")
    if args.grid:
        return "curvilinear", _grid(args.grid, len(names))
    if not args.points:
        raise UsageError(f"sdcalc {args.command}: --points or --grid is required")
    header, data = _read_points(args.points)
    if header is None:
        kind = "curvilinear"
    elif ambient_ok and header[:3] == ["x", "y", "z"]:
        kind = "ambient"
    elif header[:len(names)] == list(names):
        kind = "curvilinear"
    else:
        raise ValueError(f"{args.points}: header must start with {','.join(names)}"
                         + (" or x,y,z" if ambient_ok else ""))
    width = 3 if kind == "ambient" else len(names)
    if data.shape[1] < width:
        raise ValueError(f"{args.points}: expected {width} columns, found {data.shape[1]}")
    return kind, data[:, :width]


def _geometry(args, kind=None):
    _require(args, "geom")
    g = load_geometry(args.geom)
    if kind and g.kind != kind:
        raise ValueError(f"{args.geom}: this command needs a {kind} geometry, got a {g.kind}")
    return g


def _field(args, path, geometry):
    return load_field(path, "tube" if geometry.kind == "curve" else "surface")


# -- output --------------------------------------------------------------------------------
def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def dumps_csv(columns, table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in table:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _table_out(args, columns, cols):
    """``cols`` is a list of 1-D arrays matching ``columns``."""
    n = len(cols[0]) if cols else 0
    fmt = args.format or ("json" if args.out and args.out.endswith(".json") else "csv")
    if fmt == "json":
        rows = [{c: _clean(v[i].item() if hasattr(v[i], "item") else v[i]) for c, v in zip(columns, cols)}
                for i in range(n)]
        _emit(args, dumps_json(rows))
    else:
        _emit(args, dumps_csv(columns, zip(*cols)))


def _split(prefix, arr, names):
    return [f"{prefix}{n}" for n in names], [arr[:, k] for k in range(arr.shape[1])]


def _batched(fn, n):
    """Evaluate ``fn(slice) -> list of columns`` in chunks and join them."""
    parts = chunked(fn, n)
    return [np.concatenate([p[k] for p in parts]) for k in range(len(parts[0]))]


# -- commands ------------------------------------------------------------------------------
def cmd_project(args):
    g = _geometry(args)
    kind, x = _points(args, ("x", "y", "z"))
    if kind != "ambient" and args.points:
        x = x[:, :3]
    if g.kind == "curve":
        def work(sl):
            co = tube_from_cartesian(g, x[sl], tau=args.tau, phi0=args.phi0, on_error="nan")
            return [co.s, co.theta, co.sigma, co.foot[:, 0], co.foot[:, 1], co.foot[:, 2], co.status]

        names = ["s", "theta", "sigma", "footx", "footy", "footz", "status"]
    else:
        def work(sl):
            co = signed_distance(g, x[sl], tau=args.tau, on_error="nan")
            return [co.s[:, 0], co.s[:, 1], co.sigma, co.foot[:, 0], co.foot[:, 1], co.foot[:, 2],
                    co.n[:, 0], co.n[:, 1], co.n[:, 2], co.status]

        names = ["s1", "s2", "sigma", "footx", "footy", "footz", "nx", "ny", "nz", "status"]
    cols = _batched(work, len(x))
    _table_out(args, ["x", "y", "z"] + names, [x[:, 0], x[:, 1], x[:, 2]] + cols)
    return 0


def cmd_frames(args):
    g = _geometry(args, "surface")
    _, s = _points(args, ("s1", "s2"), ambient_ok=False)

    def work(sl):
        cd = shape_operator(g, s[sl], tau=args.tau)
        p = to_cartesian(g, s[sl], np.zeros(len(s[sl])), tau=args.tau)
        return ([p[:, k] for k in range(3)] + [cd.n[:, k] for k in range(3)] + [cd.e1[:, k] for k in range(3)]
                + [cd.e2[:, k] for k in range(3)] + [cd.k1, cd.k2, cd.w1, cd.w2, cd.umbilic.astype(int)])

    cols = _batched(work, len(s))
    names = (["px", "py", "pz", "nx", "ny", "nz", "e1x", "e1y", "e1z", "e2x", "e2y", "e2z"]
             + ["k1", "k2", "w1", "w2", "umbilic"])
    _table_out(args, ["s1", "s2"] + names, [s[:, 0], s[:, 1]] + cols)
    return 0


def _surface_points(args, g):
    kind, pts = _points(args, ("s1", "s2", "sigma"))
    if kind == "ambient":
        co = signed_distance(g, pts, tau=args.tau)
        return co.s, co.sigma
    return pts[:, :2], pts[:, 2]


_FRAME = ("sigma", "1", "2")


def _vector_cols(res):
    names = [f"u_{k}" for k in _FRAME] + ["ux", "uy", "uz"]
    return names, [res.frame[:, k] for k in range(3)] + [res.cartesian[:, k] for k in range(3)]


def _tensor_cols(res):
    names, cols = [], []
    for i in range(3):
        for j in range(3):
            names.append(f"T_{_FRAME[i]}{_FRAME[j]}")
            cols.append(res.frame[:, i, j])
    for i, a in enumerate("xyz"):
        for j, b in enumerate("xyz"):
            names.append(f"T{a}{b}")
            cols.append(res.cartesian[:, i, j])
    return names, cols


def _run_op(fn, n, shape):
    """Evaluate ``fn(slice)`` in chunks and return (names, columns)."""
    holder = {}

    def work(sl):
        r = fn(sl)
        if shape == "scalar":
            return [np.asarray(r)]
        nm, cols = _vector_cols(r) if shape == "vector" else _tensor_cols(r)
        holder["names"] = nm
        return cols

    cols = _batched(work, n)
    return (["value"] if shape == "scalar" else holder["names"]), cols


def cmd_op(args):
    _require(args, "op", "field")
    g = _geometry(args, "surface")
    f = _field(args, args.field, g)
    s, sigma = _surface_points(args, g)
    op = "laplacian" if args.op == "lap" else args.op
    scalar_in = op in ("laplacian", "grad", "hessian")
    if scalar_in != (f.kind == "scalar"):
        raise ValueError(f"{args.field}: --op {args.op} needs a {'scalar' if scalar_in else 'vector'} field")
    kw = {"tau": args.tau}
    table = {
        "laplacian": (lambda sl: sc.scalar_laplacian(g, f, s[sl], sigma[sl], **kw), "scalar"),
        "div": (lambda sl: sc.divergence(g, f, s[sl], sigma[sl], **kw), "scalar"),
        "grad": (lambda sl: sc.gradient(g, f, s[sl], sigma[sl], **kw), "vector"),
        "curl": (lambda sl: sc.curl(g, f, s[sl], sigma[sl], on_error="nan", **kw), "vector"),
        "veclap": (lambda sl: sc.vector_laplacian(g, f, s[sl], sigma[sl], on_error="nan", **kw), "vector"),
        "curlcurl": (lambda sl: _negate(sc.curl_curl(g, f, s[sl], sigma[sl], on_error="nan", **kw)), "vector"),
        "convective": (lambda sl: sc.convective_derivative(g, f, s[sl], sigma[sl], on_error="nan", **kw),
                       "vector"),
        "hessian": (lambda sl: sc.hessian(g, f, s[sl], sigma[sl], on_error="nan", **kw), "tensor"),
        "vecgrad": (lambda sl: sc.vector_gradient(g, f, s[sl], sigma[sl], on_error="nan", **kw), "tensor"),
    }
    fn, shape = table[op]
    names, cols = _run_op(fn, len(sigma), shape)
    _table_out(args, ["s1", "s2", "sigma"] + names, [s[:, 0], s[:, 1], sigma] + cols)
    return 0


def _negate(res):
    """``curl_curl`` returns ``-curl curl u``; the CLI reports ``curl curl u``."""
    res.frame = -res.frame
    res.cartesian = -res.cartesian
    return res


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ValueError(f"{path}: {err}") from err


def _surface_motion(args, g):
    if not args.motion:
        if not g.time_dependent:
            raise ValueError(f"{args.geom}: chart has no tau dependence; pass --motion")
        return se.SurfaceMotion(g)
    spec = _load_json(args.motion)
    if not isinstance(spec, dict):
        raise ValueError(f"{args.motion}: motion spec must be a JSON object")
    try:
        return se.SurfaceMotion(g, spec.get("v_sigma", 0.0), spec.get("v_tangent", (0.0, 0.0)))
    except ValueError as err:
        raise ValueError(f"{args.motion}: {err}") from err


def _curve_motion(args, g):
    if not args.motion:
        if not g.time_dependent:
            raise ValueError(f"{args.geom}: curve has no tau dependence; pass --motion")
        return tc.CurveMotion(g)
    spec = _load_json(args.motion)
    comps = spec.get("components") if isinstance(spec, dict) else None
    if comps is None:
        raise ValueError(f"{args.motion}: field 'components' (v_t, v_n, v_b) is required")
    try:
        return tc.CurveMotion(g, comps)
    except ValueError as err:
        raise ValueError(f"{args.motion}: {err}") from err


def cmd_evolve(args):
    _require(args, "op")
    g = _geometry(args, "surface")
    m = _surface_motion(args, g)
    s, sigma = _surface_points(args, g)
    t = args.tau
    if args.op == "dtcoords":
        def work(sl):
            x = to_cartesian(g, s[sl], sigma[sl], tau=t)
            r = se.dt_coordinates(g, m, x, t)
            return [r.dsigma, r.ds[:, 0], r.ds[:, 1]]

        names = ["dt_sigma", "dt_s1", "dt_s2"]
    else:
        _require(args, "field")
        f = _field(args, args.field, g)
        want = "scalar" if args.op == "dtscalar" else "vector"
        if f.kind != want:
            raise ValueError(f"{args.field}: --op {args.op} needs a {want} field")
        if want == "scalar":
            def work(sl):
                return [se.dt_scalar(f, m, (s[sl], sigma[sl]), t)]

            names = ["dt"]
        else:
            def work(sl):
                r = se.dt_vector(f, m, (s[sl], sigma[sl]), t)
                return [r[:, k] for k in range(3)]

            names = ["dtx", "dty", "dtz"]
    cols = _batched(work, len(sigma))
    _table_out(args, ["s1", "s2", "sigma"] + names, [s[:, 0], s[:, 1], sigma] + cols)
    return 0


def cmd_tube_frames(args):
    g = _geometry(args, "curve")
    if args.samples < 2:
        raise ValueError("--samples must be at least 2")
    lo, hi = g.domain[0]
    s = np.linspace(lo, hi, int(args.samples))
    fr = frenet(g, s, tau=args.tau)
    phi = bishop_angle(g, tau=args.tau, phi0=args.phi0)(s)
    c, sn = np.cos(phi), np.sin(phi)
    u1 = c[:, None] * fr.n + sn[:, None] * fr.b
    u2 = -sn[:, None] * fr.n + c[:, None] * fr.b
    names = ["s", "phi", "kappa", "omega"]
    cols = [s, phi, fr.kappa, fr.omega]
    for pre, v in (("t", fr.t), ("n", fr.n), ("b", fr.b), ("u1", u1), ("u2", u2)):
        nm, cc = _split(pre, v, "xyz")
        names += nm
        cols += cc
    _table_out(args, names, cols)
    return 0


def cmd_tube_op(args):
    _require(args, "op")
    g = _geometry(args, "curve")
    t, phi0 = args.tau, args.phi0
    if args.op == "dtorsion":
        m = _curve_motion(args, g)
        if args.grid:
            s = _grid(args.grid, 1)[:, 0]
        else:
            _require(args, "points")
            _, data = _read_points(args.points)
            s = data[:, 0]
        cols = _batched(lambda sl: [tc.torsion_evolution(g, m, s[sl], t)], len(s))
        _table_out(args, ["s", "dtau_omega"], [s] + cols)
        return 0
    _require(args, "field")
    f = _field(args, args.field, g)
    kind, pts = _points(args, ("s", "theta", "sigma"))
    if kind == "ambient":
        co = tube_from_cartesian(g, pts, tau=t, phi0=phi0)
        s, th, sg = co.s, co.theta, co.sigma
    else:
        s, th, sg = pts[:, 0], pts[:, 1], pts[:, 2]
    scalar_in = args.op in ("grad", "lap", "dtscalar")
    if scalar_in != (f.kind == "scalar"):
        raise ValueError(f"{args.field}: --op {args.op} needs a {'scalar' if scalar_in else 'vector'} field")
    kw = {"tau": t, "phi0": phi0}
    frame = ("s", "sigma", "theta")
    if args.op in ("dtscalar", "dtvector"):
        m = _curve_motion(args, g)
        if args.op == "dtscalar":
            fn = lambda sl: [tc.dt_scalar_tube(f, m, (s[sl], th[sl], sg[sl]), **kw)]  # noqa: E731
            names = ["dt"]
        else:
            def fn(sl):
                r = tc.dt_vector_tube(f, m, (s[sl], th[sl], sg[sl]), **kw)
                return [r[:, k] for k in range(3)]

            names = ["dtx", "dty", "dtz"]
        cols = _batched(fn, len(s))
    else:
        ops = {"grad": (tc.tube_gradient, "vector"), "vecgrad": (tc.tube_vector_gradient, "tensor"),
               "div": (tc.tube_divergence, "scalar"), "lap": (tc.tube_scalar_laplacian, "scalar"),
               "curl": (tc.tube_curl, "vector"), "veclap": (tc.tube_vector_laplacian, "vector")}
        op, shape = ops[args.op]

        def work(sl):
            r = op(g, f, s[sl], th[sl], sg[sl], **kw)
            if shape == "scalar":
                return [np.asarray(r)]
            if shape == "vector":
                return [r.frame[:, k] for k in range(3)] + [r.cartesian[:, k] for k in range(3)]
            return ([r.frame[:, i, j] for i in range(3) for j in range(3)]
                    + [r.cartesian[:, i, j] for i in range(3) for j in range(3)])

        cols = _batched(work, len(s))
        if shape == "scalar":
            names = ["value"]
        elif shape == "vector":
            names = [f"u_{k}" for k in frame] + ["ux", "uy", "uz"]
        else:
            names = ([f"T_{a}{b}" for a in frame for b in frame]
                     + [f"T{a}{b}" for a in "xyz" for b in "xyz"])
    _table_out(args, ["s", "theta", "sigma"] + names, [s, th, sg] + cols)
    return 0


_DEFAULT_LAYER = {
    "surface": ("sin(xi+s1)*cos(s2) + 0.5*xi^2*s1 + cos(xi)",
                ["cos(xi)*s1+0.3", "sin(xi+s2)", "xi*s1*s2+1"]),
    "tube": ("sin(xi+s)*cos(theta) + 0.5*xi^2*cos(theta) + xi*sin(s)",
             ["cos(xi)*sin(s)+0.3", "sin(xi+theta)", "xi*cos(theta)*s+1"]),
}


def cmd_expand(args):
    _require(args, "op")
    g = _geometry(args)
    curve = g.kind == "curve"
    op = EXPAND_OPS[args.op]
    ops = asy.TUBE_OPS if curve else asy.SURFACE_OPS
    if op not in ops:
        raise ValueError(f"--op {args.op} has no {'tube' if curve else 'surface'} expansion")
    K = int(args.order)
    if not 0 <= K <= asy.MAX_K:
        raise ValueError(f"--order must be between 0 and {asy.MAX_K}")
    if args.at is None:
        at = [0.5 * (lo + hi) for lo, hi in g.domain] if not curve else [0.5 * sum(g.domain[0]), 0.0]
    else:
        try:
            at = [float(v) for v in str(args.at).split(",")]
        except ValueError as err:
            raise ValueError(f"--at {args.at!r}: {err}") from err
        if len(at) != 2:
            raise ValueError("--at takes two numbers")
    eps = args.eps if isinstance(args.eps, list) else [float(v) for v in str(args.eps).split(",") if v.strip()]
    point = asy.LayerPoint(tuple(at), float(args.xi))
    geom = "tube" if curve else "surface"
    kw = {"tau": args.tau}
    scalar_in = op in asy._SCALAR_IN
    if args.velocity:
        vel = _layer(args.velocity, geom)
    else:
        vel = asy.layer_field(_DEFAULT_LAYER[geom][1], geom)
    if op.startswith("advect"):
        kw["velocity"] = vel
    if op in ("dt", "dt_scalar", "dt_vector") and not g.time_dependent:
        raise ValueError(f"{args.geom}: --op {args.op} needs a chart with tau dependence")
    expand = asy.expand_tube if curve else asy.expand_surface
    out = {"geometry": g.name, "op": op, "order": K, "point": {"at": at, "xi": point.xi}}
    if args.field:
        fld = _layer(args.field, geom)
        ser = expand(g, op, fld, point, K=K, **kw)
        out["min_order"] = ser.min_order
        out["coeffs"] = [{"order": k, "value": _squeeze(ser.coefficient(k))} for k in ser.orders]
    else:
        if not scalar_in:
            raise ValueError(f"--op {args.op} takes a vector field; pass --field")
        chans = asy.linear_channels(g, op, point, K=K, **kw)
        orders = sorted({k for c in chans.values() for k in c.orders})
        coeffs = []
        for k in orders:
            row = {}
            for name, ser in chans.items():
                if k in ser.orders:
                    v = _squeeze(ser.coefficient(k))
                    if np.any(np.abs(v) > 1e-14):
                        row[name] = v
            if row:
                coeffs.append({"order": k, "channels": row})
        out["min_order"] = coeffs[0]["order"] if coeffs else 0
        out["coeffs"] = coeffs
        fld = asy.layer_field(_DEFAULT_LAYER[geom][0], geom)
    r = asy.convergence_slope(g, op, fld, point, K=K, eps_list=eps, **kw)
    out["slope_test"] = {"eps": r.eps, "errors": r.errors, "slope": r.slope, "predicted": r.predicted,
                         "exact": r.exact, "passed": bool(r.exact or abs(r.slope - r.predicted) <= 0.2)}
    _emit(args, dumps_json(out))
    return 0


def _layer(path, geom):
    spec = _load_json(path)
    exprs = spec.get("exprs", spec.get("expr")) if isinstance(spec, dict) else None
    if exprs is None:
        raise ValueError(f"{path}: field 'exprs' is required")
    if isinstance(exprs, str):
        exprs = [exprs]
    if spec.get("kind", "vector" if len(exprs) == 3 else "scalar") == "scalar":
        exprs = exprs[0] if len(exprs) == 1 else exprs
    try:
        return asy.layer_field(exprs, geom)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from err


def _squeeze(v):
    v = np.asarray(v)
    return float(v.reshape(-1)[0]) if v.size == 1 else v.reshape(v.shape[0], -1)[0].tolist()


def cmd_verify(args):
    _require(args, "suite")
    g = _geometry(args)
    rep = run_suite(args.suite, g, seed=args.seed, n_points=args.n_points, n_fields=args.n_fields,
                    tau=args.tau, phi0=args.phi0, h1=args.h1, h2=args.h2, tolerance=args.tolerance,
                    fault=args.fault)
    rep["geometry"] = _geometry_label(args.geom)
    _emit(args, dumps_json(rep))
    return 0 if rep["passed"] else 2


def _geometry_label(path):
    text = Path(path).read_text() if not str(path).lstrip().startswith("{") else path
    return json.loads(text)


COMMANDS = {"project": cmd_project, "frames": cmd_frames, "op": cmd_op, "evolve": cmd_evolve,
            "tube-frames": cmd_tube_frames, "tube-op": cmd_tube_op, "expand": cmd_expand, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("sdcalc: a command is required (see sdcalc --help)")
        args = _resolve(args)
        return COMMANDS[args.command](args)
    except UsageError as err:
        sys.stderr.write(f"{err}\n")
        return 1
    except SystemExit as err:
        return int(err.code or 0)
    except (ValueError, OSError, ArithmeticError, RuntimeError) as err:
        sys.stderr.write(f"sdcalc: error: {err}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
