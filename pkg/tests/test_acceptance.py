"""The nine acceptance criteria, each at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line for its criterion.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from sdcalc import oracle, suites
from sdcalc import surface_evolution as se
from sdcalc.closest_point import signed_distance, to_cartesian
from sdcalc.curve_frames import frenet, jacobian_rows, orthogonality_residual
from sdcalc.geom_core import builtin_curve, builtin_surface
from sdcalc.surface_frames import codazzi_egregium_residuals, shape_operator

EIKONAL_SET = [("sphere", {}), ("cylinder", {}), ("torus", {}), ("ellipsoid", {})]
ORACLE_SET = [("sphere", {"R": 2.0}), ("cylinder", {}), ("torus", {}), ("ellipsoid", {})]


@pytest.fixture
def report(capsys):
    def emit(n, ok, elapsed, limit, detail):
        ok = ok and elapsed < limit
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail} ({elapsed:.1f} s, limit {limit} s)")
        return ok
    return emit


def test_criterion_1_eikonal_gauss_map(report):
    t0 = time.perf_counter()
    worst = {"eikonal": 0.0, "angle": 0.0, "roundtrip": 0.0}
    for name, kw in EIKONAL_SET:
        ch = builtin_surface(name, **kw)
        s, sigma = oracle.sample_collar(ch, 1000, np.random.default_rng(1))
        x = to_cartesian(ch, s, sigma)
        co = signed_distance(ch, x)
        h = 1e-5
        g = np.stack([(signed_distance(ch, x + h * e).sigma - signed_distance(ch, x - h * e).sigma) / (2 * h)
                      for e in np.eye(3)], -1)
        gn = np.linalg.norm(g, axis=-1)
        angle = np.arctan2(np.linalg.norm(np.cross(g, co.n), axis=-1), np.sum(g * co.n, -1))
        back = to_cartesian(ch, co.s, co.sigma)
        worst["eikonal"] = max(worst["eikonal"], float(np.max(np.abs(gn - 1))))
        worst["angle"] = max(worst["angle"], float(np.max(angle)))
        worst["roundtrip"] = max(worst["roundtrip"], float(np.max(np.linalg.norm(back - x, axis=-1))),
                                 float(np.max(np.abs(co.sigma - sigma))))
    elapsed = time.perf_counter() - t0
    ok = worst["eikonal"] < 1e-7 and worst["angle"] < 1e-7 and worst["roundtrip"] < 1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert report(1, ok, elapsed, 10, detail)


def _grid(ch, n):
    axes = []
    for k, (lo, hi) in enumerate(ch.domain):
        if ch.periodic[k]:
            axes.append(lo + (hi - lo) * np.arange(n) / n)
        else:
            axes.append(lo + (hi - lo) * (np.arange(n) + 0.5) / n)
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)


def test_criterion_2_curvature(report):
    t0 = time.perf_counter()
    errs = []
    for R in (0.5, 1.0, 2.0):
        c = shape_operator(builtin_surface("sphere", R=R), _grid(builtin_surface("sphere"), 16))
        errs += [np.abs(c.k1 + 1 / R), np.abs(c.k2 + 1 / R)]
        c = shape_operator(builtin_surface("cylinder", R=R), _grid(builtin_surface("cylinder"), 16))
        errs += [np.abs(c.k1), np.abs(c.k2 + 1 / R)]
    kerr = max(float(np.max(e)) for e in errs)
    resid = 0.0
    for name in ("torus", "ellipsoid"):
        ch = builtin_surface(name)
        s = _grid(ch, 32)
        s = s[~shape_operator(ch, s).umbilic]
        resid = max(resid, max(float(np.max(np.abs(r))) for r in codazzi_egregium_residuals(ch, s)))
    elapsed = time.perf_counter() - t0
    ok = kerr < 1e-9 and resid < 1e-6
    assert report(2, ok, elapsed, 10, f"curvature error {kerr:.1e}, Codazzi/Egregium {resid:.1e}")


def _oracle_criterion(n, suite, geoms, report, limit):
    t0 = time.perf_counter()
    worst, undetected, failing = 0.0, [], []
    for name, ch in geoms:
        r = suites.run_suite(suite, ch, seed=42)
        for op, e in r["per_op"].items():
            worst = max(worst, e["max_rel"] if e["max_rel"] is not None else np.inf)
            if not e["passed"] or e["failures"] or e["n_points"] < 600:
                failing.append(f"{name}:{op}")
            if not e["fault_detected"]:
                undetected.append(f"{name}:{op}")
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and not undetected and not failing
    detail = f"max rel {worst:.1e}, fault control fails on every op: {not undetected}"
    if failing:
        detail += f", failing {failing}"
    if undetected:
        detail += f", undetected {undetected}"
    return report(n, ok, elapsed, limit, detail)


def test_criterion_3_surface_oracle(report):
    geoms = [(name, builtin_surface(name, **kw)) for name, kw in ORACLE_SET]
    assert _oracle_criterion(3, "surface", geoms, report, 60)


def test_criterion_4_identities(report):
    t0 = time.perf_counter()
    worst = {}
    for name, kw in ORACLE_SET:
        ch = builtin_surface(name, **kw)
        rng = np.random.default_rng(42)  # same draws as the surface suite
        pts = oracle.sample_collar(ch, suites.DEFAULTS["surface"], rng)
        scalars, vectors = suites.draw_fields(ch, rng, 3)
        for k, v in suites.identity_residuals(ch, scalars, vectors, pts).items():
            worst[k] = max(worst.get(k, 0.0), v)
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-6 for v in worst.values())
    assert report(4, ok, elapsed, 30, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_5_evolution(report):
    t0 = time.perf_counter()
    tau = 0.4
    sphere = builtin_surface("sphere", R="1+0.3*tau")
    torus = builtin_surface("torus", R="2+0.2*sin(tau)", r="0.5+0.1*tau")
    paper = builtin_curve("paper", c="tau")
    reports = {name: suites.run_suite("evolution", g, seed=42, tau=tau)
               for name, g in (("sphere", sphere), ("torus", torus), ("paper", paper))}
    s, sigma = oracle.sample_collar(sphere, 100, np.random.default_rng(42), tau=tau)
    x = to_cartesian(sphere, s, sigma, tau=tau)
    exact = float(np.max(np.abs(se.dt_coordinates(sphere, se.SurfaceMotion(sphere), x, tau).dsigma + 0.3)))
    torus_ds = reports["torus"]["per_op"]["dsigma_reprojection"]["max_abs"]
    closure = max(r["per_op"]["closure"]["max_abs"] for r in reports.values())
    frenet_c = reports["paper"]["per_op"]["frenet_constraints"]["max_abs"]
    torsion = reports["paper"]["per_op"]["torsion_evolution"]["max_rel"]
    elapsed = time.perf_counter() - t0
    ok = (exact < 1e-12 and torus_ds < 1e-5 and closure < 1e-6 and frenet_c < 1e-6 and torsion < 1e-3
          and all(r["passed"] for r in reports.values()))
    detail = (f"inflating sphere {exact:.1e}, torus re-projection {torus_ds:.1e}, closure {closure:.1e}, "
              f"Frenet {frenet_c:.1e}, torsion rel {torsion:.1e}")
    assert report(5, ok, elapsed, 30, detail)


def test_criterion_6_tube_orthogonality(report):
    t0 = time.perf_counter()
    rotated, control = 0.0, np.inf
    for name in ("helix", "paper"):
        c = builtin_curve(name)
        rng = np.random.default_rng(6)
        lo, hi = c.domain[0]
        kmax = float(np.max(frenet(c, np.linspace(lo, hi, 513)).kappa))
        smax = min(0.5, 0.9 / kmax)
        s = rng.uniform(lo, hi, 500)
        th = rng.uniform(0, 2 * np.pi, 500)
        sg = rng.uniform(0, smax, 500)
        for method in ("jet", "fd"):
            rotated = max(rotated, orthogonality_residual(jacobian_rows(c, s, th, sg, method=method)))
        control = min(control, orthogonality_residual(jacobian_rows(c, s, th, np.full(500, smax), rotate=False)))
    elapsed = time.perf_counter() - t0
    ok = rotated < 1e-8 and control > 1e-3
    assert report(6, ok, elapsed, 10, f"with Bishop rotation {rotated:.1e}, without {control:.1e}")


def test_criterion_7_tube_oracle(report):
    geoms = [(name, builtin_curve(name)) for name in ("helix", "paper")]
    assert _oracle_criterion(7, "tube", geoms, report, 60)


def test_criterion_8_asymptotics(report):
    t0 = time.perf_counter()
    geoms = [builtin_surface("sphere", R=2.0), builtin_surface("torus"), builtin_surface("cylinder"),
             builtin_curve("helix"), builtin_curve("paper"), builtin_curve("circle", R=2.0)]
    slope_dev, coef, bad = 0.0, 0.0, []
    for g in geoms:
        r = suites.run_suite("asymptotics", g, seed=42)
        for op, e in r["per_op"].items():
            if op == "laplacian_leading":
                coef = max(coef, e["max_abs"])
            else:
                slope_dev = max(slope_dev, e["max_abs"] if e["max_abs"] is not None else np.inf)
            if not e["passed"] or e["failures"]:
                bad.append(f"{g.name}:{op}")
    elapsed = time.perf_counter() - t0
    ok = slope_dev <= 0.2 and coef < 1e-10 and not bad
    detail = f"max slope deviation {slope_dev:.2f}, coefficient cross-check {coef:.1e}"
    if bad:
        detail += f", failing {bad}"
    assert report(8, ok, elapsed, 30, detail)


def _sdcalc(*args, **kw):
    return subprocess.run(["sdcalc", *args], capture_output=True, **kw)


def test_criterion_9_cli_determinism(report, tmp_path):
    geom = tmp_path / "sphere.json"
    geom.write_text(json.dumps({"kind": "surface", "builtin": {"name": "sphere", "R": 2.0}}))
    t0 = time.perf_counter()
    argv = ["verify", "--suite", "surface", "--geom", str(geom), "--seed", "42", "--n-points", "40"]
    a = _sdcalc(*argv)
    b = _sdcalc(*argv, env=dict(os.environ, SDCALC_THREADS="3"))
    elapsed = time.perf_counter() - t0
    identical = a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    failing = _sdcalc(*argv, "--tolerance", "1e-14").returncode
    usage = _sdcalc("verify", "--suite", "bogus").returncode
    missing = _sdcalc("verify", "--geom", str(tmp_path / "missing.json")).returncode
    codes = (a.returncode, failing, usage, missing)
    ok = identical and codes == (0, 2, 1, 1)
    assert report(9, ok, elapsed, 5, f"byte-identical {identical}, exit codes {codes} (want (0, 2, 1, 1))")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
