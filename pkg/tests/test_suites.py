import json
import math

import numpy as np
import pytest

from sdcalc import suites
from sdcalc.fields import FieldError, load_field, scalar, vector
from sdcalc.geom_core import builtin_curve, builtin_surface


def test_report_structure():
    r = suites.run_suite("surface", builtin_surface("torus"), seed=1, n_points=12, n_fields=1)
    assert r["suite"] == "surface" and r["geometry"] == "torus" and r["seed"] == 1
    for op, e in r["per_op"].items():
        assert set(e) >= {"max_abs", "max_rel", "n_points", "failures", "tolerance", "passed", "fault_detected"}
        assert e["n_points"] == 12
    json.dumps(r, allow_nan=False)


def test_same_seed_same_report():
    g = builtin_curve("helix")
    a = suites.run_suite("tube", g, seed=3, n_points=10, n_fields=1)
    b = suites.run_suite("tube", g, seed=3, n_points=10, n_fields=1)
    assert a == b
    c = suites.run_suite("tube", g, seed=4, n_points=10, n_fields=1)
    assert c["per_op"]["lap"]["max_abs"] != a["per_op"]["lap"]["max_abs"]


def test_tolerance_override_fails():
    r = suites.run_suite("surface", builtin_surface("sphere"), n_points=8, n_fields=1, tolerance=1e-15)
    assert not r["passed"]


def test_asymptotics_suite_on_circle():
    r = suites.run_suite("asymptotics", builtin_curve("circle", R=2.0), n_points=2)
    assert r["passed"]
    assert r["per_op"]["laplacian_leading"]["max_abs"] < 1e-10


@pytest.mark.parametrize("suite, geom", [
    ("surface", builtin_curve("helix")),
    ("tube", builtin_surface("sphere")),
    ("nonsense", builtin_surface("sphere")),
])
def test_suite_errors(suite, geom):
    with pytest.raises(suites.SuiteError):
        suites.run_suite(suite, geom, n_points=4)


def test_suite_rejects_empty_sample():
    with pytest.raises(suites.SuiteError):
        suites.run_suite("surface", builtin_surface("sphere"), n_points=0)


def test_load_field_variants(tmp_path):
    f = load_field({"kind": "scalar", "exprs": ["sigma*s1"]})
    assert f.evaluate(sigma=2.0, s1=3.0) == 6.0
    u = load_field('{"kind": "vector", "exprs": ["x", "y", "0"], "pullback": true}')
    assert u.ambient and u.is_vector
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"kind": "scalar", "exprs": "cos(theta)*s"}))
    t = load_field(str(p), "tube")
    assert t.evaluate(s=2.0, theta=math.pi) == pytest.approx(-2.0)
    with pytest.raises(FieldError):
        load_field({"kind": "vector", "exprs": ["1", "2"]})
    with pytest.raises(FieldError):
        load_field({"kind": "scalar", "exprs": ["theta"]}, "surface")
    with pytest.raises(FieldError):
        load_field({"kind": "scalar"})


def test_field_helpers():
    assert scalar("s1 + s2").evaluate(s1=1.0, s2=2.0) == 3.0
    v = vector(["1", "sigma", "s2"]).evaluate(sigma=np.array([0.5]), s2=np.array([2.0]))
    assert v[1][0] == 0.5 and v[2][0] == 2.0
    assert vector(["tau", "0", "0"]).time_dependent
