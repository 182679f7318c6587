"""Scalar and vector fields on signed-distance or tube coordinates.

A field is either *intrinsic* (components given in the local frame as
functions of the curvilinear coordinates) or *ambient* (Cartesian components
as functions of ``x, y, z`` that are pulled back through the coordinate map).
Components are expressions or Python callables; both evaluate on floats,
arrays, jets and eps-series alike.
"""

import json
from pathlib import Path

from . import expr as ex

SURFACE_VARS = ("sigma", "s1", "s2", "tau")
TUBE_VARS = ("s", "theta", "sigma", "tau")
AMBIENT_VARS = ("x", "y", "z", "tau")
SURFACE_LAYER_VARS = ("xi", "s1", "s2", "tau")
TUBE_LAYER_VARS = ("s", "theta", "xi", "tau")


class FieldError(ValueError):
    pass


class Field:
    """Field with ``kind`` 'scalar' or 'vector'.

    ``variables`` names the arguments passed to callables, in order.  For
    expression components the same names are available in the expression.
    """

    def __init__(self, components, kind="scalar", variables=SURFACE_VARS, ambient=False, name=None):
        if kind not in ("scalar", "vector"):
            raise FieldError("kind must be 'scalar' or 'vector'")
        if not isinstance(components, (list, tuple)):
            components = [components]
        if kind == "scalar" and len(components) != 1:
            raise FieldError("a scalar field has exactly one component")
        if kind == "vector" and len(components) != 3:
            raise FieldError("a vector field has exactly three components")
        self.kind = kind
        self.ambient = bool(ambient)
        self.variables = tuple(AMBIENT_VARS if ambient else variables)
        self.components = []
        self.texts = []
        for c in components:
            if callable(c):
                self.components.append(c)
                self.texts.append(getattr(c, "__name__", "callable"))
            else:
                text = repr(float(c)) if isinstance(c, (int, float)) else str(c)
                self.components.append(ex.parse_expr(text, set(self.variables)))
                self.texts.append(text)
        self.name = name or ", ".join(self.texts)

    @property
    def is_vector(self):
        return self.kind == "vector"

    @property
    def time_dependent(self):
        for c in self.components:
            if callable(c):
                return True
            if "tau" in ex.free_variables(c):
                return True
        return False

    def evaluate(self, **env):
        args = [env.get(v, 0.0) for v in self.variables]
        named = dict(zip(self.variables, args))
        out = []
        for c in self.components:
            out.append(c(*args) if callable(c) else ex.evaluate(c, named))
        return out[0] if self.kind == "scalar" else out

    def __repr__(self):
        where = "ambient" if self.ambient else "intrinsic"
        return f"Field({self.kind}, {where}, [{self.name}])"


def scalar(expr, variables=SURFACE_VARS):
    return Field([expr], "scalar", variables)


def vector(exprs, variables=SURFACE_VARS):
    return Field(list(exprs), "vector", variables)


def ambient_scalar(expr):
    return Field([expr], "scalar", ambient=True)


def ambient_vector(exprs):
    return Field(list(exprs), "vector", ambient=True)


def load_field(spec, geometry="surface"):
    """Field from a JSON spec.

    ``{"kind": "scalar"|"vector", "exprs": [...], "pullback": bool}``; with
    ``pullback`` true the expressions are in ``x, y, z`` (and ``tau``),
    otherwise in the curvilinear coordinates of ``geometry``.
    """
    src = "<field>"
    if isinstance(spec, (str, Path)) and not str(spec).lstrip().startswith("{"):
        src = str(spec)
        spec = json.loads(Path(spec).read_text())
    elif isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict):
        raise FieldError(f"{src}: field spec must be a JSON object")
    kind = spec.get("kind", "scalar")
    exprs = spec.get("exprs", spec.get("expr"))
    if exprs is None:
        raise FieldError(f"{src}: field 'exprs' is required")
    if isinstance(exprs, str):
        exprs = [exprs]
    ambient = bool(spec.get("pullback", False))
    layer = bool(spec.get("layer", False))
    if geometry == "surface":
        variables = SURFACE_LAYER_VARS if layer else SURFACE_VARS
    else:
        variables = TUBE_LAYER_VARS if layer else TUBE_VARS
    try:
        return Field(exprs, kind, variables, ambient=ambient)
    except ex.ExprError as err:
        raise FieldError(f"{src}: field 'exprs': {err}") from err
