"""Orthogonal signed-distance coordinates around surfaces and curves."""

from .asymptotics import convergence_slope, expand_surface, expand_tube, layer_field
from .closest_point import signed_distance, to_cartesian
from .curve_frames import bishop_angle, frenet, tube_frame, tube_from_cartesian, tube_to_cartesian
from .expr import parse_expr
from .fields import Field, ambient_scalar, ambient_vector, load_field, scalar, vector
from .geom_core import builtin_curve, builtin_surface, load_geometry
from .oracle import compare, pullback
from .suites import run_suite
from .surface_frames import shape_operator

__version__ = "0.1.0"

__all__ = [
    "Field", "ambient_scalar", "ambient_vector", "bishop_angle", "builtin_curve", "builtin_surface",
    "compare", "convergence_slope", "expand_surface", "expand_tube", "frenet", "layer_field",
    "load_field", "load_geometry", "parse_expr", "pullback", "run_suite", "scalar", "shape_operator",
    "signed_distance", "to_cartesian", "tube_frame", "tube_from_cartesian", "tube_to_cartesian", "vector",
]
