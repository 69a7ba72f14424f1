"""Vacuum-field reflection in spherical cavities, Casimir forces and driven plates."""

from .errors import (
    CavityForceError,
    ConfigError,
    ConvergenceError,
    CoefficientDomainError,
    DegeneracyError,
    DomainError,
)
from .force import ForceResult, ModeGeometry, Regularization, parallel_plate_force_1d, per_direction_force, total_force
from .hemisphere import CavityGeometry, CavityKind, classify_reflection, max_reflections, reentry_check
from .quadrature import QuadratureSpec
from .reflection import RayState, closed_form_nth_point, trace_iterative

__all__ = [
    "CavityForceError", "ConfigError", "ConvergenceError", "CoefficientDomainError", "DegeneracyError",
    "DomainError", "ForceResult", "ModeGeometry", "Regularization", "parallel_plate_force_1d",
    "per_direction_force", "total_force", "CavityGeometry", "CavityKind", "classify_reflection",
    "max_reflections", "reentry_check", "QuadratureSpec", "RayState", "closed_form_nth_point",
    "trace_iterative",
]
