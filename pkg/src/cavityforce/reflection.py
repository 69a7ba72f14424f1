"""Specular reflection of a ray inside a spherical cavity.

The cavity is a sphere of radius ``r`` centred at the local origin.  A ray
that starts inside bounces along chords of equal length ``2 r cos(theta)``,
where ``theta`` is the incidence angle measured from the surface normal.
All reflection points stay in the plane spanned by the initial position
and direction, which passes through the centre.  Successive points advance
by a central angle of ``pi - 2 theta``.

Two constructions are provided: :func:`closed_form_nth_point` jumps straight
to the N-th point by solving a 3x3 linear system with Cramer's rule, and
:func:`trace_iterative` applies the reflection law step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegeneratePlaneError, DomainError, GrazingIncidenceError
from .vectors import as_vector, norm, rotate

GRAZING_MARGIN = 1e-9
# Relative size of |R1 x k| below which the ray is treated as radial.
RADIAL_TOLERANCE = 1e-12
# Relative size of det(M0) / r^2 below which Cramer's rule is ill-conditioned.
CRAMER_CONDITION = 1e-8


@dataclass(frozen=True)
class RayState:
    """A ray with origin and unit direction.

    The direction is normalized on construction.  ``incidence_plane_normal``
    is optional and is filled in by :meth:`with_plane`.
    """

    origin: np.ndarray
    direction: np.ndarray
    incidence_plane_normal: Optional[np.ndarray] = None

    def __post_init__(self):
        origin = as_vector(self.origin, "RayState.origin")
        direction = as_vector(self.direction, "RayState.direction")
        length = norm(direction)
        if length == 0.0:
            raise DomainError("RayState.direction must be nonzero")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction / length)
        if self.incidence_plane_normal is not None:
            n = as_vector(self.incidence_plane_normal, "RayState.incidence_plane_normal")
            object.__setattr__(self, "incidence_plane_normal", n / norm(n))

    def with_plane(self) -> "RayState":
        return RayState(self.origin, self.direction, incidence_plane_normal(self))

    def point_at(self, parameter: float) -> np.ndarray:
        return self.origin + parameter * self.direction


@dataclass
class ReflectionTrace:
    """Successive reflection points of one ray in a sphere.

    Attributes
    ----------
    points : ndarray, shape (M, 3)
        Reflection points R_1 ... R_M.
    incidence_angles : ndarray, shape (M,)
        Incidence angle recorded at each point.
    parameter_values : ndarray, shape (M,)
        Ray parameter from the previous point (or the origin) to each point.
    directions : ndarray, shape (M + 1, 3)
        Unit direction arriving at each point, plus the direction leaving
        the last one.
    chord_length : float
        Distance from R_1 to the next strike.
    complete : bool
        False when the trace was cut off at ``max_reflections``.
    cycle : bool
        True for a radial ray bouncing between two antipodes.
    """

    radius: float
    points: np.ndarray
    incidence_angles: np.ndarray
    parameter_values: np.ndarray
    directions: np.ndarray
    chord_length: float
    complete: bool = False
    cycle: bool = False
    plane_normal: Optional[np.ndarray] = field(default=None)

    @property
    def incidence_angle(self) -> float:
        return float(self.incidence_angles[0])

    @property
    def chord_lengths(self) -> np.ndarray:
        if len(self.points) < 2:
            return np.empty(0)
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def __len__(self) -> int:
        return len(self.points)


def first_intersection(ray: RayState, radius: float) -> tuple[float, np.ndarray]:
    """Forward intersection of ``ray`` with the sphere ``|x| = radius``.

    Returns the ray parameter and the hit point.  The origin must lie
    strictly inside the sphere.
    """
    if not radius > 0.0:
        raise DomainError(f"radius must be positive, got {radius}")
    r0 = ray.origin
    k = ray.direction
    if norm(r0) >= radius:
        raise DomainError(f"ray origin {r0.tolist()} is not strictly inside the sphere of radius {radius}")
    b = float(k @ r0)
    disc = b * b + (radius - norm(r0)) * (radius + norm(r0))
    assert disc > 0.0, "negative discriminant for an interior origin"
    parameter = -b + math.sqrt(disc)
    return parameter, r0 + parameter * k


def reflect(incident, surface_normal, coeff_parallel: float = 1.0, coeff_perp: float = 1.0) -> np.ndarray:
    """Reflected wave vector ``a_perp (n x k) x n - a_par (n . k) n``.

    With both coefficients equal to one this is the mirror image
    ``k - 2 (n . k) n`` and preserves the norm.
    """
    k = as_vector(incident, "incident")
    n = as_vector(surface_normal, "surface_normal")
    nk = float(n @ k)
    if coeff_parallel == 1.0 and coeff_perp == 1.0:
        return k - 2.0 * nk * n
    tangential = np.cross(np.cross(n, k), n)
    return coeff_perp * tangential - coeff_parallel * nk * n


def incidence_angle(incident, surface_point) -> float:
    """Angle between an incoming ray and the normal at ``surface_point``.

    Lies in [0, pi/2]; 0 for a radial strike and pi/2 for grazing
    incidence.  Computed with a two-argument arctangent so that it stays
    accurate near both ends.
    """
    k = as_vector(incident, "incident")
    p = as_vector(surface_point, "surface_point")
    if norm(k) == 0.0:
        raise DomainError("incident vector must be nonzero")
    if norm(p) == 0.0:
        raise DomainError("surface point must be away from the centre")
    return math.atan2(norm(np.cross(k, p)), abs(float(k @ p)))


def incidence_plane_normal(ray: RayState) -> np.ndarray:
    """Unit normal ``-(k x R0) / |k x R0|`` of the plane of incidence."""
    r0 = ray.origin
    scale = norm(r0)
    n = np.cross(r0, ray.direction)
    size = norm(n)
    if scale == 0.0 or size <= RADIAL_TOLERANCE * scale:
        raise DegeneratePlaneError("ray passes through the centre; the plane of incidence is undefined")
    return n / size


def central_step(theta_inc: float) -> float:
    """Central angle between consecutive reflection points."""
    return math.pi - 2.0 * theta_inc


def _check_grazing(theta: float) -> None:
    if theta >= 0.5 * math.pi - GRAZING_MARGIN:
        raise GrazingIncidenceError(f"incidence angle {theta!r} is within {GRAZING_MARGIN} of grazing")


def _is_radial(r1: np.ndarray, k: np.ndarray, radius: float) -> bool:
    return norm(np.cross(k, r1)) <= RADIAL_TOLERANCE * radius


def det3(m) -> float:
    """Determinant of a 3x3 matrix by cofactor expansion along the first row."""
    return float(
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def cramer_matrix(r1) -> np.ndarray:
    """Coefficient matrix whose product with X is (R1.X)(1,1,1) - R1 x X."""
    x, y, z = r1
    return np.array([[x, y + z, z - y], [x - z, y, z + x], [x + y, y - x, z]])


def chord_angle_function(radius: float, theta_inc: float, n: int) -> tuple[float, float]:
    """Return ``Gamma = r^2 sin((N-1) phi)`` and ``r^2 cos((N-1) phi)``.

    ``phi = pi - 2 theta`` is the central step.  The pair gives the
    cross- and dot-product of R_1 with R_N.
    """
    angle = (n - 1) * central_step(theta_inc)
    r2 = radius * radius
    return r2 * math.sin(angle), r2 * math.cos(angle)


def closed_form_nth_point(ray: RayState, radius: float, n: int) -> np.ndarray:
    """N-th reflection point without stepping through the earlier ones.

    The point X = R_N satisfies ``R_1 . X = r^2 cos((N-1) phi)`` and
    ``R_1 x X = -r^2 sin((N-1) phi) u`` with ``u = k x R_0 / |k x R_0|``.
    Stacking these gives ``M0 X = zeta`` with ``det M0 = r^2 (x + y + z)``,
    solved by Cramer's rule.  When that determinant is tiny compared with
    ``r^3`` the same point is obtained by rotating R_1 about the plane normal.
    """
    if n < 1 or int(n) != n:
        raise DomainError(f"reflection index must be a positive integer, got {n}")
    n = int(n)
    _, r1 = first_intersection(ray, radius)
    if n == 1:
        return r1
    k = ray.direction
    theta = incidence_angle(k, r1)
    _check_grazing(theta)
    if _is_radial(r1, k, radius):
        return r1.copy() if n % 2 == 1 else -r1
    cross = np.cross(k, r1)
    u = cross / norm(cross)
    gamma, dot = chord_angle_function(radius, theta, n)
    zeta = dot * np.ones(3) + gamma * u
    m0 = cramer_matrix(r1)
    det0 = det3(m0)
    if abs(det0) < CRAMER_CONDITION * math.sqrt(3.0) * radius**3:
        return rotate(r1, -u, (n - 1) * central_step(theta))
    out = np.empty(3)
    for i in range(3):
        mi = m0.copy()
        mi[:, i] = zeta
        out[i] = det3(mi) / det0
    return out


def trace_iterative(ray: RayState, radius: float, max_reflections: int) -> ReflectionTrace:
    """Follow the ray through ``max_reflections`` specular bounces.

    Each bounce reflects the direction about the inward normal ``-R/|R|``
    and finds the next strike on the sphere.  A radial ray is recognized
    as a two-point cycle and stops early with ``complete=True``.
    """
    if max_reflections < 1:
        raise DomainError("max_reflections must be at least 1")
    xi, point = first_intersection(ray, radius)
    k = ray.direction.copy()
    points, angles, params, directions = [], [], [], [k.copy()]
    chord = None
    cycle = False
    while True:
        points.append(point)
        angles.append(incidence_angle(k, point))
        params.append(xi)
        normal = -point / norm(point)
        k = reflect(k, normal)
        k /= norm(k)
        directions.append(k.copy())
        b = float(k @ point)
        disc = b * b + (radius - norm(point)) * (radius + norm(point))
        xi = -b + math.sqrt(max(disc, 0.0))
        if chord is None:
            chord = xi
        if len(points) == 2 and _is_radial(points[0], directions[0], radius):
            cycle = True
            break
        if len(points) >= max_reflections:
            break
        point = point + xi * k
    try:
        plane = incidence_plane_normal(ray)
    except DegeneratePlaneError:
        plane = None
    return ReflectionTrace(
        radius=float(radius),
        points=np.array(points),
        incidence_angles=np.array(angles),
        parameter_values=np.array(params),
        directions=np.array(directions),
        chord_length=float(chord),
        complete=cycle,
        cycle=cycle,
        plane_normal=plane,
    )
