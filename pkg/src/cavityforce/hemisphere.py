"""Hemispherical cavities: reflection count, escape class and plate bounces.

A hemisphere of inner radius ``r`` is the half of the sphere on the
positive side of ``axis``.  Its opening is the disk of radius ``r`` through
the centre, perpendicular to the axis.  Rays handed to the functions here
are expressed in the hemisphere's local frame (centre at the origin); they
start on the opening disk and point into the dome.

In the plane of incidence the reflection points sit at central angles
``gamma, gamma + phi, gamma + 2 phi, ...`` measured from the entry
direction R_0, where ``gamma`` is the angle between R_0 and R_1 and
``phi = pi - 2 theta``.  The dome ends at angle ``pi``, which gives the
reflection count below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NoIntersectionError
from .reflection import (
    GRAZING_MARGIN,
    RayState,
    closed_form_nth_point,
    first_intersection,
    incidence_angle,
    reflect,
)
from .vectors import (
    FrameTranslation,
    SphericalPoint,
    as_vector,
    direction_cosines,
    local_to_global,
    norm,
    quadrant_angles,
    unit,
)

BOUNDARY_TOLERANCE = 1e-9
OPENING_TOLERANCE = 1e-9
SCALE_TOLERANCE = 1e-9


class CavityKind(str, enum.Enum):
    SPHERE = "sphere"
    HEMISPHERE = "hemisphere"
    PLATE_HEMISPHERE = "plate-hemisphere"


class ReflectionClass(str, enum.Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


class Reentry(str, enum.Enum):
    REENTERS = "reenters"
    ESCAPES = "escapes"


@dataclass(frozen=True)
class CavityGeometry:
    """Shape and pose of a spherical, hemispherical or plate-hemisphere cavity.

    ``plate_orientation`` holds the polar and azimuthal angle of the plate
    normal; the plate fields must be given exactly when ``kind`` is
    ``PLATE_HEMISPHERE``.
    """

    inner_radius: float
    shell_thickness: float = 0.0
    center: FrameTranslation = field(default_factory=FrameTranslation)
    kind: CavityKind = CavityKind.SPHERE
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    plate_orientation: Optional[tuple[float, float]] = None
    plate_center: Optional[FrameTranslation] = None

    def __post_init__(self):
        if not (math.isfinite(self.inner_radius) and self.inner_radius > 0.0):
            raise DomainError(f"inner_radius must be positive, got {self.inner_radius}")
        if not (math.isfinite(self.shell_thickness) and self.shell_thickness >= 0.0):
            raise DomainError(f"shell_thickness must be nonnegative, got {self.shell_thickness}")
        object.__setattr__(self, "kind", CavityKind(self.kind))
        if not isinstance(self.center, FrameTranslation):
            object.__setattr__(self, "center", FrameTranslation(self.center))
        object.__setattr__(self, "axis", unit(self.axis, "axis"))
        has_plate = self.plate_orientation is not None or self.plate_center is not None
        if self.kind is CavityKind.PLATE_HEMISPHERE:
            if self.plate_orientation is None or self.plate_center is None:
                raise DomainError("plate-hemisphere geometry needs plate_orientation and plate_center")
            if not isinstance(self.plate_center, FrameTranslation):
                object.__setattr__(self, "plate_center", FrameTranslation(self.plate_center))
            theta_p, phi_p = (float(a) for a in self.plate_orientation)
            object.__setattr__(self, "plate_orientation", (theta_p, phi_p))
        elif has_plate:
            raise DomainError(f"plate fields are only allowed for plate-hemisphere geometry, not {self.kind.value}")

    @classmethod
    def plate_facing_opening(cls, radius: float, gap: float, center=(0.0, 0.0, 0.0), axis=(0.0, 1.0, 0.0),
                             shell_thickness: float = 0.0) -> "CavityGeometry":
        """Plate parallel to the opening, ``gap`` below the hemisphere centre."""
        axis = unit(axis, "axis")
        center = as_vector(center, "center")
        theta_p, phi_p = quadrant_angles(axis)
        return cls(
            inner_radius=radius,
            shell_thickness=shell_thickness,
            center=FrameTranslation(center),
            kind=CavityKind.PLATE_HEMISPHERE,
            axis=axis,
            plate_orientation=(theta_p, phi_p),
            plate_center=FrameTranslation(center - gap * axis),
        )

    @property
    def plate_normal(self) -> np.ndarray:
        if self.plate_orientation is None:
            raise DomainError(f"{self.kind.value} geometry has no plate")
        return direction_cosines(*self.plate_orientation)

    @property
    def plate_center_local(self) -> np.ndarray:
        if self.plate_center is None:
            raise DomainError(f"{self.kind.value} geometry has no plate")
        return self.plate_center.offset - self.center.offset

    @property
    def gap(self) -> float:
        """Distance from the hemisphere centre to the plate plane."""
        return abs(float(self.plate_normal @ self.plate_center_local))

    def without_plate(self) -> "CavityGeometry":
        return CavityGeometry(self.inner_radius, self.shell_thickness, self.center, CavityKind.HEMISPHERE, self.axis)


@dataclass(frozen=True)
class ReflectionBudget:
    """Number of dome strikes and the ratio it was read from."""

    count: int
    z_value: float
    boundary: bool


@dataclass(frozen=True)
class EscapeClassification:
    reflection_class: ReflectionClass
    exit_crossing_norm: float
    max_reflections: int
    z_value: float = float("nan")
    boundary: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class PlateInteraction:
    """Where an exiting ray meets the plate and whether it comes back.

    ``plate_coordinates`` are the offsets of the hit point from the plate
    centre along the plate's polar and azimuthal unit vectors.
    """

    plate_point: np.ndarray
    reentry: Reentry
    scale_components: np.ndarray
    plate_coordinates: tuple[float, float]
    parameter: float
    reflected_direction: np.ndarray
    global_point: SphericalPoint
    boundary: bool = False


@dataclass
class HemisphereTrace:
    """Brute-force bounce sequence inside a hemisphere up to its exit."""

    points: np.ndarray
    incidence_angles: np.ndarray
    parameter_values: np.ndarray
    exit_point: np.ndarray
    exit_direction: np.ndarray

    @property
    def count(self) -> int:
        return len(self.points)


def _require_hemisphere(geom: CavityGeometry) -> None:
    if geom.kind is CavityKind.SPHERE:
        raise DomainError("operation needs a hemisphere or plate-hemisphere geometry")


def check_entry(ray: RayState, geom: CavityGeometry) -> None:
    """Raise :class:`DomainError` unless ``ray`` enters through the opening."""
    _require_hemisphere(geom)
    r = geom.inner_radius
    height = float(geom.axis @ ray.origin)
    if abs(height) > OPENING_TOLERANCE * r:
        raise DomainError(f"ray origin is {height:.3e} off the opening plane")
    if norm(ray.origin) >= r:
        raise DomainError("ray origin must lie strictly inside the opening disk")
    if float(geom.axis @ ray.direction) <= 0.0:
        raise DomainError("ray direction must point into the dome")


def entry_angles(ray: RayState, radius: float) -> tuple[float, float, float]:
    """Return ``(gamma, theta_inc, xi_1)`` for an entering ray.

    ``gamma`` is the central angle between R_0 and R_1.  By the law of
    cosines it equals arccos((r^2 + |R0|^2 - xi^2) / (2 r |R0|)); it is
    evaluated through the equivalent two-argument arctangent, which keeps
    full precision when gamma is near 0 or pi.
    """
    xi, r1 = first_intersection(ray, radius)
    r0 = ray.origin
    gamma = math.atan2(norm(np.cross(r0, r1)), float(r0 @ r1))
    theta = incidence_angle(ray.direction, r1)
    return gamma, theta, xi


def reflection_budget(ray: RayState, geom: CavityGeometry) -> ReflectionBudget:
    """Reflection count with the ratio ``Z = (pi - gamma) / (pi - 2 theta)``.

    Strike ``j`` sits at central angle ``gamma + (j - 1)(pi - 2 theta)`` and
    is on the dome while that angle is below ``pi``, so the count is
    ``floor(Z) + 1``.  When Z is within 1e-9 of an integer the last strike
    lands on the rim and ``boundary`` is set.
    """
    check_entry(ray, geom)
    r = geom.inner_radius
    if norm(ray.origin) <= 1e-15 * r:
        return ReflectionBudget(1, 0.0, False)
    gamma, theta, _ = entry_angles(ray, r)
    if theta >= 0.5 * math.pi - GRAZING_MARGIN:
        raise DomainError(f"incidence angle {theta!r} is within {GRAZING_MARGIN} of grazing")
    z = (math.pi - gamma) / (math.pi - 2.0 * theta)
    boundary = abs(z - round(z)) < BOUNDARY_TOLERANCE
    return ReflectionBudget(int(math.floor(z)) + 1, z, boundary)


def max_reflections(ray: RayState, geom: CavityGeometry) -> int:
    """Number of dome strikes before the ray leaves through the opening."""
    return reflection_budget(ray, geom).count


def exit_crossing_norm(ray: RayState, geom: CavityGeometry) -> float:
    """Distance from the centre at which the first reflected chord crosses the opening line.

    The first reflected chord lies at distance ``r sin(theta)`` from the
    centre.  It meets the diameter opposite R_0 at ``r sin(theta) /
    sin(gamma - theta)``, or never when ``gamma <= theta``.
    """
    check_entry(ray, geom)
    r = geom.inner_radius
    if norm(ray.origin) <= 1e-15 * r:
        return 0.0
    gamma, theta, _ = entry_angles(ray, r)
    s = math.sin(gamma - theta)
    if s <= 0.0:
        return math.inf
    return r * math.sin(theta) / s


def classify_reflection(ray: RayState, geom: CavityGeometry) -> EscapeClassification:
    """Single or multiple internal reflection, decided by the crossing norm."""
    budget = reflection_budget(ray, geom)
    r = geom.inner_radius
    if norm(ray.origin) <= 1e-15 * r:
        return EscapeClassification(ReflectionClass.SINGLE, 0.0, 1, 0.0, False, degenerate=True)
    crossing = exit_crossing_norm(ray, geom)
    cls = ReflectionClass.SINGLE if crossing < r else ReflectionClass.MULTIPLE
    return EscapeClassification(cls, crossing, budget.count, budget.z_value, budget.boundary)


def exit_ray(ray: RayState, geom: CavityGeometry) -> RayState:
    """Ray leaving the last dome strike, built from closed-form points."""
    n = max_reflections(ray, geom)
    r = geom.inner_radius
    last = closed_form_nth_point(ray, r, n)
    virtual = closed_form_nth_point(ray, r, n + 1)
    return RayState(last, virtual - last)


def opening_crossing(exit: RayState, geom: CavityGeometry) -> np.ndarray:
    """Point where an exiting ray passes through the opening plane."""
    ka = float(geom.axis @ exit.direction)
    if ka >= 0.0:
        raise NoIntersectionError("ray does not move toward the opening plane")
    t = -float(geom.axis @ exit.origin) / ka
    return exit.point_at(t)


def trace_hemisphere(ray: RayState, geom: CavityGeometry, limit: int = 100_000) -> HemisphereTrace:
    """Reflect step by step until a chord crosses the opening plane."""
    check_entry(ray, geom)
    r = geom.inner_radius
    axis = geom.axis
    xi, point = first_intersection(ray, r)
    k = ray.direction.copy()
    points, angles, params = [], [], []
    for _ in range(limit):
        points.append(point)
        angles.append(incidence_angle(k, point))
        params.append(xi)
        k = reflect(k, -point / norm(point))
        k /= norm(k)
        xi = -2.0 * float(k @ point)
        nxt = point + xi * k
        if float(axis @ nxt) < 0.0:
            exit_ray_ = RayState(point, k)
            return HemisphereTrace(np.array(points), np.array(angles), np.array(params),
                                   opening_crossing(exit_ray_, geom), k)
        point = nxt
    raise DomainError(f"ray did not leave the hemisphere within {limit} reflections")


def plate_frame(theta_p: float, phi_p: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plate normal and the two in-plane unit vectors (polar, azimuthal)."""
    ct, st = math.cos(theta_p), math.sin(theta_p)
    cp, sp = math.cos(phi_p), math.sin(phi_p)
    normal = np.array([st * cp, st * sp, ct])
    e_theta = np.array([ct * cp, ct * sp, -st])
    e_phi = np.array([-sp, cp, 0.0])
    return normal, e_theta, e_phi


def plate_element_position(geom: CavityGeometry, nu_theta: float, nu_phi: float) -> np.ndarray:
    """Local position of the plate element at in-plane offsets ``(nu_theta, nu_phi)``."""
    _, e_theta, e_phi = plate_frame(*geom.plate_orientation)
    return geom.plate_center_local + nu_theta * e_theta + nu_phi * e_phi


def plate_element_velocity(theta_p: float, phi_p: float, nu_theta: float, nu_phi: float,
                           theta_rate: float = 0.0, phi_rate: float = 0.0,
                           nu_theta_rate: float = 0.0, nu_phi_rate: float = 0.0,
                           translation_rate=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Velocity of a plate element for a plate that translates and tilts.

    The element sits at ``R_T + nu_theta e_theta + nu_phi e_phi``.  The
    rates are time derivatives of the plate angles, the in-plane offsets
    (lattice vibration) and the plate centre.  A static plate gives zero.
    """
    normal, e_theta, e_phi = plate_frame(theta_p, phi_p)
    ct = math.cos(theta_p)
    st = math.sin(theta_p)
    d_e_theta = -normal * theta_rate + ct * e_phi * phi_rate
    d_e_phi = -(st * normal + ct * e_theta) * phi_rate
    return (as_vector(translation_rate, "translation_rate")
            + nu_theta_rate * e_theta + nu_phi_rate * e_phi
            + nu_theta * d_e_theta + nu_phi * d_e_phi)


def _nearest_opening_point(origin: np.ndarray, direction: np.ndarray, geom: CavityGeometry):
    """Opening-disk point closest to where a line meets the opening plane.

    Returns ``(point, crossing_radius)``; the crossing radius is infinite
    when the line is parallel to the opening plane.
    """
    axis = geom.axis
    r = geom.inner_radius
    ka = float(axis @ direction)
    if abs(ka) <= 1e-15:
        return None, math.inf
    s = -float(axis @ origin) / ka
    hit = origin + s * direction
    rho = norm(hit)
    if rho <= r:
        return hit, rho
    return hit * (r / rho), rho


def _scale_components(plate_point: np.ndarray, reflected: np.ndarray, geom: CavityGeometry) -> np.ndarray:
    """Per-axis line parameters from the plate point to the nearest opening point.

    Component ``i`` is ``(Q - R_p)_i / k_i``.  A component whose direction
    entry vanishes takes the common value of the others when the offset
    vanishes too, and is infinite otherwise.
    """
    target, _ = _nearest_opening_point(plate_point, reflected, geom)
    if target is None:
        return np.full(3, math.inf)
    delta = target - plate_point
    scale = norm(delta) + geom.inner_radius
    comps = np.full(3, math.nan)
    free = []
    for i in range(3):
        if abs(reflected[i]) > 1e-12:
            comps[i] = delta[i] / reflected[i]
        elif abs(delta[i]) <= SCALE_TOLERANCE * scale:
            free.append(i)
        else:
            comps[i] = math.inf
    defined = comps[~np.isnan(comps)]
    fill = defined[0] if defined.size else 0.0
    for i in free:
        comps[i] = fill
    return comps


def _components_agree(comps: np.ndarray) -> bool:
    if not np.all(np.isfinite(comps)):
        return False
    spread = float(np.max(comps) - np.min(comps))
    return spread <= SCALE_TOLERANCE * max(float(np.max(np.abs(comps))), 1e-300) and float(np.min(comps)) > 0.0


def plate_reflection_point(exit: RayState, geom: CavityGeometry) -> PlateInteraction:
    """Point where the ray leaving the hemisphere strikes the plate.

    The hit is written in the plate's own coordinates, i.e. as offsets
    along the plate's polar and azimuthal unit vectors from the plate
    centre, and rebuilt from them.  The reflected direction and the
    re-entry decision come with it.
    """
    if geom.kind is not CavityKind.PLATE_HEMISPHERE:
        raise DomainError("plate_reflection_point needs a plate-hemisphere geometry")
    normal, e_theta, e_phi = plate_frame(*geom.plate_orientation)
    center = geom.plate_center_local
    kn = float(normal @ exit.direction)
    if abs(kn) <= 1e-12:
        raise NoIntersectionError("exit ray is parallel to the plate")
    t = float(normal @ (center - exit.origin)) / kn
    if t <= 0.0:
        raise NoIntersectionError("plate lies behind the exit ray")
    raw = exit.point_at(t)
    nu_theta = float(e_theta @ (raw - center))
    nu_phi = float(e_phi @ (raw - center))
    point = center + nu_theta * e_theta + nu_phi * e_phi
    reflected = reflect(exit.direction, normal)
    comps = _scale_components(point, reflected, geom)
    _, rho = _nearest_opening_point(point, reflected, geom)
    boundary = math.isfinite(rho) and abs(rho - geom.inner_radius) < BOUNDARY_TOLERANCE * geom.inner_radius
    reentry = Reentry.REENTERS if _components_agree(comps) else Reentry.ESCAPES
    try:
        global_point = local_to_global(SphericalPoint.from_cartesian(point), geom.center)
    except DomainError:
        global_point = SphericalPoint(0.0, 0.0, 0.0)
    return PlateInteraction(point, reentry, comps, (nu_theta, nu_phi), t, reflected, global_point, boundary)


def reentry_check(plate_hit: PlateInteraction, exit: RayState, geom: CavityGeometry) -> Reentry:
    """Re-entry when the three scale components agree and are positive.

    Agreement means a single parameter along the plate-reflected line
    reaches the opening disk, i.e. the line pierces the opening.
    """
    reflected = reflect(exit.direction, geom.plate_normal)
    comps = _scale_components(plate_hit.plate_point, reflected, geom)
    return Reentry.REENTERS if _components_agree(comps) else Reentry.ESCAPES
