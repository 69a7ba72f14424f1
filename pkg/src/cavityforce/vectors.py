"""Three-vector helpers, spherical coordinates and frame translation.

Cartesian vectors are plain ``numpy`` arrays of shape ``(3,)``;
:func:`as_vector` validates and copies them.  Spherical points use the
physics convention: ``theta`` is the polar angle from +z and ``phi`` the
azimuth in the x-y plane measured from +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Return ``v`` as a finite float64 array of shape (3,)."""
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise DomainError(f"{name} must have exactly three components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite components: {arr.tolist()}")
    return arr


def norm(v) -> float:
    """Euclidean length, robust against overflow."""
    return float(math.hypot(*np.asarray(v, dtype=float)))


def unit(v, name: str = "vector") -> np.ndarray:
    """Normalize ``v``; a zero vector raises :class:`DomainError`."""
    arr = as_vector(v, name)
    n = norm(arr)
    if n == 0.0:
        raise DomainError(f"{name} is the zero vector and has no direction")
    return arr / n


def canonical_phi(phi: float) -> float:
    """Map an azimuth onto [0, 2*pi)."""
    out = math.fmod(phi, TWO_PI)
    if out < 0.0:
        out += TWO_PI
    # fmod of a tiny negative number plus 2*pi rounds to exactly 2*pi
    if out >= TWO_PI:
        out = 0.0
    return out


@dataclass(frozen=True)
class SphericalPoint:
    """A point ``(r, theta, phi)`` with theta in [0, pi] and phi in [0, 2*pi)."""

    r: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        for label in ("r", "theta", "phi"):
            if not math.isfinite(getattr(self, label)):
                raise DomainError(f"SphericalPoint.{label} must be finite")
        if self.r < 0.0:
            raise DomainError(f"SphericalPoint.r must be nonnegative, got {self.r}")
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"SphericalPoint.theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < TWO_PI:
            raise DomainError(f"SphericalPoint.phi must lie in [0, 2pi), got {self.phi}")

    @classmethod
    def from_cartesian(cls, v) -> "SphericalPoint":
        arr = as_vector(v)
        r = norm(arr)
        if r == 0.0:
            return cls(0.0, 0.0, 0.0)
        theta, phi = quadrant_angles(arr)
        return cls(r, theta, phi)


@dataclass(frozen=True)
class FrameTranslation:
    """Pure translation placing a local frame's origin at ``offset``."""

    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "offset", as_vector(self.offset, "FrameTranslation.offset"))

    def apply(self, v) -> np.ndarray:
        """Local Cartesian coordinates to global ones."""
        return as_vector(v) + self.offset

    def invert(self, v) -> np.ndarray:
        """Global Cartesian coordinates to local ones."""
        return as_vector(v) - self.offset


def direction_cosines(theta: float, phi: float) -> np.ndarray:
    """Unit vector (sin t cos p, sin t sin p, cos t)."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def to_cartesian(p: SphericalPoint) -> np.ndarray:
    return p.r * direction_cosines(p.theta, p.phi)


def quadrant_angles(v) -> tuple[float, float]:
    """Polar and azimuthal angle of a nonzero vector.

    Both angles come from the four-quadrant arctangent, so points on the
    coordinate axes get well-defined values.  On the z axis phi is set to 0.

    Examples
    --------
    >>> quadrant_angles([-1.0, 0.0, 0.0])
    (1.5707963267948966, 3.141592653589793)
    """
    x, y, z = as_vector(v)
    rho = math.hypot(x, y)
    if rho == 0.0 and z == 0.0:
        raise DomainError("quadrant_angles is undefined for the zero vector")
    theta = math.atan2(rho, z)
    phi = 0.0 if rho == 0.0 else canonical_phi(math.atan2(y, x))
    return theta, phi


def local_to_global(p: SphericalPoint, t: FrameTranslation) -> SphericalPoint:
    """Express a point given in a translated frame in the global frame."""
    shifted = to_cartesian(p) + t.offset
    r = norm(shifted)
    if r == 0.0:
        raise DomainError("translated point coincides with the global origin")
    theta, phi = quadrant_angles(shifted)
    return SphericalPoint(r, theta, phi)


def ratio_form_polar_angle(x: float, y: float, z: float) -> float:
    """Polar angle through the ratio (x + y) / (z (cos phi + sin phi)).

    This is the closed form obtained by eliminating the azimuth between the
    x and y components.  It is singular when cos phi + sin phi = 0 even
    though the point itself is regular there; :func:`quadrant_angles` is the
    form used everywhere else.  The arctangent is lifted onto [0, pi].
    """
    phi = math.atan2(y, x)
    denom = z * (math.cos(phi) + math.sin(phi))
    if denom == 0.0:
        if z == 0.0:
            return 0.5 * math.pi
        raise DomainError("ratio form is singular where cos(phi) + sin(phi) = 0")
    theta = math.atan((x + y) / denom)
    if theta < 0.0:
        theta += math.pi
    return theta


def orthonormal_pair(n) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``n`` to a right-handed orthonormal triad."""
    n = unit(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def rotate(v, axis, angle: float) -> np.ndarray:
    """Rotate ``v`` by ``angle`` about ``axis`` (Rodrigues); the axis is normalized first."""
    v = np.asarray(v, dtype=float)
    axis = unit(axis, "axis")
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * float(axis @ v) * (1.0 - c)
