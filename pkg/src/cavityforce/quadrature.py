"""Seeded low-discrepancy nodes over entry points and directions.

Each node is a pair (R_0, k): R_0 uniform over a disk of radius ``r``
through the cavity centre, perpendicular to the axis, and k uniform in
solid angle over the half-space on the positive side of the axis.  For a
full sphere every node is followed by its inversion partner (-R_0, -k).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import DomainError
from .vectors import orthonormal_pair, unit

SEQUENCES = ("sobol", "halton")


@dataclass(frozen=True)
class QuadratureSpec:
    """Node count, seed and sequence kind for :func:`cavity_nodes`."""

    nodes: int = 4096
    seed: int = 0
    sequence: str = "sobol"

    def __post_init__(self):
        if int(self.nodes) != self.nodes or self.nodes < 1:
            raise DomainError(f"quadrature node count must be a positive integer, got {self.nodes}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError(f"quadrature seed must be a nonnegative integer, got {self.seed}")
        if self.sequence not in SEQUENCES:
            raise DomainError(f"unknown sequence {self.sequence!r}; choose one of {', '.join(SEQUENCES)}")


def unit_samples(spec: QuadratureSpec, count: int, dims: int = 4) -> np.ndarray:
    """``count`` scrambled points in the unit cube [0, 1)^dims."""
    if spec.sequence == "sobol":
        engine = qmc.Sobol(d=dims, scramble=True, seed=spec.seed)
        m = int(math.log2(count)) if count > 0 else 0
        if 2**m == count:
            return engine.random_base2(m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return engine.random(count)
    engine = qmc.Halton(d=dims, scramble=True, seed=spec.seed)
    return engine.random(count)


def disk_and_direction(u: np.ndarray, radius: float, axis) -> tuple[np.ndarray, np.ndarray]:
    """Map unit-cube samples to entry points on the disk and inward directions."""
    axis = unit(axis, "axis")
    e1, e2 = orthonormal_pair(axis)
    rho = radius * np.sqrt(u[:, 0])
    alpha = 2.0 * math.pi * u[:, 1]
    origins = (rho * np.cos(alpha))[:, None] * e1 + (rho * np.sin(alpha))[:, None] * e2
    cos_beta = 1.0 - u[:, 2]
    sin_beta = np.sqrt(np.clip(1.0 - cos_beta**2, 0.0, None))
    az = 2.0 * math.pi * u[:, 3]
    directions = (
        (sin_beta * np.cos(az))[:, None] * e1
        + (sin_beta * np.sin(az))[:, None] * e2
        + cos_beta[:, None] * axis
    )
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    return origins, directions


def cavity_nodes(spec: QuadratureSpec, radius: float, axis, symmetric: bool) -> tuple[np.ndarray, np.ndarray]:
    """Entry points and directions for ``spec.nodes`` rays.

    With ``symmetric=True`` the node count must be even; the first half is
    drawn from the sequence and each draw is followed by its inversion
    partner, so the node set is closed under point inversion.
    """
    if symmetric:
        if spec.nodes % 2:
            raise DomainError(f"inversion-symmetric quadrature needs an even node count, got {spec.nodes}")
        base = spec.nodes // 2
        origins, directions = disk_and_direction(unit_samples(spec, base), radius, axis)
        paired_o = np.empty((spec.nodes, 3))
        paired_d = np.empty((spec.nodes, 3))
        paired_o[0::2], paired_o[1::2] = origins, -origins
        paired_d[0::2], paired_d[1::2] = directions, -directions
        return paired_o, paired_d
    return disk_and_direction(unit_samples(spec, spec.nodes), radius, axis)
