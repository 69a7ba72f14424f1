"""Exception hierarchy shared by all cavityforce modules.

Every error carries a category that the command-line front end maps onto
its exit codes (2 configuration, 3 numerical failure, 4 unsupported
degeneracy).
"""


class CavityForceError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class DomainError(CavityForceError, ValueError):
    """An input lies outside the domain of the operation."""

    exit_code = 2


class DegeneratePlaneError(DomainError):
    """The plane of incidence is undefined (ray passes through the center)."""


class GrazingIncidenceError(DomainError):
    """The incidence angle is too close to pi/2 for a finite chord."""


class NoIntersectionError(DomainError):
    """A ray never reaches the surface it was asked to hit."""


class NumericalError(CavityForceError):
    """A numerical procedure failed to reach its stated tolerance."""


class ConvergenceError(NumericalError):
    """An extrapolation or quadrature did not converge."""


class CoefficientDomainError(NumericalError):
    """A coefficient radicand is not positive, so the coefficient is undefined."""


class DegeneracyError(CavityForceError):
    """A closed form is singular for the requested parameters."""

    exit_code = 4


class DegenerateEigenvaluesError(DegeneracyError):
    """The two eigenvalues of the plate coupling matrix coincide."""


class FormulaSingularityError(DegeneracyError):
    """A closed-form expression divides by zero for these parameters."""


class ConfigError(CavityForceError, ValueError):
    """Scenario configuration failed validation."""

    exit_code = 2
