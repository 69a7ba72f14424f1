"""Field energy of a box, the dynamical force and the driven two-plate system.

Wave numbers are ``k_i = n_i pi / L_i``.  The bounded field energy sums
``|k|`` over a box of mode indices.  Viewed as a function of the three
wave numbers this mode sum is a smooth surface, and its first and second
derivatives drive the force that appears when the box walls move.

The two-plate system is the linear ODE

    d/dt (v_rp, v_lp) = M (v_rp, v_lp) + (xi_rp, xi_lp),
    M = [[eta1, eta2], [eta4, eta3]],

solved in closed form through its principal matrix and checked against a
numerical integrator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, linalg

from .errors import (
    CoefficientDomainError,
    ConvergenceError,
    DegenerateEigenvaluesError,
    DomainError,
    FormulaSingularityError,
)
from .vectors import as_vector

GAUSS_POINTS = 64
DEGENERACY_TOLERANCE = 1e-12
EVOLVE_METHODS = ("closed-form", "expm", "auto")


@dataclass(frozen=True)
class FieldQuantization:
    """Occupation, polarization count, mode numbers and box lengths.

    An axis with ``mode_numbers[i] == 0`` carries no modes: only index 0 is
    summed along it and its wave number is zero.
    """

    occupation: int = 0
    polarization_dof: int = 2
    mode_numbers: tuple = (1, 0, 0)
    lengths: tuple = (1.0, 1.0, 1.0)
    mode_cutoff: int = 1

    def __post_init__(self):
        if int(self.occupation) != self.occupation or self.occupation < 0:
            raise DomainError(f"occupation must be a nonnegative integer, got {self.occupation}")
        if int(self.polarization_dof) != self.polarization_dof or self.polarization_dof < 1:
            raise DomainError(f"polarization_dof must be a positive integer, got {self.polarization_dof}")
        modes = tuple(int(n) for n in self.mode_numbers)
        if len(modes) != 3 or any(n < 0 for n in modes) or modes != tuple(self.mode_numbers):
            raise DomainError(f"mode_numbers must be three nonnegative integers, got {self.mode_numbers}")
        lengths = tuple(float(x) for x in self.lengths)
        if len(lengths) != 3 or not all(math.isfinite(x) and x > 0.0 for x in lengths):
            raise DomainError(f"lengths must be three positive reals, got {self.lengths}")
        if int(self.mode_cutoff) != self.mode_cutoff or self.mode_cutoff < 1:
            raise DomainError(f"mode_cutoff must be a positive integer, got {self.mode_cutoff}")
        object.__setattr__(self, "mode_numbers", modes)
        object.__setattr__(self, "lengths", lengths)

    @property
    def wave_numbers(self) -> np.ndarray:
        return np.array([n * math.pi / L for n, L in zip(self.mode_numbers, self.lengths)])

    @property
    def active_axes(self) -> tuple:
        return tuple(i for i, n in enumerate(self.mode_numbers) if n > 0)

    def prefactor(self, hbar: float = 1.0, c: float = 1.0) -> float:
        """``(n_s + 1/2) hbar c Theta``."""
        return (self.occupation + 0.5) * hbar * c * self.polarization_dof


def _mode_box(q: FieldQuantization) -> np.ndarray:
    """Ratios ``m_i / n_i`` for every mode in the summation box, zero mode dropped."""
    axes = [np.arange(q.mode_cutoff + 1) if n > 0 else np.zeros(1) for n in q.mode_numbers]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    grid = grid[np.any(grid > 0, axis=1)]
    scale = np.array([1.0 / n if n > 0 else 0.0 for n in q.mode_numbers])
    return grid * scale


def energy_bounded(q: FieldQuantization, hbar: float = 1.0, c: float = 1.0) -> float:
    """``(n_s + 1/2) hbar c Theta sum |k|`` over the mode box up to the cutoff."""
    grid = [np.arange(q.mode_cutoff + 1) if n > 0 else np.zeros(1) for n in q.mode_numbers]
    k = [g * math.pi / L for g, L in zip(grid, q.lengths)]
    kx, ky, kz = np.meshgrid(*k, indexing="ij")
    return q.prefactor(hbar, c) * math.fsum(np.sqrt(kx**2 + ky**2 + kz**2).ravel())


def mode_energy(q: FieldQuantization, k, hbar: float = 1.0, c: float = 1.0) -> float:
    """Mode sum as a function of the wave-number vector.

    Mode ``m`` contributes ``|(m_i / n_i) k_i|``; at ``k = q.wave_numbers``
    this reproduces :func:`energy_bounded`.
    """
    ratios = _mode_box(q)
    k = as_vector(k, "k")
    return q.prefactor(hbar, c) * math.fsum(np.linalg.norm(ratios * k, axis=1))


def energy_gradient(q: FieldQuantization, k=None, hbar: float = 1.0, c: float = 1.0) -> np.ndarray:
    """Analytic first derivatives of :func:`mode_energy`."""
    k = q.wave_numbers if k is None else as_vector(k, "k")
    a2 = _mode_box(q) ** 2
    t = np.sqrt(a2 @ (k * k))
    keep = t > 0.0
    return q.prefactor(hbar, c) * np.sum(a2[keep] * k / t[keep, None], axis=0)


def energy_hessian(q: FieldQuantization, k=None, hbar: float = 1.0, c: float = 1.0) -> np.ndarray:
    """Analytic second derivatives of :func:`mode_energy`.

    Diagonal entries are written as ``a_i^2 sum_{j != i} a_j^2 k_j^2 / t^3``,
    which is exactly zero along a single active axis.
    """
    k = q.wave_numbers if k is None else as_vector(k, "k")
    a2 = _mode_box(q) ** 2
    sq = a2 * (k * k)
    t = np.sqrt(sq.sum(axis=1))
    keep = t > 0.0
    a2, sq, t3 = a2[keep], sq[keep], t[keep] ** 3
    g = a2 * k
    hess = -np.einsum("mi,mj,m->ij", g, g, 1.0 / t3)
    for i in range(3):
        others = sq.sum(axis=1) - sq[:, i]
        hess[i, i] = np.sum(a2[:, i] * others / t3)
    return q.prefactor(hbar, c) * hess


def energy_free(q: FieldQuantization, k_cutoff: float, hbar: float = 1.0, c: float = 1.0,
                points: int = GAUSS_POINTS) -> float:
    """Continuum energy over the cube [0, k_cutoff]^3 of wave numbers.

    Uses a tensor Gauss-Legendre rule with ``points`` nodes per axis and
    divides by the mode spacings ``pi / L_i``.
    """
    if not (math.isfinite(k_cutoff) and k_cutoff > 0.0):
        raise DomainError(f"k_cutoff must be positive, got {k_cutoff}")
    x, w = np.polynomial.legendre.leggauss(points)
    x = 0.5 * k_cutoff * (x + 1.0)
    w = 0.5 * k_cutoff * w
    radius = np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)
    value = float(np.einsum("i,j,k,ijk->", w, w, w, radius))
    if not math.isfinite(value):
        raise ConvergenceError("free-space quadrature produced a non-finite value")
    spacing = math.prod(math.pi / L for L in q.lengths)
    return q.prefactor(hbar, c) * value / spacing


@dataclass(frozen=True)
class DynamicalCoefficients:
    """The seven coefficients of the force component along one axis."""

    alpha: int
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    radicand: float


def dynamical_coefficients(q: FieldQuantization, alpha: int, gradient=None, hbar: float = 1.0,
                           c: float = 1.0) -> DynamicalCoefficients:
    """Coefficients for force component ``alpha`` from the energy gradient.

    ``gradient`` defaults to the analytic :func:`energy_gradient`; passing a
    numerical one lets tests check the chain independently.
    """
    k = q.wave_numbers
    grad = energy_gradient(q, hbar=hbar, c=c) if gradient is None else np.asarray(gradient, dtype=float)
    a = q.occupation + 0.5
    others = [i for i in range(3) if i != alpha]
    c1 = float(np.sum(grad))
    c2 = float(sum((a * hbar * c) ** 2 * k[i] for i in others))
    c3 = float(sum((a * hbar) ** 2 * k[i] ** 2 for i in others))
    d = c1 * c1 - (a * hbar * c) ** 2
    if d == 0.0:
        raise CoefficientDomainError(
            f"axis {alpha}: C1^2 equals ((n_s + 1/2) hbar c)^2, so the coefficients divide by zero"
        )
    first = (a * hbar * c2) ** 2 / d**2
    second = (c2 * c2 - c1 * c1 * c3) / d
    radicand = first + second
    if not radicand > 0.0:
        raise CoefficientDomainError(
            f"axis {alpha}: C4 radicand {radicand!r} is not positive "
            f"(squared term {first!r}, ratio term {second!r} with C1^2 - ((n_s+1/2) hbar c)^2 = {d!r})"
        )
    c4 = radicand ** -0.5
    c5 = (c1 * c4 * (c1 * c1 * c3 - c2 * c2) / d**2
          - 2.0 * (a * hbar) ** 2 * c1 * c2 * c2 * c4 / d**3
          - 2.0 * a * hbar * c1 * c2 / d**2
          - c1 * c3 * c4 / d)
    c6 = (a * hbar) ** 2 * c2 * c4 / d**2 + c2 * c4 / d + a * hbar / d
    c7 = c1 * c1 * c4 / d
    return DynamicalCoefficients(alpha, c1, c2, c3, c4, c5, c6, c7, radicand)


def length_sensitivity(q: FieldQuantization) -> np.ndarray:
    """``n_i df_i/dL_i`` with ``f_i = pi / L_i``, i.e. ``dk_i/dL_i``."""
    return np.array([-n * math.pi / L**2 for n, L in zip(q.mode_numbers, q.lengths)])


def assemble_force(q: FieldQuantization, rates, hessian, coefficients, hbar: float = 1.0) -> np.ndarray:
    """Combine wall rates, energy curvature and coefficients into a force vector."""
    rates = as_vector(rates, "length_rates")
    k = q.wave_numbers
    a = q.occupation + 0.5
    dk = length_sensitivity(q) * rates
    out = np.zeros(3)
    for coef in coefficients:
        alpha = coef.alpha
        total = 0.0
        for i in range(3):
            bracket = coef.c5 * hessian[i, i]
            if i != alpha:
                bracket += (coef.c6 - coef.c7 * a * k[i]) * a
            total += dk[i] * bracket
            total += sum(coef.c5 * dk[j] * hessian[j, i] for j in range(3) if j != i)
        out[alpha] = total
    return out


def dynamical_force_3d(q: FieldQuantization, length_rates, hbar: float = 1.0, c: float = 1.0) -> np.ndarray:
    """Force on the box walls from the rates of change of the three lengths.

    The result is linear in ``length_rates``.  When only one axis carries
    modes and only that length moves, the problem is one-dimensional and
    the force vanishes; that case returns the zero vector directly, since
    its coefficient radicand is exactly zero.
    """
    rates = as_vector(length_rates, "length_rates")
    if not np.any(rates):
        return np.zeros(3)
    active = q.active_axes
    if len(active) == 1 and all(rates[i] == 0.0 for i in range(3) if i != active[0]):
        return np.zeros(3)
    grad = energy_gradient(q, hbar=hbar, c=c)
    hess = energy_hessian(q, hbar=hbar, c=c)
    coefs = [dynamical_coefficients(q, alpha, grad, hbar, c) for alpha in range(3)]
    return assemble_force(q, rates, hess, coefs, hbar)


def dynamical_force_1d(q: FieldQuantization, length_rate: float, hbar: float = 1.0, c: float = 1.0) -> float:
    """``(n / c) (df/dL) (dH/dk) dL/dt`` along the single active axis."""
    active = q.active_axes
    if len(active) != 1:
        raise DomainError(f"one-dimensional force needs exactly one active axis, got {len(active)}")
    i = active[0]
    n = q.mode_numbers[i]
    L = q.lengths[i]
    dfdl = -math.pi / L**2
    dhdk = energy_gradient(q, hbar=hbar, c=c)[i]
    return n / c * dfdl * dhdk * length_rate


def region_coupling(q: FieldQuantization, hbar: float = 1.0, c: float = 1.0) -> float:
    """Coupling ``g`` of one region: the 1D force per unit wall speed."""
    return dynamical_force_1d(q, 1.0, hbar, c)


def unruh_temperature(acceleration: float, wave_number: float, hbar: float = 1.0, c: float = 1.0) -> float:
    """``hbar |a| / (2 pi c k)``."""
    if not wave_number > 0.0:
        raise DomainError(f"wave_number must be positive, got {wave_number}")
    return hbar * abs(acceleration) / (2.0 * math.pi * c * wave_number)


def initial_velocities(region_energies, masses, c: float = 1.0) -> tuple[float, float]:
    """Plate speeds set by the energy imbalance across each plate.

    ``v_rp = 2 |H3 - H2| / (m_rp c)`` and ``v_lp = 2 |H1 - H2| / (m_lp c)``.
    """
    h1, h2, h3 = (float(h) for h in region_energies)
    if min(h1, h2, h3) < 0.0:
        raise DomainError("region energies must be nonnegative")
    m_rp, m_lp = _check_masses(masses)
    return 2.0 * abs(h3 - h2) / (m_rp * c), 2.0 * abs(h1 - h2) / (m_lp * c)


def _check_masses(masses) -> tuple[float, float]:
    m_rp, m_lp = (float(m) for m in masses)
    if not (m_rp > 0.0 and m_lp > 0.0 and math.isfinite(m_rp) and math.isfinite(m_lp)):
        raise DomainError(f"plate masses must be positive, got {masses}")
    return m_rp, m_lp


@dataclass(frozen=True)
class PlateSigns:
    """Signs attached to each region's coupling in the plate equations."""

    rp2: int = 1
    rp3: int = 1
    lp1: int = 1
    lp2: int = 1

    def __post_init__(self):
        for name in ("rp2", "rp3", "lp1", "lp2"):
            if getattr(self, name) not in (-1, 1):
                raise DomainError(f"sign {name} must be +1 or -1, got {getattr(self, name)}")


@dataclass(frozen=True)
class PlateSystem1D:
    """Right and left plate with velocity couplings and constant drives.

    ``state`` is ``(R1, R2, R3, R4)``: right and left positions followed by
    right and left velocities.
    """

    masses: tuple = (1.0, 1.0)
    eta: tuple = (0.0, 0.0, 0.0, 0.0)
    drive: tuple = (0.0, 0.0)
    signs: PlateSigns = field(default_factory=PlateSigns)
    state: tuple = (0.0, 0.0, 0.0, 0.0)
    couplings: Optional[tuple] = None

    def __post_init__(self):
        _check_masses(self.masses)
        for name, size in (("eta", 4), ("drive", 2), ("state", 4)):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != size or not all(math.isfinite(v) for v in values):
                raise DomainError(f"{name} must hold {size} finite reals, got {getattr(self, name)}")
            object.__setattr__(self, name, values)

    @property
    def matrix(self) -> np.ndarray:
        e1, e2, e3, e4 = self.eta
        return np.array([[e1, e2], [e4, e3]])

    def with_state(self, positions, velocities) -> "PlateSystem1D":
        return PlateSystem1D(self.masses, self.eta, self.drive, self.signs,
                             (*positions, *velocities), self.couplings)


def plate_coefficients(couplings, masses, signs: PlateSigns = PlateSigns(),
                       driver_velocity: float = 0.0) -> PlateSystem1D:
    """Build the plate system from the three region couplings ``g1, g2, g3``.

    Region 1 is left of the left plate, region 2 between the plates and
    region 3 right of the right plate.
    """
    g1, g2, g3 = (float(g) for g in couplings)
    m_rp, m_lp = _check_masses(masses)
    s = signs
    eta = (
        (s.rp2 * g2 - s.rp3 * g3) / m_rp,
        -s.rp2 * g2 / m_rp,
        (s.lp1 * g1 - s.lp2 * g2) / m_lp,
        s.lp2 * g2 / m_lp,
    )
    drive = (s.rp3 * g3 * driver_velocity / m_rp, -s.lp1 * g1 / m_lp)
    return PlateSystem1D((m_rp, m_lp), eta, drive, signs, couplings=(g1, g2, g3))


def eigenvalues(sys: PlateSystem1D):
    """``(eta1 + eta3)/2 +/- sqrt((eta1 - eta3)^2/4 + eta2 eta4)``; complex pair when the radicand is negative."""
    e1, e2, e3, e4 = sys.eta
    mean = 0.5 * (e1 + e3)
    radicand = 0.25 * (e1 - e3) ** 2 + e2 * e4
    if radicand >= 0.0:
        root = math.sqrt(radicand)
        return mean + root, mean - root
    root = cmath.sqrt(radicand)
    return mean + root, mean - root


def _closed_form_checks(sys: PlateSystem1D):
    lam3, lam4 = eigenvalues(sys)
    e1, e2, _, _ = sys.eta
    scale = max(abs(lam3), abs(lam4), *(abs(e) for e in sys.eta))
    if abs(lam3 - lam4) <= DEGENERACY_TOLERANCE * scale:
        raise DegenerateEigenvaluesError(f"eigenvalues coincide for eta = {sys.eta}")
    if abs(lam3 - e1) <= DEGENERACY_TOLERANCE * scale:
        raise FormulaSingularityError(f"lambda3 equals eta1 for eta = {sys.eta}")
    if e2 == 0.0:
        raise FormulaSingularityError(f"eta2 is zero for eta = {sys.eta}; the closed form divides by it")
    return lam3, lam4


def principal_matrix(t: float, t0: float, sys: PlateSystem1D, normalization: float = 1.0) -> np.ndarray:
    """Fundamental matrix psi(t, t0) of the homogeneous plate system.

    Columns are combinations of the eigen-solutions ``(1, (lam - eta1)/eta2)
    exp(lam t)``.  ``normalization`` is an arbitrary constant factor that
    cancels in every velocity solution.  The array is complex when the
    eigenvalues are.
    """
    lam3, lam4 = _closed_form_checks(sys)
    e1, e2, _, _ = sys.eta
    ratio = (lam4 - e1) / (lam3 - e1)
    exp_a = cmath.exp(lam3 * t + lam4 * t0) if isinstance(lam3, complex) else math.exp(lam3 * t + lam4 * t0)
    exp_b = cmath.exp(lam4 * t + lam3 * t0) if isinstance(lam3, complex) else math.exp(lam4 * t + lam3 * t0)
    psi = np.array([
        [ratio * exp_a - exp_b, e2 / (lam3 - e1) * (exp_b - exp_a)],
        [(lam4 - e1) / e2 * (exp_a - exp_b), ratio * exp_b - exp_a],
    ])
    return normalization * psi


def _drive_function(sys: PlateSystem1D, drive) -> Callable[[float], np.ndarray]:
    if drive is None:
        constant = np.array(sys.drive)
        return lambda t: constant
    return lambda t: np.asarray(drive(t), dtype=float)


@dataclass(frozen=True)
class PlateEvolution:
    velocities: tuple
    positions: tuple
    method: str


def _quad(fn, a, b, complex_valued: bool):
    value, _ = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, limit=200, complex_func=complex_valued)
    return value


def _closed_form_velocity(sys: PlateSystem1D, t0: float, t: float, xi) -> np.ndarray:
    lam3, lam4 = _closed_form_checks(sys)
    e1 = sys.eta[0]
    is_complex = isinstance(lam3, complex)
    v0 = np.array(sys.state[2:])
    factor = 1.0 / ((lam4 - e1) / (lam3 - e1) - 1.0)
    scale = cmath.exp((lam3 + lam4) * t0) if is_complex else math.exp((lam3 + lam4) * t0)
    psi = principal_matrix(t, t0, sys)
    out = factor * (psi @ v0) / scale
    if t != t0:
        def inv_drive(tp):
            p = principal_matrix(tp, t0, sys)
            x = xi(tp)
            det = p[0, 0] * p[1, 1] - p[0, 1] * p[1, 0]
            return (p[1, 1] * x[0] - p[0, 1] * x[1]) / det, (p[0, 0] * x[1] - p[1, 0] * x[0]) / det

        i1 = _quad(lambda tp: inv_drive(tp)[0], t0, t, is_complex)
        i2 = _quad(lambda tp: inv_drive(tp)[1], t0, t, is_complex)
        out = out + psi @ np.array([i1, i2])
    return out.real if is_complex else np.asarray(out, dtype=float)


def _expm_state(sys: PlateSystem1D, t0: float, t: float) -> np.ndarray:
    """Exact propagation with a constant drive through an augmented matrix exponential."""
    e1, e2, e3, e4 = sys.eta
    aug = np.zeros((5, 5))
    aug[0, 2] = aug[1, 3] = 1.0
    aug[2, 2], aug[2, 3], aug[3, 2], aug[3, 3] = e1, e2, e4, e3
    aug[2, 4], aug[3, 4] = sys.drive
    x0 = np.array([*sys.state, 1.0])
    return linalg.expm(aug * (t - t0)) @ x0


def evolve_plates(sys: PlateSystem1D, t0: float, t: float, drive=None, method: str = "closed-form") -> PlateEvolution:
    """Velocities and positions of both plates at time ``t``.

    ``method="closed-form"`` uses the principal matrix with quadrature for
    the drive and position integrals.  ``"expm"`` propagates with a matrix
    exponential (constant drive only).  ``"auto"`` tries the closed form
    and falls back to ``"expm"`` when the closed form is singular.
    """
    if method not in EVOLVE_METHODS:
        raise DomainError(f"method must be one of {EVOLVE_METHODS}, got {method!r}")
    if method == "auto":
        try:
            _closed_form_checks(sys)
            method = "closed-form"
        except (DegenerateEigenvaluesError, FormulaSingularityError):
            method = "expm"
    if method == "expm":
        if drive is not None:
            raise DomainError("the matrix-exponential route supports a constant drive only")
        x = _expm_state(sys, t0, t)
        return PlateEvolution((float(x[2]), float(x[3])), (float(x[0]), float(x[1])), "expm")
    xi = _drive_function(sys, drive)
    v = _closed_form_velocity(sys, t0, t, xi)
    if t == t0:
        return PlateEvolution((float(sys.state[2]), float(sys.state[3])), (sys.state[0], sys.state[1]), "closed-form")
    dx1 = _quad(lambda tau: _closed_form_velocity(sys, t0, tau, xi)[0], t0, t, False)
    dx2 = _quad(lambda tau: _closed_form_velocity(sys, t0, tau, xi)[1], t0, t, False)
    return PlateEvolution((float(v[0]), float(v[1])), (sys.state[0] + dx1, sys.state[1] + dx2), "closed-form")


def plate_time_series(sys: PlateSystem1D, t0: float, times, drive=None, method: str = "closed-form") -> np.ndarray:
    """Rows ``(t, R1, R2, v1, v2)`` at the requested times (ascending, starting at or after t0).

    Positions are accumulated interval by interval, so each row costs one
    short integral rather than one from ``t0``.
    """
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < t0 or np.any(np.diff(times) <= 0.0)):
        raise DomainError("sample times must be strictly increasing and not before t0")
    if method == "auto":
        try:
            _closed_form_checks(sys)
            method = "closed-form"
        except (DegenerateEigenvaluesError, FormulaSingularityError):
            method = "expm"
    rows = []
    if method == "expm":
        for t in times:
            ev = evolve_plates(sys, t0, t, drive, "expm")
            rows.append([t, *ev.positions, *ev.velocities])
        return np.array(rows).reshape(-1, 5)
    xi = _drive_function(sys, drive)
    pos = np.array(sys.state[:2])
    last = t0
    for t in times:
        if t > last:
            pos = pos + np.array([
                _quad(lambda tau, i=i: _closed_form_velocity(sys, t0, tau, xi)[i], last, t, False) for i in range(2)
            ])
        v = _closed_form_velocity(sys, t0, t, xi) if t != t0 else np.array(sys.state[2:])
        rows.append([t, pos[0], pos[1], v[0], v[1]])
        last = t
    return np.array(rows).reshape(-1, 5)


def reference_trajectory(sys: PlateSystem1D, t0: float, times, drive=None) -> np.ndarray:
    """Rows ``(t, R1, R2, v1, v2)`` from an eighth-order Runge-Kutta integration."""
    xi = _drive_function(sys, drive)
    m = sys.matrix
    times = np.asarray(times, dtype=float)

    def rhs(t, x):
        v = x[2:]
        return np.concatenate([v, m @ v + xi(t)])

    if times.size == 0:
        return np.empty((0, 5))
    t_end = float(times[-1])
    if t_end == t0:
        return np.array([[t0, *sys.state]] * times.size)
    sol = integrate.solve_ivp(rhs, (t0, t_end), np.array(sys.state), method="DOP853",
                              t_eval=times, rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise ConvergenceError(f"reference integration failed: {sol.message}")
    return np.column_stack([sol.t, sol.y.T])
