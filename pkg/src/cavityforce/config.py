"""Scenario configuration for the command-line front end.

A scenario is a YAML mapping with the sections ``geometry``, ``ray``,
``quadrature``, ``modes``, ``dynamics`` and ``units``.  Every section is
optional and falls back to the defaults below.  Unknown keys and invalid
values raise :class:`ConfigError` with a message naming the field.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .errors import ConfigError

GEOMETRY_KINDS = ("sphere", "hemisphere", "plate-hemisphere", "plates1d")
SEQUENCES = ("sobol", "halton")
UNIT_SYSTEMS = ("natural", "si")
TIME_NORMALIZATIONS = ("unit", "transit")
COEFFICIENT_MODES = ("random", "explicit", "regions")
DRIVE_KINDS = ("zero", "constant", "sine")
EVOLVE_METHODS = ("closed-form", "auto", "expm")


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite, got {value!r}")
    return value


def _positive(value, where: str) -> float:
    value = _real(value, where)
    if value <= 0.0:
        raise ConfigError(f"{where} must be positive, got {value!r}")
    return value


def _integer(value, where: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{where} must be at least {minimum}, got {value!r}")
    return value


def _vector(value, where: str, size: int = 3) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != size:
        raise ConfigError(f"{where} must be a list of {size} numbers, got {value!r}")
    return tuple(_real(v, f"{where}[{i}]") for i, v in enumerate(value))


def _choice(value, where: str, options) -> str:
    if value not in options:
        raise ConfigError(f"{where} must be one of {', '.join(options)}, got {value!r}")
    return value


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = "sphere"
    radius: float = 1.0
    thickness: float = 0.0
    center: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 1.0, 0.0)
    plate_center: Optional[tuple] = None
    plate_theta: Optional[float] = None
    plate_phi: Optional[float] = None
    gap: Optional[float] = None

    def validate(self) -> "GeometryConfig":
        _choice(self.kind, "geometry.kind", GEOMETRY_KINDS)
        _positive(self.radius, "geometry.radius")
        thickness = _real(self.thickness, "geometry.thickness")
        if thickness < 0.0:
            raise ConfigError(f"geometry.thickness must be nonnegative, got {thickness!r}")
        _vector(self.center, "geometry.center")
        axis = _vector(self.axis, "geometry.axis")
        if not any(axis):
            raise ConfigError("geometry.axis must be a nonzero vector")
        if self.gap is not None:
            _positive(self.gap, "geometry.gap")
        plate_given = [self.plate_center is not None, self.plate_theta is not None, self.plate_phi is not None]
        if self.kind == "plate-hemisphere":
            if any(plate_given) and not all(plate_given):
                raise ConfigError("geometry.plate_center, plate_theta and plate_phi must be given together")
            if not any(plate_given) and self.gap is None:
                raise ConfigError("plate-hemisphere geometry needs either geometry.gap or an explicit plate pose")
            if all(plate_given):
                _vector(self.plate_center, "geometry.plate_center")
                theta = _real(self.plate_theta, "geometry.plate_theta")
                phi = _real(self.plate_phi, "geometry.plate_phi")
                if not 0.0 <= theta <= math.pi:
                    raise ConfigError(f"geometry.plate_theta must lie in [0, pi], got {theta!r}")
                if not 0.0 <= phi < 2.0 * math.pi:
                    raise ConfigError(f"geometry.plate_phi must lie in [0, 2pi), got {phi!r}")
        elif any(plate_given):
            raise ConfigError(f"plate fields are only valid for plate-hemisphere geometry, not {self.kind}")
        if self.kind == "plates1d" and self.gap is None:
            raise ConfigError("plates1d geometry needs geometry.gap")
        return self


@dataclass(frozen=True)
class RayConfig:
    origin: tuple = (0.0, 0.0, 0.0)
    direction: Optional[tuple] = None
    reflections: int = 10

    def validate(self) -> "RayConfig":
        _vector(self.origin, "ray.origin")
        if self.direction is not None:
            d = _vector(self.direction, "ray.direction")
            if not any(d):
                raise ConfigError("ray.direction must be a nonzero vector")
        _integer(self.reflections, "ray.reflections", 1)
        return self


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = 4096
    seed: int = 0
    sequence: str = "sobol"

    def validate(self) -> "QuadratureConfig":
        _integer(self.nodes, "quadrature.nodes", 1)
        _integer(self.seed, "quadrature.seed", 0)
        if self.seed >= 2**64:
            raise ConfigError(f"quadrature.seed must fit in 64 bits, got {self.seed!r}")
        _choice(self.sequence, "quadrature.sequence", SEQUENCES)
        return self


@dataclass(frozen=True)
class ModesConfig:
    cutoff: int = 10_000
    eps0: float = 1e-2
    levels: int = 4
    ratio: float = 2.0
    rtol: float = 1e-6
    time_normalization: str = "unit"

    def validate(self) -> "ModesConfig":
        _integer(self.cutoff, "modes.cutoff", 1)
        _positive(self.eps0, "modes.eps0")
        _integer(self.levels, "modes.levels", 2)
        if _real(self.ratio, "modes.ratio") <= 1.0:
            raise ConfigError(f"modes.ratio must exceed 1, got {self.ratio!r}")
        _positive(self.rtol, "modes.rtol")
        _choice(self.time_normalization, "modes.time_normalization", TIME_NORMALIZATIONS)
        return self


@dataclass(frozen=True)
class RegionConfig:
    mode: int = 1
    length: float = 1.0
    occupation: int = 0
    cutoff: int = 1

    def validate(self, where: str) -> "RegionConfig":
        _integer(self.mode, f"{where}.mode", 1)
        _positive(self.length, f"{where}.length")
        _integer(self.occupation, f"{where}.occupation", 0)
        _integer(self.cutoff, f"{where}.cutoff", 1)
        return self


@dataclass(frozen=True)
class DriveConfig:
    kind: str = "constant"
    amplitude: float = 1.0
    omega: float = 1.0

    def validate(self) -> "DriveConfig":
        _choice(self.kind, "dynamics.drive.kind", DRIVE_KINDS)
        _real(self.amplitude, "dynamics.drive.amplitude")
        _real(self.omega, "dynamics.drive.omega")
        return self


@dataclass(frozen=True)
class DynamicsConfig:
    masses: tuple = (1.0, 1.0)
    signs: tuple = (1, 1, 1, 1)
    coefficients: str = "random"
    eta: Optional[tuple] = None
    xi_lp: float = 0.0
    eta_scale: float = 1.0
    regions: Optional[tuple] = None
    initial_velocities: Optional[tuple] = None
    initial_positions: tuple = (0.0, 0.0)
    drive: DriveConfig = field(default_factory=DriveConfig)
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 0.1
    method: str = "closed-form"

    def validate(self) -> "DynamicsConfig":
        masses = _vector(self.masses, "dynamics.masses", 2)
        if min(masses) <= 0.0:
            raise ConfigError(f"dynamics.masses must be positive, got {list(masses)!r}")
        if not isinstance(self.signs, (list, tuple)) or len(self.signs) != 4 or any(s not in (-1, 1) or isinstance(s, bool) for s in self.signs):
            raise ConfigError(f"dynamics.signs must be four entries of +1 or -1, got {self.signs!r}")
        _choice(self.coefficients, "dynamics.coefficients", COEFFICIENT_MODES)
        if self.coefficients == "explicit" and self.eta is None:
            raise ConfigError("dynamics.coefficients = explicit needs dynamics.eta")
        if self.eta is not None:
            _vector(self.eta, "dynamics.eta", 4)
        _real(self.xi_lp, "dynamics.xi_lp")
        _positive(self.eta_scale, "dynamics.eta_scale")
        if self.coefficients == "regions":
            if self.regions is None or len(self.regions) != 3:
                raise ConfigError("dynamics.coefficients = regions needs exactly three dynamics.regions")
        if self.regions is not None:
            for i, region in enumerate(self.regions):
                region.validate(f"dynamics.regions[{i}]")
        if self.initial_velocities is not None:
            _vector(self.initial_velocities, "dynamics.initial_velocities", 2)
        _vector(self.initial_positions, "dynamics.initial_positions", 2)
        self.drive.validate()
        t0 = _real(self.t0, "dynamics.t0")
        t1 = _real(self.t1, "dynamics.t1")
        if t1 <= t0:
            raise ConfigError(f"dynamics.t1 must exceed dynamics.t0, got t0={t0!r}, t1={t1!r}")
        _positive(self.dt, "dynamics.dt")
        _choice(self.method, "dynamics.method", EVOLVE_METHODS)
        return self


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    ray: RayConfig = field(default_factory=RayConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    units: str = "natural"

    def validate(self) -> "ScenarioConfig":
        self.geometry.validate()
        self.ray.validate()
        self.quadrature.validate()
        self.modes.validate()
        self.dynamics.validate()
        _choice(self.units, "units", UNIT_SYSTEMS)
        return self

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    @classmethod
    def from_mapping(cls, data: Optional[dict]) -> "ScenarioConfig":
        data = {} if data is None else data
        if not isinstance(data, dict):
            raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
        _reject_unknown(data, cls, "")
        kwargs = {}
        for name, section_cls in (("geometry", GeometryConfig), ("ray", RayConfig),
                                  ("quadrature", QuadratureConfig), ("modes", ModesConfig)):
            if name in data:
                kwargs[name] = _section(section_cls, data[name], name)
        if "dynamics" in data:
            kwargs["dynamics"] = _dynamics(data["dynamics"])
        if "units" in data:
            kwargs["units"] = data["units"]
        return cls(**kwargs).validate()

    def replace(self, section: Optional[str] = None, **changes) -> "ScenarioConfig":
        """Copy with fields changed, either top-level or inside ``section``."""
        if section is None:
            return dataclasses.replace(self, **changes).validate()
        inner = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: inner}).validate()


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _reject_unknown(data: dict, cls, prefix: str) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            where = f"{prefix}.{key}" if prefix else str(key)
            raise ConfigError(f"unknown configuration key {where!r}")


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _section(cls, data, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping, got {type(data).__name__}")
    _reject_unknown(data, cls, name)
    return cls(**{k: _tupled(v) for k, v in data.items()})


def _dynamics(data) -> DynamicsConfig:
    if data is None:
        return DynamicsConfig()
    if not isinstance(data, dict):
        raise ConfigError(f"section 'dynamics' must be a mapping, got {type(data).__name__}")
    _reject_unknown(data, DynamicsConfig, "dynamics")
    values = {k: _tupled(v) for k, v in data.items() if k not in ("drive", "regions")}
    if "drive" in data:
        values["drive"] = _section(DriveConfig, data["drive"], "dynamics.drive")
    if data.get("regions") is not None:
        regions = data["regions"]
        if not isinstance(regions, list):
            raise ConfigError("dynamics.regions must be a list of mappings")
        values["regions"] = tuple(_section(RegionConfig, r, f"dynamics.regions[{i}]") for i, r in enumerate(regions))
    return DynamicsConfig(**values)


def load_config(path) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"configuration file {path} is not valid YAML: {exc}") from exc
    return ScenarioConfig.from_mapping(data)
