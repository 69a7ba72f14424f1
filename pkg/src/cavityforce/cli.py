"""Command-line front end: ``cavityforce <subcommand> [options]``.

Subcommands
-----------
trace      reflection points of one ray in a sphere or hemisphere
classify   reflection count and escape class for seeded hemisphere entries
force      Casimir force over a cavity, or between parallel plates
plates1d   regularized parallel-plate energy and force at one gap
dyncas     time series of the driven two-plate system

Tables go to ``--out`` (or standard output) as CSV with a header row and
17 significant digits.  A JSON record with the configuration echo, the
summary values and provenance goes to ``<out>.meta.json`` (or standard
error when writing to standard output).  Exit codes: 0 success,
2 invalid configuration or input, 3 numerical failure, 4 unsupported
degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import metadata
from typing import Optional

import numpy as np
from scipy import constants

from . import dynamics as dyn
from .config import ScenarioConfig, load_config
from .errors import CavityForceError, ConfigError
from .force import (
    NODE_COLUMNS,
    ModeGeometry,
    Regularization,
    parallel_plate_force_1d,
    per_direction_force,
    regularized_zeta_sum,
    total_force,
)
from .hemisphere import (
    CavityGeometry,
    CavityKind,
    classify_reflection,
    exit_ray,
    plate_reflection_point,
    reentry_check,
    trace_hemisphere,
)
from .quadrature import QuadratureSpec, cavity_nodes
from .reflection import RayState, closed_form_nth_point, trace_iterative
from .vectors import FrameTranslation, norm

SUBCOMMANDS = ("trace", "classify", "force", "plates1d", "dyncas")


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def unit_constants(units: str) -> tuple[float, float]:
    """``(hbar, c)`` for the unit system."""
    if units == "si":
        return constants.hbar, constants.c
    return 1.0, 1.0


# ---------------------------------------------------------------- builders


def build_geometry(cfg: ScenarioConfig) -> CavityGeometry:
    g = cfg.geometry
    kind = g.kind
    if kind == "plates1d":
        raise ConfigError("geometry.kind = plates1d has no cavity; use the plates1d subcommand or force")
    if kind == "plate-hemisphere":
        if g.plate_center is None:
            return CavityGeometry.plate_facing_opening(g.radius, g.gap, g.center, g.axis, g.thickness)
        return CavityGeometry(g.radius, g.thickness, FrameTranslation(g.center), CavityKind.PLATE_HEMISPHERE,
                              np.array(g.axis), (g.plate_theta, g.plate_phi), FrameTranslation(g.plate_center))
    return CavityGeometry(g.radius, g.thickness, FrameTranslation(g.center), CavityKind(kind), np.array(g.axis))


def build_ray(cfg: ScenarioConfig) -> RayState:
    direction = cfg.ray.direction if cfg.ray.direction is not None else cfg.geometry.axis
    return RayState(np.array(cfg.ray.origin), np.array(direction))


def build_regularization(cfg: ScenarioConfig) -> Regularization:
    m = cfg.modes
    return Regularization(m.eps0, m.levels, m.ratio, m.rtol)


def build_quadrature(cfg: ScenarioConfig) -> QuadratureSpec:
    q = cfg.quadrature
    return QuadratureSpec(q.nodes, q.seed, q.sequence)


def _region_quantization(region) -> dyn.FieldQuantization:
    return dyn.FieldQuantization(occupation=region.occupation, mode_numbers=(region.mode, 0, 0),
                                 lengths=(region.length, 1.0, 1.0), mode_cutoff=region.cutoff)


def build_plate_system(cfg: ScenarioConfig):
    """Plate system plus an optional time-dependent drive function.

    Returns ``(system, drive, info)`` where ``drive`` is None for a constant
    drive and ``info`` records the derived coefficients.
    """
    d = cfg.dynamics
    hbar, c = unit_constants(cfg.units)
    signs = dyn.PlateSigns(*d.signs)
    amplitude = d.drive.amplitude if d.drive.kind != "zero" else 0.0
    xi_lp = d.xi_lp if d.drive.kind != "zero" else 0.0
    info: dict = {}
    velocities = d.initial_velocities
    if d.coefficients == "regions":
        quants = [_region_quantization(r) for r in d.regions]
        couplings = [dyn.region_coupling(q, hbar, c) for q in quants]
        base = dyn.plate_coefficients(couplings, d.masses, signs, driver_velocity=1.0)
        rp_gain = base.drive[0]
        lp_drive = base.drive[1] if d.drive.kind != "zero" else 0.0
        eta = base.eta
        info["couplings"] = couplings
        if velocities is None:
            energies = [dyn.energy_bounded(q, hbar, c) for q in quants]
            velocities = dyn.initial_velocities(energies, d.masses, c)
            info["region_energies"] = energies
    else:
        if d.coefficients == "explicit":
            eta = tuple(d.eta)
        else:
            rng = np.random.default_rng(cfg.quadrature.seed)
            eta = tuple(float(v) for v in rng.uniform(-d.eta_scale, d.eta_scale, 4))
        rp_gain = 1.0
        lp_drive = xi_lp
    if velocities is None:
        velocities = (0.0, 0.0)
    constant_rp = rp_gain * amplitude if d.drive.kind == "constant" else 0.0
    system = dyn.PlateSystem1D(d.masses, eta, (constant_rp, lp_drive), signs,
                               (*d.initial_positions, *velocities))
    drive = None
    if d.drive.kind == "sine":
        omega = d.drive.omega
        drive = lambda t: (rp_gain * amplitude * math.sin(omega * t), lp_drive)  # noqa: E731
    info["eta"] = list(eta)
    info["drive_constant"] = list(system.drive)
    info["initial_velocities"] = list(velocities)
    return system, drive, info


def sample_times(t0: float, t1: float, dt: float) -> np.ndarray:
    """``t0, t0 + dt, ...`` up to and including ``t1`` (within rounding)."""
    steps = int(math.floor((t1 - t0) / dt + 1e-9))
    times = t0 + dt * np.arange(steps + 1)
    if t1 - times[-1] > 1e-9 * max(1.0, abs(t1)):
        times = np.append(times, t1)
    return times


# ---------------------------------------------------------------- runners
# Each runner returns (header, rows, summary).


def run_trace(cfg: ScenarioConfig, verify: bool = False):
    ray = build_ray(cfg)
    r = cfg.geometry.radius
    header = ["index", "event", "x", "y", "z", "theta_inc", "chord", "xi"]
    if verify:
        header.append("closed_form_deviation")
    rows = []
    summary: dict = {}
    if cfg.geometry.kind == "sphere":
        trace = trace_iterative(ray, r, cfg.ray.reflections)
        for i, point in enumerate(trace.points):
            row = [i + 1, "strike", *point, trace.incidence_angles[i], trace.chord_length,
                   trace.parameter_values[i]]
            if verify:
                row.append(norm(closed_form_nth_point(ray, r, i + 1) - point))
            rows.append(row)
        summary.update(cycle=trace.cycle, chord_length=trace.chord_length, reflections=len(trace))
    elif cfg.geometry.kind in ("hemisphere", "plate-hemisphere"):
        geom = build_geometry(cfg)
        trace = trace_hemisphere(ray, geom)
        for i, point in enumerate(trace.points):
            chord = norm(trace.points[i + 1] - point) if i + 1 < trace.count else norm(trace.exit_point - point)
            row = [i + 1, "strike", *point, trace.incidence_angles[i], chord, trace.parameter_values[i]]
            if verify:
                row.append(norm(closed_form_nth_point(ray, r, i + 1) - point))
            rows.append(row)
        exit_row = [trace.count + 1, "exit", *trace.exit_point, float("nan"), float("nan"),
                    norm(trace.exit_point - trace.points[-1])]
        if verify:
            exit_row.append(float("nan"))
        rows.append(exit_row)
        cls = classify_reflection(ray, geom)
        summary.update(reflections=trace.count, max_reflections=cls.max_reflections,
                       reflection_class=cls.reflection_class.value, exit_direction=list(trace.exit_direction))
    else:
        raise ConfigError(f"trace needs a sphere or hemisphere geometry, got {cfg.geometry.kind}")
    return header, rows, summary


def run_classify(cfg: ScenarioConfig, verify: bool = False):
    if cfg.geometry.kind not in ("hemisphere", "plate-hemisphere"):
        raise ConfigError(f"classify needs a hemisphere or plate-hemisphere geometry, got {cfg.geometry.kind}")
    geom = build_geometry(cfg)
    origins, directions = cavity_nodes(build_quadrature(cfg), geom.inner_radius, geom.axis, symmetric=False)
    plate = geom.kind is CavityKind.PLATE_HEMISPHERE
    header = ["index", "x0", "y0", "z0", "kx", "ky", "kz", "max_reflections", "z_value", "boundary",
              "reflection_class", "exit_crossing_norm"]
    if plate:
        header += ["reentry"]
    if verify:
        header += ["brute_force_reflections"]
    rows = []
    counts = {"single": 0, "multiple": 0, "boundary": 0}
    for i, (o, d) in enumerate(zip(origins, directions)):
        ray = RayState(o, d)
        cls = classify_reflection(ray, geom)
        counts[cls.reflection_class.value] += 1
        counts["boundary"] += int(cls.boundary)
        row = [i, *ray.origin, *ray.direction, cls.max_reflections, cls.z_value, int(cls.boundary),
               cls.reflection_class.value, cls.exit_crossing_norm]
        if plate:
            leaving = exit_ray(ray, geom)
            try:
                hit = plate_reflection_point(leaving, geom)
                row.append(reentry_check(hit, leaving, geom).value)
            except CavityForceError:
                row.append("misses-plate")
        if verify:
            row.append(trace_hemisphere(ray, geom).count)
        rows.append(row)
    return header, rows, {"counts": counts}


def _force_si_scale(cfg: ScenarioConfig) -> float:
    hbar, c = unit_constants(cfg.units)
    return hbar * c


def run_force(cfg: ScenarioConfig, verify: bool = False, workers: int = 1):
    reg = build_regularization(cfg)
    if cfg.geometry.kind == "plates1d":
        return run_plates1d(cfg, verify)
    geom = build_geometry(cfg)
    scale = _force_si_scale(cfg)
    result = total_force(geom, build_quadrature(cfg), time_normalization=cfg.modes.time_normalization,
                         reg=reg, workers=workers)
    table = result.node_table.copy()
    table[:, 8] *= scale
    table[:, 9] *= scale
    header = ["index", *NODE_COLUMNS]
    rows = [[i, *row[:-1], int(row[-1])] for i, row in enumerate(table)]
    radial = np.abs(result.node_table[:, 8])
    summary = {
        "node_count": result.node_count,
        "skipped": result.skipped,
        "net_vector": [v * scale for v in result.net_vector],
        "mean_radial_stress": result.mean_radial_stress * scale,
        "mean_closed_form": result.closed_form * scale,
        "mean_abs_radial_contribution": float(math.fsum(radial) / len(radial)) * scale,
        "raw_sum_part": result.raw_sum_part,
        "integral_part": result.integral_part,
        "regularized": result.regularized,
        "notes": list(result.notes),
    }
    if verify:
        q = cfg.quadrature
        refined = total_force(geom, QuadratureSpec(2 * q.nodes, q.seed, q.sequence),
                              time_normalization=cfg.modes.time_normalization, reg=reg, workers=workers)
        change = abs(refined.mean_radial_stress - result.mean_radial_stress) / abs(result.mean_radial_stress)
        summary["refined_mean_radial_stress"] = refined.mean_radial_stress * scale
        summary["refinement_relative_change"] = change
    return header, rows, summary


def run_plates1d(cfg: ScenarioConfig, verify: bool = False):
    reg = build_regularization(cfg)
    hbar, c = unit_constants(cfg.units)
    gap = cfg.geometry.gap if cfg.geometry.gap is not None else 1.0
    force = parallel_plate_force_1d(gap, hbar, c, reg)
    closed = -math.pi * hbar * c / (24.0 * gap * gap)
    normal = per_direction_force(ModeGeometry(gap, 0.0, cfg.modes.cutoff), reg=reg)
    zeta = regularized_zeta_sum(reg)
    header = ["gap", "energy", "force", "closed_form", "relative_error", "raw_sum_part", "integral_part"]
    rows = [[gap, force * gap, force, closed, abs(force - closed) / abs(closed),
             normal.raw_sum_part, normal.integral_part]]
    summary = {
        "force": force,
        "regularized_zeta_sum": zeta.value,
        "cutoff_eps": list(zeta.eps),
        "cutoff_values": list(zeta.raw_levels),
        "extrapolation_diagonal": list(zeta.diagonal),
    }
    return header, rows, summary


def run_dyncas(cfg: ScenarioConfig, verify: bool = False, method: Optional[str] = None):
    d = cfg.dynamics
    system, drive, info = build_plate_system(cfg)
    times = sample_times(d.t0, d.t1, d.dt)
    method = method or d.method
    series = dyn.plate_time_series(system, d.t0, times, drive, method)
    header = ["t", "R1", "R2", "v1", "v2"]
    summary = dict(info)
    summary["method"] = method
    if verify:
        header.append("residual")
        ref = dyn.reference_trajectory(system, d.t0, times, drive)
        # Relative to the largest state magnitude along the reference trajectory.
        scale = float(np.max(np.abs(ref[:, 1:]))) or 1.0
        residual = np.max(np.abs(series[:, 1:] - ref[:, 1:]), axis=1) / scale
        series = np.column_stack([series, residual])
        summary["max_residual"] = float(residual.max())
    return header, series.tolist(), summary


# ---------------------------------------------------------------- output


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % (float(value) + 0.0)
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def provenance(cfg: ScenarioConfig) -> dict:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return {"version": package_version(), "seed": cfg.quadrature.seed,
            "timestamp": int(epoch) if epoch and epoch.isdigit() else None}


def result_record(command: str, cfg: ScenarioConfig, summary: dict) -> str:
    record = {"command": command, "config": cfg.to_dict(), "summary": summary, "provenance": provenance(cfg)}
    return json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario file")
    common.add_argument("--seed", type=int, help="quadrature and coefficient seed (unsigned 64-bit)")
    common.add_argument("--nodes", type=int, help="number of quadrature nodes")
    common.add_argument("--units", choices=("natural", "si"), help="unit system for reported values")
    common.add_argument("--verify", action="store_true", help="add oracle comparison columns or summaries")
    common.add_argument("--out", help="CSV output path; metadata goes to <out>.meta.json")
    common.add_argument("--geometry", choices=("sphere", "hemisphere", "plate-hemisphere", "plates1d"))
    common.add_argument("--radius", type=float, help="inner cavity radius")
    common.add_argument("--gap", type=float, help="plate gap")
    common.add_argument("--workers", type=int, default=1, help="threads for quadrature nodes")
    common.add_argument("--method", choices=dyn.EVOLVE_METHODS, help="plate evolution method")

    parser = argparse.ArgumentParser(prog="cavityforce", description="Vacuum-field reflection and Casimir force tools.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("trace", "trace one ray through a sphere or hemisphere"),
                       ("classify", "classify seeded hemisphere entries"),
                       ("force", "Casimir force over a cavity or between plates"),
                       ("plates1d", "parallel-plate regularized force"),
                       ("dyncas", "driven two-plate time series")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg = cfg.replace("quadrature", seed=args.seed)
    if args.nodes is not None:
        cfg = cfg.replace("quadrature", nodes=args.nodes)
    if args.units is not None:
        cfg = cfg.replace(units=args.units)
    geometry_changes = {}
    if args.geometry is not None:
        geometry_changes["kind"] = args.geometry
    if args.radius is not None:
        geometry_changes["radius"] = args.radius
    if args.gap is not None:
        geometry_changes["gap"] = args.gap
    if geometry_changes:
        cfg = cfg.replace("geometry", **geometry_changes)
    if args.method is not None:
        cfg = cfg.replace("dynamics", method=args.method)
    return cfg


def execute(command: str, cfg: ScenarioConfig, verify: bool = False, workers: int = 1):
    if command == "trace":
        return run_trace(cfg, verify)
    if command == "classify":
        return run_classify(cfg, verify)
    if command == "force":
        return run_force(cfg, verify, workers)
    if command == "plates1d":
        return run_plates1d(cfg, verify)
    if command == "dyncas":
        return run_dyncas(cfg, verify)
    raise ConfigError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig().validate()
        cfg = apply_overrides(cfg, args)
        if args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        header, rows, summary = execute(args.command, cfg, args.verify, args.workers)
    except CavityForceError as exc:
        print(f"cavityforce: error: {exc}", file=sys.stderr)
        return exc.exit_code
    table = render_csv(header, rows)
    record = result_record(args.command, cfg, summary)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(table)
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(record)
    else:
        sys.stdout.write(table)
        sys.stderr.write(record)
    return 0


if __name__ == "__main__":
    sys.exit(main())
