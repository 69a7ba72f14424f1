import csv
import io
import json
import math
import shutil
import subprocess
import sys

import pytest
import yaml

from cavityforce.cli import format_cell, main, sample_times


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    if code != 0:
        return code, None, None
    rows = list(csv.reader(io.StringIO(out.read_text())))
    meta = json.loads((tmp_path / (name + ".meta.json")).read_text())
    return code, rows, meta


def write_config(tmp_path, data, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_format_cell():
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(-0.0) == "0"
    assert format_cell(3) == "3"
    assert format_cell(True) == "1"
    assert format_cell("single") == "single"


def test_sample_times_inclusive():
    times = sample_times(0.0, 1.0, 0.1)
    assert len(times) == 11 and times[-1] == pytest.approx(1.0)
    assert sample_times(0.0, 1.0, 0.3)[-1] == 1.0


def test_trace_sphere_radial_ray(tmp_path):
    code, rows, meta = run(tmp_path, "trace", "--geometry", "sphere")
    assert code == 0
    assert rows[0] == ["index", "event", "x", "y", "z", "theta_inc", "chord", "xi"]
    assert len(rows) == 3
    assert [float(v) for v in rows[1][2:5]] == [0.0, 1.0, 0.0]
    assert [float(v) for v in rows[2][2:5]] == [0.0, -1.0, 0.0]
    assert meta["summary"]["cycle"] is True


def test_trace_hemisphere_axial_entry(tmp_path):
    code, rows, _ = run(tmp_path, "trace", "--geometry", "hemisphere", "--verify")
    assert code == 0
    assert [r[1] for r in rows[1:]] == ["strike", "exit"]
    assert float(rows[1][-1]) == 0.0


def test_trace_sphere_verify_column(tmp_path):
    cfg = write_config(tmp_path, {"ray": {"origin": [0.1, 0.2, -0.3], "direction": [0.3, -0.5, 0.8],
                                          "reflections": 10}})
    code, rows, _ = run(tmp_path, "trace", "--config", cfg, "--verify")
    assert code == 0 and len(rows) == 11
    assert max(float(r[-1]) for r in rows[1:]) < 1e-9


def test_classify_with_plate(tmp_path):
    code, rows, meta = run(tmp_path, "classify", "--geometry", "plate-hemisphere", "--gap", "0.3",
                           "--nodes", "32", "--verify")
    assert code == 0
    header = rows[0]
    assert "reentry" in header and "brute_force_reflections" in header
    i_max, i_bf = header.index("max_reflections"), header.index("brute_force_reflections")
    i_b = header.index("boundary")
    for row in rows[1:]:
        if row[i_b] == "0":
            assert row[i_max] == row[i_bf]
    counts = meta["summary"]["counts"]
    assert counts["single"] + counts["multiple"] == 32


def test_force_plates1d(tmp_path):
    code, rows, _ = run(tmp_path, "force", "--geometry", "plates1d", "--gap", "1")
    assert code == 0
    force = float(rows[1][rows[0].index("force")])
    assert force == pytest.approx(-math.pi / 24, rel=1e-3)


def test_plates1d_subcommand_si(tmp_path):
    code, rows, meta = run(tmp_path, "plates1d", "--gap", "1e-6", "--units", "si")
    assert code == 0
    assert float(rows[1][rows[0].index("relative_error")]) < 1e-6
    assert meta["config"]["units"] == "si"


def test_force_sphere_symmetry_and_refinement(tmp_path):
    code, rows, meta = run(tmp_path, "force", "--geometry", "sphere", "--nodes", "256", "--verify")
    assert code == 0
    summary = meta["summary"]
    assert math.hypot(*summary["net_vector"]) < 1e-6 * summary["mean_abs_radial_contribution"]
    assert summary["mean_radial_stress"] < 0
    assert summary["refinement_relative_change"] < 0.01
    assert len(rows) == 257
    header = rows[0]
    assert "closed_form" in header


def test_force_workers_identical(tmp_path):
    _, a, _ = run(tmp_path, "force", "--geometry", "hemisphere", "--nodes", "128", name="a.csv")
    _, b, _ = run(tmp_path, "force", "--geometry", "hemisphere", "--nodes", "128", "--workers", "3", name="b.csv")
    assert a == b


def test_force_si_scaling(tmp_path):
    _, nat, _ = run(tmp_path, "force", "--nodes", "16", name="n.csv")
    _, si, _ = run(tmp_path, "force", "--nodes", "16", "--units", "si", name="s.csv")
    i = nat[0].index("force")
    ratio = float(si[1][i]) / float(nat[1][i])
    assert ratio == pytest.approx(1.054571817e-34 * 299792458.0, rel=1e-9)


def test_dyncas_verify_residual(tmp_path):
    code, rows, meta = run(tmp_path, "dyncas", "--verify", "--seed", "11")
    assert code == 0
    assert rows[0] == ["t", "R1", "R2", "v1", "v2", "residual"]
    assert max(float(r[-1]) for r in rows[1:]) < 1e-6
    assert meta["summary"]["max_residual"] < 1e-6


def test_dyncas_zero_drive_constant(tmp_path):
    cfg = write_config(tmp_path, {"dynamics": {"drive": {"kind": "zero"}, "initial_positions": [0.5, -0.5]}})
    code, rows, _ = run(tmp_path, "dyncas", "--config", cfg)
    assert code == 0
    assert {tuple(r[1:]) for r in rows[1:]} == {("0.5", "-0.5", "0", "0")}


def test_dyncas_regions_sine_si(tmp_path):
    cfg = write_config(tmp_path, {
        "units": "si",
        "dynamics": {"coefficients": "regions",
                     "regions": [{"mode": 1, "length": 1.0}, {"mode": 2, "length": 0.5}, {"mode": 1, "length": 2.0}],
                     "drive": {"kind": "sine", "amplitude": 1.0, "omega": 3.0}, "t1": 0.5},
    })
    code, rows, meta = run(tmp_path, "dyncas", "--config", cfg, "--verify")
    assert code == 0
    assert max(float(r[-1]) for r in rows[1:]) < 1e-6
    assert len(meta["summary"]["couplings"]) == 3


def test_exit_codes(tmp_path, capsys):
    assert main(["trace", "--radius", "-1"]) == 2
    assert "geometry.radius must be positive" in capsys.readouterr().err
    degenerate = write_config(tmp_path, {"dynamics": {"coefficients": "explicit", "eta": [0, 0, 0, 0]}})
    assert main(["dyncas", "--config", degenerate]) == 4
    assert "eta" in capsys.readouterr().err
    assert main(["dyncas", "--config", degenerate, "--method", "auto"]) == 0
    capsys.readouterr()
    bad_reg = write_config(tmp_path, {"modes": {"eps0": 1.5, "levels": 2, "ratio": 1.1, "rtol": 1e-14}},
                           name="reg.yaml")
    assert main(["plates1d", "--config", bad_reg]) == 3
    assert main(["trace", "--seed", str(2**64)]) == 2
    assert main(["force", "--workers", "0"]) == 2
    outside = write_config(tmp_path, {"geometry": {"kind": "hemisphere"}, "ray": {"origin": [0.5, 0.2, 0.0]}},
                           name="outside.yaml")
    assert main(["trace", "--config", outside]) == 2


def test_stdout_mode(capsys):
    assert main(["trace"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("index,event")
    assert json.loads(captured.err)["command"] == "trace"


def test_meta_records_provenance(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    _, _, meta = run(tmp_path, "trace", "--seed", "5")
    assert meta["provenance"] == {"seed": 5, "timestamp": 1700000000, "version": meta["provenance"]["version"]}
    assert meta["config"]["quadrature"]["seed"] == 5


@pytest.mark.skipif(shutil.which("cavityforce") is None, reason="console script not installed")
def test_console_script_runs(tmp_path):
    out = tmp_path / "p.csv"
    proc = subprocess.run(["cavityforce", "plates1d", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.read_text().startswith("gap,energy,force")


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "cavityforce.cli", "plates1d", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
