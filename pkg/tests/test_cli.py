import json
import math
import subprocess
import sys

import pytest

from pushspace import cli, formats
from pushspace.curve_model import CurveSpec, min_curvature_radius, build_curve
from pushspace.verification import run_verification


@pytest.fixture
def tricorner_json(tmp_path):
    path = tmp_path / "tricorner.json"
    formats.write_json(CurveSpec.tricorner(16384).to_dict(), path)
    return path


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    lines = out.strip().splitlines()
    return code, (json.loads(lines[-1]) if lines else None), err


def test_holonomy_command(capsys, tricorner_json):
    code, summary, _ = run(capsys, "holonomy", "--curve", tricorner_json)
    assert code == 0
    assert abs(abs(summary["angle"]) - math.pi / 2) < 1e-6
    assert summary["orbit_order"] == 4


def test_pushout_command(capsys, tricorner_json, tmp_path):
    out = tmp_path / "omega"
    code, summary, _ = run(capsys, "pushout", "--curve", tricorner_json, "--out", out)
    assert code == 0
    for name in ("raster.pgm", "raster.json", "region.svg", "central.csv"):
        assert (out / name).is_file()
    rho = min_curvature_radius(build_curve(CurveSpec.tricorner(16384)))
    assert abs(summary["square_side_estimate"] / (2 * rho) - 1) < 0.05


def test_curve_and_focal_commands(capsys, tmp_path):
    code, summary, _ = run(capsys, "curve", "--curve", "circle", "--samples", 256, "--out", tmp_path)
    assert code == 0 and summary["closed"] and summary["rho"] == pytest.approx(1.0, rel=1e-6)
    assert (tmp_path / "curve.csv").is_file()
    code, summary, _ = run(capsys, "focal", "--curve", "circle", "--samples", 256, "--out", tmp_path)
    assert code == 0 and summary["lines"] == 1
    assert (tmp_path / "lines.csv").is_file()


def test_alpha_flag(capsys):
    code, summary, _ = run(capsys, "holonomy", "--alpha", 0.5, "--samples", 16384)
    assert code == 0
    assert abs(abs(summary["angle"]) - (math.pi / 2 - 0.5)) < 1e-5


def test_tube_command(capsys, tmp_path):
    code, summary, _ = run(capsys, "tube", "--curve", "tricorner", "--samples", 4096, "--step", 8, "--out", tmp_path)
    assert code == 0 and summary["loops_used"] == 1 and summary["closed"]
    assert (tmp_path / "tube.obj").is_file() and (tmp_path / "tube.json").is_file()


def test_config_file_with_settings(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    formats.write_json({"curve": CurveSpec.tricorner(4096).to_dict(), "resolution": 128, "n_theta": 512}, cfg)
    code, summary, _ = run(capsys, "pushout", "--curve", cfg)
    assert code == 0 and summary["resolution"] == 128
    code, summary, _ = run(capsys, "pushout", "--curve", cfg, "--res", 256)
    assert summary["resolution"] == 256


def test_fiber_file(capsys, tmp_path):
    fiber = tmp_path / "fiber.json"
    formats.write_json({"kind": "circle", "radius": 5.0}, fiber)
    code, summary, err = run(capsys, "tube", "--curve", "tricorner", "--samples", 4096, "--fiber", fiber)
    assert code == 1 and summary["error"] == "InvalidFiber"
    assert "InvalidFiber" in err


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["holonomy", "--no-such-flag"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_curve_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["holonomy", "--curve", "does-not-exist.json"])
    assert exc.value.code == 2


def test_domain_error_exit_code(capsys):
    code, summary, err = run(capsys, "holonomy", "--curve", "helix", "--samples", 0)
    assert code == 1 and summary["error"] == "BadSpec" and err.startswith("error: BadSpec")


def test_alpha_out_of_range(capsys):
    code, summary, _ = run(capsys, "holonomy", "--alpha", 2.0)
    assert code == 1 and summary["error"] == "BadSpec"


def test_outputs_deterministic(capsys, tmp_path):
    for run_dir in ("a", "b"):
        run(capsys, "pushout", "--curve", "tricorner", "--samples", 2048, "--res", 128, "--ntheta", 512, "--out", tmp_path / run_dir)
    for name in ("raster.pgm", "raster.json", "region.svg", "central.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_misconfigured_closure_tolerance_fails_by_name():
    report = run_verification(16384, closure_tol=1e-1, only=(1, 6, 9, 11))
    failed = report.failed()
    assert not report.passed
    assert any("irrational shear" in name for name in failed)
    assert any("flagged NotClosed" in name for name in failed)
    assert any("tube closure" in name for name in failed)
    assert not any("tri-corner" in name and "angle" in name for name in failed)
    assert all("runtime" in r for r in report.to_dict()["criteria"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pushspace", "holonomy", "--curve", "circle", "--samples", "128"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["orbit_order"] == 1
