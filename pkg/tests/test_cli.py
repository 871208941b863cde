"""End-to-end command-line checks through real subprocesses."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from heislab import fields, plate, wedge


def run_cli(*argv, stdin_text=None):
    return subprocess.run(
        [sys.executable, "-m", "heislab.cli", *argv],
        capture_output=True,
        text=True,
        input=stdin_text,
        env=os.environ.copy(),
        timeout=300,
    )


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


BUMP_CFG = {
    "n": 2,
    "points": 17,
    "extent": 1.0,
    "boundary": {"family": "bump", "params": {"eps": 0.3, "width": 0.5}},
}


def test_version_string():
    out = run_cli("--version")
    assert out.returncode == 0
    assert out.stdout.strip() == "heislab 0.1.0 (schema 1)"


def test_selftest_passes():
    out = run_cli("selftest")
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    assert payload["failed"] == 0
    assert payload["passed"] == len(payload["checks"])
    assert "selftest:" in out.stderr


def test_gauge_known_value():
    out = run_cli("gauge", "--point", "1,0,0,1,0.5")
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    # |z|^4 = 4 and 16 phi^2 = 4, so the gauge is 8^(1/4).
    assert payload["gauge"] == pytest.approx(8.0 ** 0.25, rel=1e-12)
    assert payload["n"] == 2


def test_gauge_distance_to_self_is_zero():
    out = run_cli("gauge", "--point", "1,2,0.5,-1,0.25", "--relative-to", "1,2,0.5,-1,0.25")
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    assert payload["distance"] == 0.0


def test_gauge_rejects_malformed_point():
    out = run_cli("gauge", "--point", "1,2")
    assert out.returncode == 1
    assert out.stdout == ""
    assert "error" in out.stderr


def test_solve_plate_field_round_trip(tmp_path):
    cfg = dict(BUMP_CFG)
    path = write_config(tmp_path, "plate.json", cfg)
    out = run_cli("solve-plate", "--config", path)
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    assert payload["residual"] < 1e-10
    u = fields.ScalarField.from_json_dict(payload["field"])
    coeffs = plate.compute_coefficients(wedge.identity_metric(2), 2)
    assert plate.energy(coeffs, u) == pytest.approx(payload["energy"], rel=1e-12)
    assert "solve-plate:" in out.stderr


def test_minimize_zero_data_reports_box_volume(tmp_path):
    cfg = {
        "n": 2,
        "points": 17,
        "extent": 1.0,
        "boundary": {"family": "zero"},
    }
    path = write_config(tmp_path, "min.json", cfg)
    out = run_cli("minimize", "--config", path)
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    assert payload["converged"] is True
    # Interior-node quadrature: the measured box is (P-2)h on a side.
    assert payload["final_area"] == pytest.approx((15 * 0.125) ** 2, rel=1e-12)


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["grid"] = 33
    path = write_config(tmp_path, "bad.json", cfg)
    out = run_cli("minimize", "--config", path)
    assert out.returncode == 1
    assert out.stdout == ""
    assert "unknown config keys: grid" in out.stderr


def test_unknown_family_is_rejected(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["boundary"] = {"family": "ripple"}
    path = write_config(tmp_path, "bad2.json", cfg)
    out = run_cli("solve-plate", "--config", path)
    assert out.returncode == 1
    assert "error" in out.stderr


def test_nonconvergence_exit_code(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["max_iterations"] = 0
    path = write_config(tmp_path, "noconv.json", cfg)
    out = run_cli("minimize", "--config", path)
    assert out.returncode == 2
    payload = json.loads(out.stdout)
    assert payload["converged"] is False


def test_config_from_stdin():
    out = run_cli("minimize", "--config", "-", stdin_text=json.dumps(BUMP_CFG))
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout)["converged"] is True


def test_excess_breakdown_fields(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["radius"] = 0.4
    cfg["refine"] = 4
    path = write_config(tmp_path, "exc.json", cfg)
    out = run_cli("excess", "--config", path)
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    rel = abs(payload["tilt_form"] - payload["deficit_quad"]) / payload["tilt_form"]
    assert rel < 1e-12


def test_decay_csv_output(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["radii"] = [0.4, 0.2]
    cfg["refine"] = 4
    path = write_config(tmp_path, "dec.json", cfg)
    target = tmp_path / "decay.csv"
    out = run_cli("decay", "--config", path, "--output", str(target))
    assert out.returncode == 0, out.stderr
    # Data went to the file, so the summary takes stdout.
    assert "decay:" in out.stdout
    header = target.read_text(encoding="utf-8").splitlines()[0]
    assert header == "radius,excess_pi0,excess_best,A_00,A_01,A_10,A_11,q_osc,phi_osc"


def test_decay_json_without_csv_suffix(tmp_path):
    cfg = dict(BUMP_CFG)
    cfg["radii"] = [0.4, 0.2]
    cfg["refine"] = 4
    path = write_config(tmp_path, "dec2.json", cfg)
    out = run_cli("decay", "--config", path)
    assert out.returncode == 0, out.stderr
    payload = json.loads(out.stdout)
    assert payload["command"] == "decay"
    assert len(payload["radii"]) == 2


def test_torus_ratio_deterministic_across_threads(tmp_path):
    argv = ("torus-ratio", "--n", "3", "--radii", "0.5,1.0", "--samples", "20000", "--seed", "5")
    a = run_cli(*argv, "--threads", "1", "--output", str(tmp_path / "a.csv"))
    b = run_cli(*argv, "--threads", "4", "--output", str(tmp_path / "b.csv"))
    c = run_cli(*argv, "--threads", "1", "--output", str(tmp_path / "c.csv"))
    for out in (a, b, c):
        assert out.returncode == 0, out.stderr
    bytes_a = (tmp_path / "a.csv").read_bytes()
    assert bytes_a == (tmp_path / "b.csv").read_bytes()
    assert bytes_a == (tmp_path / "c.csv").read_bytes()
    lines = bytes_a.decode().splitlines()
    assert lines[0] == "n,r,samples,seed,volume,std_error,ratio"
    assert len(lines) == 3


def test_rerun_is_byte_identical(tmp_path):
    cfg = dict(BUMP_CFG)
    path = write_config(tmp_path, "re.json", cfg)
    one = run_cli("minimize", "--config", path)
    two = run_cli("minimize", "--config", path)
    assert one.stdout == two.stdout


def test_threads_flag_validation():
    out = run_cli("selftest", "--threads", "0")
    assert out.returncode == 1
    assert "threads" in out.stderr
