#!/usr/bin/env python3
"""
End-to-end tests for the command-line entry points and the report files
"""

import os
import re

import pytest

from main import EXIT_BLOWUP, EXIT_CONFIG, EXIT_IO, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_VIOLATIONS, main
from report_manager import read_energy_report, read_manifest

EXAMPLE_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "example_gaussian.cfg")


def outputs(tmp_path, name="run"):
    return [
        "--report", str(tmp_path / f"{name}_energy.csv"),
        "--window-report", str(tmp_path / f"{name}_windows.csv"),
        "--quiet",
    ]


def summary_value(text: str, key: str) -> float:
    return float(re.search(rf"{key}=(\S+)", text).group(1))


def test_zero_data_solve(tmp_path, capsys):
    code = main(["solve", "--rho", "1", "--t-max", "0.1", "--N", "8", "--initial-data", "zero"] + outputs(tmp_path))
    assert code == EXIT_OK
    _, report = read_energy_report(str(tmp_path / "run_energy.csv"))
    assert all(row.N_u == 0.0 and row.sup == 0.0 for row in report.rows)
    assert "status=completed" in capsys.readouterr().out


def test_homogeneous_summary(tmp_path, capsys):
    code = main(["solve", "--rho", "2", "--t-max", "1", "--N", "4", "--initial-data", "constant(1)"] + outputs(tmp_path))
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert summary_value(out, "sup_final") == pytest.approx(3 ** -0.5, abs=1e-4)
    assert summary_value(out, "t_final") == 1.0


def test_config_file_with_flag_override(tmp_path):
    code = main(["solve", EXAMPLE_CONFIG, "--t-max", "0.05"] + outputs(tmp_path))
    assert code == EXIT_OK
    config, report = read_energy_report(str(tmp_path / "run_energy.csv"))
    assert config.t_max == 0.05
    assert config.N == 16
    assert report.rows[-1].t == 0.05


def test_forced_blowup_exit_code(tmp_path):
    code = main(["solve", EXAMPLE_CONFIG, "--blowup-cap-factor", "1e-30"] + outputs(tmp_path))
    assert code == EXIT_BLOWUP


def test_huge_finite_data_exit_code(tmp_path):
    args = ["solve", "--rho", "2", "--t-max", "0.1", "--N", "4", "--initial-data", "constant(1e110)"]
    assert main(args + outputs(tmp_path)) == EXIT_BLOWUP


def test_nonconvergence_exit_code(tmp_path):
    code = main(["solve", EXAMPLE_CONFIG, "--tol", "1e-30", "--max-iter", "2"] + outputs(tmp_path))
    assert code == EXIT_NONCONVERGENCE


def test_config_error_exit_code(tmp_path, capsys):
    code = main(["solve", "--rho", "-1", "--t-max", "1"] + outputs(tmp_path))
    assert code == EXIT_CONFIG
    assert "rho must be > 0" in capsys.readouterr().out


def test_missing_config_file(tmp_path):
    assert main(["solve", str(tmp_path / "absent.cfg")] + outputs(tmp_path)) == EXIT_IO


def test_unwritable_report(tmp_path):
    args = ["solve", "--rho", "1", "--t-max", "0.05", "--N", "8", "--initial-data", "zero",
            "--report", str(tmp_path / "missing_dir" / "energy.csv"),
            "--window-report", str(tmp_path / "windows.csv"), "--quiet"]
    assert main(args) == EXIT_IO


def test_verify_pure_heat_mode(tmp_path):
    args = ["verify", "--rho", "1", "--t-max", "0.5", "--N", "8", "--initial-data", "sine(0, 1, 1.0)", "--linear-only"]
    assert main(args + outputs(tmp_path)) == EXIT_OK


def test_verify_homogeneous(tmp_path):
    args = ["verify", "--rho", "2", "--t-max", "1", "--N", "4", "--initial-data", "constant(1)"]
    assert main(args + outputs(tmp_path)) == EXIT_OK


def test_verify_tampered_report(tmp_path, capsys):
    args = ["solve", "--rho", "1", "--t-max", "0.1", "--N", "8", "--initial-data", "sine(1, 1, 1.0)"]
    assert main(args + outputs(tmp_path)) == EXIT_OK
    path = tmp_path / "run_energy.csv"
    lines = path.read_text(encoding="utf-8").splitlines()
    data = [i for i, line in enumerate(lines) if not line.startswith("#")][1:]
    target = data[len(data) // 2]
    cells = lines[target].split(",")
    cells[1] = repr(float(cells[1]) * 10.0)
    lines[target] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    capsys.readouterr()
    assert main(["verify", "--from-report", str(path), "--quiet"]) == EXIT_VIOLATIONS
    assert "N_u increased" in capsys.readouterr().out


def test_clean_report_reverifies(tmp_path):
    args = ["solve", "--rho", "1", "--t-max", "0.1", "--N", "8", "--initial-data", "sine(1, 1, 1.0)"]
    assert main(args + outputs(tmp_path)) == EXIT_OK
    assert main(["verify", "--from-report", str(tmp_path / "run_energy.csv"), "--quiet"]) == EXIT_OK


def test_reports_are_bit_identical(tmp_path):
    args = ["solve", EXAMPLE_CONFIG] + outputs(tmp_path)
    assert main(args) == EXIT_OK
    first = [(tmp_path / name).read_bytes() for name in ("run_energy.csv", "run_windows.csv")]
    assert main(args) == EXIT_OK
    second = [(tmp_path / name).read_bytes() for name in ("run_energy.csv", "run_windows.csv")]
    assert first == second


def test_snapshots_and_energy_report(tmp_path):
    snapshots = tmp_path / "snaps"
    args = ["solve", EXAMPLE_CONFIG, "--t-max", "0.1", "--snapshot-dir", str(snapshots)] + outputs(tmp_path)
    assert main(args) == EXIT_OK
    entries = read_manifest(str(snapshots))
    windows = (tmp_path / "run_windows.csv").read_text(encoding="utf-8").splitlines()
    window_rows = [line for line in windows if not line.startswith("#")][1:]
    assert len(entries) == len(window_rows) + 1
    assert entries[0][1] == 0.0
    assert entries[-1][1] == 0.1
    assert main(["energy-report", str(snapshots), "--rho", "1", "--report", str(tmp_path / "re.csv"), "--quiet"]) == EXIT_OK
    _, recomputed = read_energy_report(str(tmp_path / "re.csv"))
    assert len(recomputed.rows) == len(entries)


def test_oracle_compare(tmp_path):
    base = ["oracle-compare", "--rho", "1", "--t-max", "0.1", "--N", "16",
            "--initial-data", "gaussian_bump(1.0, 1.0)", "--fd-dt", "1e-3", "--quiet"]
    assert main(base + ["--max-diff", "2e-2"]) == EXIT_OK
    assert main(base + ["--max-diff", "1e-12"]) == EXIT_VIOLATIONS


def test_verify_report_with_garbage_cell(tmp_path, capsys):
    args = ["solve", "--rho", "1", "--t-max", "0.1", "--N", "8", "--initial-data", "sine(1, 1, 1.0)"]
    assert main(args + outputs(tmp_path)) == EXIT_OK
    path = tmp_path / "run_energy.csv"
    lines = path.read_text(encoding="utf-8").splitlines()
    target = [i for i, line in enumerate(lines) if not line.startswith("#")][2]
    cells = lines[target].split(",")
    cells[1] = "oops"
    lines[target] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    capsys.readouterr()
    assert main(["verify", "--from-report", str(path), "--quiet"]) == EXIT_VIOLATIONS
    assert "malformed report" in capsys.readouterr().out


def test_energy_report_with_broken_manifest(tmp_path):
    snapshots = tmp_path / "snaps"
    args = ["solve", EXAMPLE_CONFIG, "--t-max", "0.05", "--snapshot-dir", str(snapshots)] + outputs(tmp_path)
    assert main(args) == EXIT_OK
    (snapshots / "manifest.csv").write_text("index,t,file\nzero,0.0,snap.bin\n", encoding="utf-8")
    assert main(["energy-report", str(snapshots), "--rho", "1", "--quiet"]) == EXIT_IO
