#!/usr/bin/env python3
"""
Report Manager Module
Writes and reads the energy CSV, the window CSV and field snapshots
"""

import csv
import io
import os
from typing import List, Optional, Tuple

from continuation import GlobalRun, WindowRecord
from diagnostics import ENERGY_COLUMNS, EnergyReport, EnergyRow
from field_core import RealField, read_snapshot, write_snapshot
from run_config import RunConfig, config_from_report_header
from solver_errors import ReportFormatError, SnapshotFormatError

WINDOW_COLUMNS = [
    "window_index", "t0", "T", "R", "q", "M", "iterations", "measured_q", "converged",
    "final_diff", "window_sup", "F_bound", "self_map_ok", "ball_ok",
]
MANIFEST_NAME = "manifest.csv"
ENERGY_BANNER = "#! semilinear heat energy report"
WINDOW_BANNER = "#! semilinear heat window report"


def format_real(value: Optional[float]) -> str:
    """17 significant digits; empty for missing values"""
    if value is None:
        return ""
    return format(float(value), ".17g")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_real(value)
    return str(value)


def _header_lines(config: Optional[RunConfig], banner: str) -> List[str]:
    lines = [banner]
    if config is not None:
        lines += [f"# {line}" for line in config.to_text().splitlines()]
    return lines


class ReportManager:
    def __init__(self, config: Optional[RunConfig] = None, verbose: bool = False):
        """
        Initialize the ReportManager.

        Args:
            config (RunConfig, optional): echoed in every report header
            verbose (bool): print a line for every file written
        """
        self.config = config
        self.verbose = verbose
        self.snapshot_dir = config.snapshot_dir if config is not None else ""
        self._manifest: List[Tuple[int, float, str]] = []

    def _log(self, message: str) -> None:
        if self.verbose:
            print(message)

    # Energy report

    def energy_csv_text(self, report: EnergyReport) -> str:
        buffer = io.StringIO()
        for line in _header_lines(self.config, ENERGY_BANNER):
            buffer.write(line + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(ENERGY_COLUMNS)
        for row in report.rows:
            writer.writerow([_format_cell(getattr(row, column)) for column in ENERGY_COLUMNS])
        return buffer.getvalue()

    def write_energy_report(self, path: str, report: EnergyReport) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(self.energy_csv_text(report))
        self._log(f"📝 Energy report written to {path} ({len(report.rows)} rows)")

    # Window report

    def window_csv_text(self, run: GlobalRun) -> str:
        buffer = io.StringIO()
        for line in _header_lines(self.config, WINDOW_BANNER):
            buffer.write(line + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(WINDOW_COLUMNS)
        for record in run.windows:
            writer.writerow([_format_cell(v) for v in window_row(record)])
        return buffer.getvalue()

    def write_window_report(self, path: str, run: GlobalRun) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(self.window_csv_text(run))
        self._log(f"📝 Window report written to {path} ({len(run.windows)} windows)")

    # Snapshots

    def snapshot_path(self, index: int) -> str:
        return os.path.join(self.snapshot_dir, f"snapshot_{index:04d}.bin")

    def write_field_snapshot(self, index: int, t: float, f: RealField) -> str:
        os.makedirs(self.snapshot_dir, exist_ok=True)
        path = self.snapshot_path(index)
        write_snapshot(path, f)
        self._manifest.append((index, t, os.path.basename(path)))
        return path

    def snapshot_callback(self, record: WindowRecord, f: RealField, t: float) -> None:
        """GlobalSolver window callback: snapshot every window end"""
        self.write_field_snapshot(record.index + 1, t, f)

    def write_manifest(self) -> str:
        path = os.path.join(self.snapshot_dir, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["index", "t", "file"])
            for index, t, name in self._manifest:
                writer.writerow([index, format_real(t), name])
        self._log(f"📦 {len(self._manifest)} snapshots listed in {path}")
        return path


def window_row(record: WindowRecord) -> list:
    plan, picard = record.plan, record.report
    return [
        record.index, record.t0, plan.T, plan.R, plan.q, plan.M, picard.iterations,
        picard.measured_q, picard.converged, picard.final_diff, record.window_sup,
        record.F_bound, record.self_map_ok, record.ball_ok,
    ]


def _optional_float(cell: str) -> Optional[float]:
    return float(cell) if cell != "" else None


def parse_energy_report(text: str) -> Tuple[Optional[RunConfig], EnergyReport]:
    """
    Read an energy CSV back.

    Args:
        text (str): file contents, header included

    Returns:
        Tuple[Optional[RunConfig], EnergyReport]: echoed config (None when the header
        has none) and the rows
    """
    lines = text.splitlines()
    header = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    config = None
    if any(not line.startswith("#!") for line in header):
        config = config_from_report_header("\n".join(header))
    reader = csv.DictReader(body)
    missing = [name for name in ENERGY_COLUMNS if name not in (reader.fieldnames or [])]
    if missing:
        raise ReportFormatError(f"energy report lacks column(s): {', '.join(missing)}")
    rows = []
    for number, record in enumerate(reader, start=1):
        try:
            rows.append(EnergyRow(
                t=float(record["t"]),
                N_u=float(record["N_u"]),
                N_grad=float(record["N_grad"]),
                L_rho2=float(record["L_rho2"]),
                sup=float(record["sup"]),
                window_index=int(record["window_index"]),
                balance_residual=_optional_float(record["balance_residual"]),
                holder_lhs=_optional_float(record["holder_lhs"]),
                holder_factor1=_optional_float(record["holder_factor1"]),
                holder_factor2_status=record["holder_factor2_status"] or None,
            ))
        except (TypeError, ValueError) as e:
            raise ReportFormatError(f"energy report data row {number}: {e}") from e
    rho = config.rho if config is not None else 1.0
    return config, EnergyReport(rho, rows)


def read_energy_report(path: str) -> Tuple[Optional[RunConfig], EnergyReport]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_energy_report(handle.read())


def read_manifest(snapshot_dir: str) -> List[Tuple[int, float, RealField]]:
    """Snapshots listed in a manifest, in time order"""
    path = os.path.join(snapshot_dir, MANIFEST_NAME)
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if not {"index", "t", "file"} <= set(reader.fieldnames or []):
            raise ReportFormatError(f"{path} needs the columns index, t, file")
        for number, record in enumerate(reader, start=1):
            try:
                index, t, name = int(record["index"]), float(record["t"]), str(record["file"])
            except (TypeError, ValueError) as e:
                raise ReportFormatError(f"{path} data row {number}: {e}") from e
            try:
                field = read_snapshot(os.path.join(snapshot_dir, name))
            except FileNotFoundError as e:
                raise SnapshotFormatError(f"manifest lists missing snapshot {name}") from e
            entries.append((index, t, field))
    entries.sort(key=lambda entry: entry[1])
    return entries


def summary_line(run: GlobalRun, report: EnergyReport) -> str:
    """One-line run summary: final time, final sup and worst balance residual"""
    residuals = [row.balance_residual for row in report.rows if row.balance_residual is not None]
    worst = max(residuals) if residuals else 0.0
    final_sup = report.rows[-1].sup if report.rows else 0.0
    return (
        f"status={run.status} t_final={format_real(run.final_time)} "
        f"sup_final={format_real(final_sup)} max_balance_residual={worst:.3e} windows={len(run.windows)}"
    )
