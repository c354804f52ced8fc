#!/usr/bin/env python3
"""
Main script for the semilinear heat solver
Handles command line arguments and dispatches the solve, verify, oracle-compare
and energy-report subcommands
"""

import argparse
import os
import sys
from typing import Dict, List, Optional, Tuple

from dotenv import load_dotenv

from continuation import BLOWUP_SUSPECTED, NONCONVERGENCE, GlobalRun, GlobalSolver
from diagnostics import EnergyMonitor, EnergyReport, monotone_energy_violations, verification_violations
from field_core import RealField, boundary_shell_max, sup_norm
from oracle_fd import FDConfig, fd_solve, stability_limit
from report_manager import ReportManager, read_energy_report, read_manifest, summary_line
from run_config import InitialData, RunConfig, parse_config
from solver_errors import ConfigError, ReportFormatError, SnapshotFormatError, SolverError

load_dotenv()

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_BLOWUP = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4
EXIT_CONFIG = 5

BOUNDARY_WARNING_FRACTION = 1e-6
DEFAULT_MAX_DIFF = 5e-3


def exit_code_for(run: GlobalRun) -> int:
    if run.status == BLOWUP_SUSPECTED:
        return EXIT_BLOWUP
    if run.status == NONCONVERGENCE:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def warn_boundary(config: RunConfig, u0: RealField) -> None:
    """Decaying data should be negligible on the box faces, or the periodic box distorts it"""
    if InitialData.parse(config.initial_data).kind != "gaussian_bump":
        return
    shell = boundary_shell_max(u0)
    if shell > BOUNDARY_WARNING_FRACTION * sup_norm(u0):
        print(f"⚠️  Warning: initial data reaches {shell:.3e} on the box boundary; enlarge L or narrow the bump")


def _solve(config: RunConfig, verbose: bool) -> Tuple[int, Optional[GlobalRun], Optional[EnergyReport]]:
    u0 = config.initial_field()
    warn_boundary(config, u0)
    reports = ReportManager(config, verbose=verbose)
    callback = reports.snapshot_callback if config.snapshot_dir else None
    solver = GlobalSolver(config.solver_config(), verbose=verbose, window_callback=callback)
    try:
        if config.snapshot_dir:
            reports.write_field_snapshot(0, 0.0, u0)
        run, energy = solver.solve(u0)
        reports.write_energy_report(config.report, energy)
        reports.write_window_report(config.window_report, run)
        if config.snapshot_dir:
            reports.write_manifest()
    except OSError as e:
        print(f"❌ I/O failure: {e}")
        return EXIT_IO, None, None
    print(summary_line(run, energy))
    return exit_code_for(run), run, energy


def run_solve(config: RunConfig, verbose: bool = False) -> int:
    """Solve to t_max and write the reports; exit code follows the run status"""
    code, _, _ = _solve(config, verbose)
    return code


def _print_violations(violations: List[str]) -> int:
    if violations:
        print(f"❌ {len(violations)} violation(s):")
        for violation in violations:
            print(f"   - {violation}")
        return EXIT_VIOLATIONS
    print("✅ All checks passed")
    return EXIT_OK


def run_verify(config: Optional[RunConfig], verbose: bool = False, from_report: Optional[str] = None) -> int:
    """
    Solve (or reread a report) and run every energy and sup-norm check.

    Args:
        config (RunConfig, optional): run configuration; optional with from_report when
            the report header carries one
        verbose (bool): per-window progress lines
        from_report (str, optional): energy CSV to check instead of solving

    Returns:
        int: 0 when no check fails, 1 with violations, or the solve exit code
    """
    if from_report:
        try:
            echoed, report = read_energy_report(from_report)
        except OSError as e:
            print(f"❌ I/O failure: {e}")
            return EXIT_IO
        except ReportFormatError as e:
            return _print_violations([f"malformed report: {e}"])
        config = echoed or config
        if config is None:
            print("❌ report header carries no configuration; pass a config file")
            return EXIT_CONFIG
        return _print_violations(verification_violations(report, config.M, sup_check=config.sup_check))

    code, run, energy = _solve(config, verbose)
    if run is None or code != EXIT_OK:
        return code
    return _print_violations(
        verification_violations(energy, config.M, run.sup0, config.sup_check, run.windows)
    )


def run_oracle_compare(
    config: RunConfig,
    fd_dt: Optional[float] = None,
    max_diff: float = DEFAULT_MAX_DIFF,
    verbose: bool = False,
) -> int:
    """Spectral solve against the explicit FD oracle at t_max; exit 1 when sup diff > max_diff"""
    u0 = config.initial_field()
    grid = config.grid()
    run, _ = GlobalSolver(config.solver_config(), verbose=verbose).solve(u0)
    if not run.completed:
        print(f"❌ spectral run stopped: {run.failure}")
        return exit_code_for(run)
    dt = fd_dt if fd_dt is not None else 0.5 * stability_limit(grid)
    fd_field = fd_solve(u0, config.t_max, FDConfig.for_horizon(grid, config.t_max, dt), config.rho,
                        nonlinear=not config.linear_only)
    diff = sup_norm(run.final_field.values - fd_field.values)
    print(f"🔬 spectral vs FD at t={config.t_max:g}: sup diff {diff:.6e} (limit {max_diff:.1e}, dt={dt:.3e})")
    return EXIT_OK if diff <= max_diff else EXIT_VIOLATIONS


def run_energy_report(snapshot_dir: str, rho: float, report_path: Optional[str] = None, verbose: bool = False) -> int:
    """Recompute energy functionals from a snapshot directory and check N_u monotonicity"""
    try:
        entries = read_manifest(snapshot_dir)
    except (OSError, SnapshotFormatError, ReportFormatError) as e:
        print(f"❌ cannot read snapshots: {e}")
        return EXIT_IO
    monitor = EnergyMonitor(rho)
    report = EnergyReport(rho, [monitor.node_row(f, t, index) for index, t, f in entries])
    for row in report.rows:
        print(f"t={row.t:.6g} N_u={row.N_u:.17g} N_grad={row.N_grad:.17g} sup={row.sup:.17g}")
    if report_path:
        try:
            ReportManager(verbose=verbose).write_energy_report(report_path, report)
        except OSError as e:
            print(f"❌ I/O failure: {e}")
            return EXIT_IO
    return _print_violations(monotone_energy_violations(report))


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", help="key = value configuration file")
    for key in RunConfig.model_fields:
        flag = "--" + key.replace("_", "-")
        if key == "linear_only":
            parser.add_argument(flag, dest=key, action="store_const", const="true", default=None,
                                help="switch the absorption term off (pure heat flow)")
        else:
            parser.add_argument(flag, dest=key, type=str, default=None, help=f"override {key}")
    parser.add_argument("--quiet", action="store_true", help="only print the summary")


def load_run_config(args: argparse.Namespace) -> RunConfig:
    text = ""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    overrides: Dict[str, object] = {key: getattr(args, key) for key in RunConfig.model_fields}
    return parse_config(text, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Global solver for u' - Laplacian u + |u|^rho u = 0 on a periodic box"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve to t_max and write the reports")
    add_config_flags(solve)

    verify = commands.add_parser("verify", help="solve and run every energy and sup-norm check")
    add_config_flags(verify)
    verify.add_argument("--from-report", type=str, default=None, help="check an existing energy CSV instead")

    oracle = commands.add_parser("oracle-compare", help="compare against the explicit FD oracle")
    add_config_flags(oracle)
    oracle.add_argument("--fd-dt", type=float, default=None, help="FD step (default: half the stability limit)")
    oracle.add_argument("--max-diff", type=float, default=DEFAULT_MAX_DIFF,
                        help=f"largest accepted sup diff (default: {DEFAULT_MAX_DIFF})")

    energy = commands.add_parser("energy-report", help="recompute energy functionals from snapshots")
    energy.add_argument("snapshot_dir", help="directory holding manifest.csv")
    energy.add_argument("--rho", type=float, required=True, help="exponent of the absorption term")
    energy.add_argument("--report", type=str, default=None, help="write the recomputed rows to this CSV")
    energy.add_argument("--quiet", action="store_true", help="only print the summary")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the solver CLI"""
    args = build_parser().parse_args(argv)
    verbose = not args.quiet and os.getenv("SLHEAT_VERBOSE", "1") != "0"

    if args.command == "energy-report":
        return run_energy_report(args.snapshot_dir, args.rho, args.report, verbose)

    from_report = getattr(args, "from_report", None)
    try:
        config = load_run_config(args)
    except OSError as e:
        print(f"❌ cannot read config: {e}")
        return EXIT_IO
    except ConfigError as e:
        if not from_report:
            print(f"❌ config error: {e}")
            return EXIT_CONFIG
        config = None

    try:
        if args.command == "solve":
            return run_solve(config, verbose)
        if args.command == "verify":
            return run_verify(config, verbose, from_report)
        return run_oracle_compare(config, args.fd_dt, args.max_diff, verbose)
    except ConfigError as e:
        print(f"❌ config error: {e}")
        return EXIT_CONFIG
    except SolverError as e:
        print(f"❌ solver error: {e}")
        return EXIT_VIOLATIONS


if __name__ == "__main__":
    sys.exit(main())
