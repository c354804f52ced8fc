#!/usr/bin/env python3
"""
Semilinear Heat Package
Global solver for u' - Laplacian u + |u|^rho u = 0 on a periodic box, built from
contraction windows of the Duhamel map, with runtime energy and sup-norm checks
"""

from .field_core import GridSpec, RealField, SpectralField, to_spectral, from_spectral, sup_norm, grid_integral
from .heat_semigroup import HeatSemigroup, apply_semigroup, gaussian_convolve_direct, kernel_mass
from .duhamel_picard import WindowState, PicardReport, apply_Q, solve_window, uniqueness_probe
from .continuation import WindowPlan, GlobalRun, GlobalSolver, BlowupDetector, window_size, global_solve
from .diagnostics import EnergyReport, energy_functionals, balance_residual, apriori_check, holder_monitor
from .oracle_fd import FDConfig, fd_step, fd_solve, homogeneous_exact
from .run_config import RunConfig, parse_config
from .report_manager import ReportManager

__version__ = "1.0.0"
__author__ = "Semilinear Heat Team"

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "to_spectral",
    "from_spectral",
    "sup_norm",
    "grid_integral",
    "HeatSemigroup",
    "apply_semigroup",
    "gaussian_convolve_direct",
    "kernel_mass",
    "WindowState",
    "PicardReport",
    "apply_Q",
    "solve_window",
    "uniqueness_probe",
    "WindowPlan",
    "GlobalRun",
    "GlobalSolver",
    "BlowupDetector",
    "window_size",
    "global_solve",
    "EnergyReport",
    "energy_functionals",
    "balance_residual",
    "apriori_check",
    "holder_monitor",
    "FDConfig",
    "fd_step",
    "fd_solve",
    "homogeneous_exact",
    "RunConfig",
    "parse_config",
    "ReportManager",
]
