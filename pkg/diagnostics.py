#!/usr/bin/env python3
"""
Diagnostics Module
Evaluates the energy identity, its integrated balance, the a-priori bounds and the
Hoelder quantities of the Duhamel term on solved windows

All checks return data (lists of violation strings, reports); none of them raise.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from duhamel_picard import WindowState, duhamel_integral
from field_core import RealField, from_spectral, grid_integral, pairwise_sum, sup_norm, to_spectral
from heat_semigroup import HeatSemigroup, default_semigroup

MONOTONE_TOLERANCE = 1e-10
SUP_TOLERANCE = 1e-8
APRIORI_TOLERANCE = 1e-8
BALANCE_FLOOR = 1e-6
# calibrated on the single-mode pure-heat run: defect ~ (2/3) T^3 k^6 / M^2 with T <= 1, k = 1
BALANCE_CONSTANT = 2.0
DIVERGENT = "DIVERGENT"
FINITE = "FINITE"
HOLDER_CUTOFFS = (1e-2, 1e-4, 1e-6)

ENERGY_COLUMNS = [
    "t", "N_u", "N_grad", "L_rho2", "sup", "window_index",
    "balance_residual", "holder_lhs", "holder_factor1", "holder_factor2_status",
]


@dataclass
class EnergyRow:
    t: float
    N_u: float
    N_grad: float
    L_rho2: float
    sup: float
    window_index: int
    balance_residual: Optional[float] = None
    holder_lhs: Optional[float] = None
    holder_factor1: Optional[float] = None
    holder_factor2_status: Optional[str] = None


@dataclass
class EnergyReport:
    """Per-node energy time series; junction nodes appear once"""

    rho: float
    rows: List[EnergyRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def window_indices(self) -> List[int]:
        return sorted({row.window_index for row in self.rows if row.window_index >= 0})

    def window_slice(self, index: int) -> List[EnergyRow]:
        """Rows of one window, starting from the junction row it shares with its predecessor"""
        positions = [i for i, row in enumerate(self.rows) if row.window_index == index]
        if not positions:
            return []
        start = positions[0] - 1 if positions[0] > 0 else positions[0]
        return self.rows[start:positions[-1] + 1]

    def extend(self, rows: Iterable[EnergyRow]) -> None:
        self.rows.extend(rows)


def energy_functionals(f: RealField, rho: float) -> Tuple[float, float, float, float]:
    """
    Grid quadratures of the energy identity terms.

    Args:
        f (RealField): solution at one node
        rho (float): exponent

    Returns:
        Tuple[float, float, float, float]: (N_u, N_grad, L_rho2, sup) with
        N_u = int u^2, N_grad = int |grad u|^2 (spectral), L_rho2 = int |u|^(rho+2)
    """
    grid = f.grid
    coeffs = to_spectral(f).coeffs
    # rows for runaway data report inf rather than fail
    with np.errstate(over="ignore"):
        N_u = grid_integral(f.values ** 2, grid)
        N_grad = grid.volume * pairwise_sum(grid.wavenumber_squared() * (coeffs.real ** 2 + coeffs.imag ** 2))
        L_rho2 = grid_integral(np.abs(f.values) ** (rho + 2), grid)
    return N_u, N_grad, L_rho2, sup_norm(f)


def trapezoid_integral(t: Sequence[float], y: Sequence[float]) -> float:
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.size < 2:
        return 0.0
    return pairwise_sum(0.5 * np.diff(t) * (y[:-1] + y[1:]))


def balance_residual(rows: Sequence[EnergyRow]) -> float:
    """
    Relative defect of 0.5 N(t_b) + int (N_grad + L_rho2) = 0.5 N(t_a) on a slice.

    Args:
        rows (Sequence[EnergyRow]): at least two consecutive node rows

    Returns:
        float: |defect| / (0.5 N_u(t_a)), or |defect| when N_u(t_a) == 0
    """
    if len(rows) < 2:
        raise ValueError("balance residual needs at least two nodes")
    t = [row.t for row in rows]
    dissipation = [row.N_grad + row.L_rho2 for row in rows]
    start, end = rows[0].N_u, rows[-1].N_u
    defect = abs(0.5 * end + trapezoid_integral(t, dissipation) - 0.5 * start)
    if start == 0.0:
        return defect
    return defect / (0.5 * start)


def balance_threshold(M: int) -> float:
    return max(BALANCE_FLOOR, BALANCE_CONSTANT / M ** 2)


def apriori_check(report: EnergyReport, N_u0: Optional[float] = None, tol: float = APRIORI_TOLERANCE) -> List[str]:
    """
    Bounds implied by the integrated balance.

    (a) N_u(t) <= N_u(0); (b) int N_grad <= 0.5 N_u(0); (c) int L_rho2 <= 0.5 N_u(0),
    each with a (1 + tol) allowance.

    Args:
        report (EnergyReport): complete run
        N_u0 (float, optional): reference N_u(0); defaults to the first row
        tol (float): relative allowance

    Returns:
        List[str]: violation messages, empty on success
    """
    if not report.rows:
        return ["energy report is empty"]
    if N_u0 is None:
        N_u0 = report.rows[0].N_u
    violations = []
    bound = N_u0 * (1.0 + tol)
    for row in report.rows:
        if row.N_u > bound:
            violations.append(f"(a) N_u({row.t:.6g}) = {row.N_u:.17g} exceeds N_u(0) = {N_u0:.17g}")
    t = report.times
    half = 0.5 * N_u0 * (1.0 + tol)
    grad_integral = trapezoid_integral(t, report.column("N_grad"))
    if grad_integral > half:
        violations.append(f"(b) int N_grad dt = {grad_integral:.17g} exceeds 0.5 N_u(0) = {0.5 * N_u0:.17g}")
    absorption_integral = trapezoid_integral(t, report.column("L_rho2"))
    if absorption_integral > half:
        violations.append(f"(c) int L_rho2 dt = {absorption_integral:.17g} exceeds 0.5 N_u(0) = {0.5 * N_u0:.17g}")
    return violations


def monotone_energy_violations(report: EnergyReport, tol: float = MONOTONE_TOLERANCE) -> List[str]:
    violations = []
    for previous, current in zip(report.rows[:-1], report.rows[1:]):
        if current.N_u > previous.N_u * (1.0 + tol):
            violations.append(
                f"N_u increased from {previous.N_u:.17g} at t={previous.t:.6g} to {current.N_u:.17g} at t={current.t:.6g}"
            )
    return violations


def sup_bound_violations(
    report: EnergyReport, sup0: Optional[float] = None, mode: str = "monotone", tol: float = SUP_TOLERANCE
) -> List[str]:
    """
    Uniform-in-time sup bound, and node-to-node monotonicity in "monotone" mode.

    Args:
        report (EnergyReport): run
        sup0 (float, optional): sup_norm(u0); defaults to the first row
        mode (str): "monotone" or "bounded"
        tol (float): relative allowance

    Returns:
        List[str]: violation messages
    """
    if not report.rows:
        return []
    if sup0 is None:
        sup0 = report.rows[0].sup
    violations = []
    peak = max(row.sup for row in report.rows)
    if not np.isfinite(peak) or peak > sup0 * (1.0 + tol):
        violations.append(f"max_t sup = {peak:.17g} exceeds sup(u0) = {sup0:.17g}")
    if mode == "monotone":
        for previous, current in zip(report.rows[:-1], report.rows[1:]):
            if current.sup > previous.sup + tol * sup0:
                violations.append(
                    f"sup increased from {previous.sup:.17g} at t={previous.t:.6g} to {current.sup:.17g} at t={current.t:.6g}"
                )
    return violations


def balance_violations(report: EnergyReport, M: int) -> List[str]:
    threshold = balance_threshold(M)
    violations = []
    for row in report.rows:
        if row.balance_residual is not None and row.balance_residual > threshold:
            violations.append(
                f"window {row.window_index}: balance residual {row.balance_residual:.3e} above {threshold:.3e}"
            )
    return violations


# Hoelder monitor

def kernel_power_mass(p: float, tau: float) -> float:
    """int g(y, tau)^p dy = p^(-3/2) (4 pi tau)^(-3(p-1)/2)"""
    return p ** -1.5 * (4.0 * math.pi * tau) ** (-1.5 * (p - 1.0))


def regularized_kernel_power(p: float, T: float, delta: float) -> float:
    """int_delta^T int g^p dy dtau, in closed form"""
    a = 1.5 * (p - 1.0)
    prefactor = p ** -1.5 * (4.0 * math.pi) ** -a
    if abs(a - 1.0) < 1e-15:
        return prefactor * math.log(T / delta)
    return prefactor * (delta ** (1.0 - a) - T ** (1.0 - a)) / (a - 1.0)


@dataclass
class HolderReport:
    lhs: float
    factor1: float
    factor2_status: str
    kernel_exponent: float
    growth_exponent: float
    regularized: Dict[float, float] = field(default_factory=dict)


def holder_monitor(
    window: WindowState,
    rho: float,
    cutoffs: Sequence[float] = HOLDER_CUTOFFS,
    semigroup: Optional[HeatSemigroup] = None,
) -> HolderReport:
    """
    Both sides of the Hoelder split of the Duhamel term on one converged window.

    lhs is the trapezoid value of int_0^T int g(x - y, t - tau) |u|^(rho+1) dy dtau at the
    window end, maximized over x. factor1 = (int int |u|^(rho+2))^((rho+1)/(rho+2)).
    The kernel factor int int g^(rho+2) has time integrand ~ tau^(-3(rho+1)/2), which is
    never integrable at 0 for rho > 0; it is reported as DIVERGENT together with its
    values cut off at tau = c*T for each cutoff c.

    Args:
        window (WindowState): converged window
        rho (float): exponent
        cutoffs (Sequence[float]): relative tau cutoffs
        semigroup (HeatSemigroup, optional): multiplier cache

    Returns:
        HolderReport: lhs, factor1, divergence status and regularized kernel values
    """
    semigroup = semigroup or default_semigroup
    p = rho + 2.0
    duhamel = from_spectral(duhamel_integral(window, rho, semigroup, absolute=True)[-1])
    lhs = max(0.0, float(np.max(duhamel.values)))
    absorption = [grid_integral(np.abs(u.values) ** p, window.grid) for u in window.trajectory]
    factor1 = trapezoid_integral(window.nodes, absorption) ** ((rho + 1.0) / p)
    exponent = 1.5 * (p - 1.0)
    status = DIVERGENT if exponent >= 1.0 else FINITE
    regularized = {c: regularized_kernel_power(p, window.T, c * window.T) for c in cutoffs}
    return HolderReport(lhs, factor1, status, exponent, 1.0 - exponent, regularized)


class EnergyMonitor:
    def __init__(self, rho: float, nonlinear: bool = True, semigroup: Optional[HeatSemigroup] = None):
        """
        Builds energy report rows for solved windows.

        Args:
            rho (float): exponent
            nonlinear (bool): False records L_rho2 = 0 (absorption switched off)
            semigroup (HeatSemigroup, optional): multiplier cache
        """
        self.rho = rho
        self.nonlinear = nonlinear
        self.semigroup = semigroup or default_semigroup

    def node_row(self, f: RealField, t: float, window_index: int) -> EnergyRow:
        N_u, N_grad, L_rho2, sup = energy_functionals(f, self.rho)
        if not self.nonlinear:
            L_rho2 = 0.0
        return EnergyRow(t, N_u, N_grad, L_rho2, sup, window_index)

    def window_rows(self, window: WindowState, window_index: int, include_start: bool) -> List[EnergyRow]:
        """
        Rows for one window; the balance and Hoelder columns go on the last row.

        Args:
            window (WindowState): converged window
            window_index (int): position in the run
            include_start (bool): emit node 0 (only for the first window)

        Returns:
            List[EnergyRow]: node rows in time order
        """
        nodes = window.nodes
        rows = [self.node_row(u, float(t), window_index) for u, t in zip(window.trajectory, nodes)]
        rows[-1].t = window.end_time
        last = rows[-1]
        last.balance_residual = balance_residual(rows)
        holder = holder_monitor(window, self.rho, semigroup=self.semigroup)
        last.holder_lhs = holder.lhs
        last.holder_factor1 = holder.factor1
        last.holder_factor2_status = holder.factor2_status
        return rows if include_start else rows[1:]


def verification_violations(
    report: EnergyReport,
    M: int,
    sup0: Optional[float] = None,
    sup_check: str = "monotone",
    windows: Optional[Sequence] = None,
) -> List[str]:
    """
    Every runtime check of a completed run.

    Args:
        report (EnergyReport): energy rows of the run
        M (int): nodes per window (sets the balance threshold)
        sup0 (float, optional): sup_norm(u0)
        sup_check (str): "monotone" or "bounded"
        windows (Sequence[WindowRecord], optional): window records for the schedule check

    Returns:
        List[str]: violation messages, empty when the run passes
    """
    violations = []
    violations += monotone_energy_violations(report)
    violations += balance_violations(report, M)
    violations += apriori_check(report)
    violations += sup_bound_violations(report, sup0, sup_check)
    if windows:
        scheduled = [record.plan.T for record in windows[:-1]]
        for index, (previous, current) in enumerate(zip(scheduled[:-1], scheduled[1:]), start=1):
            if current < previous * (1.0 - 1e-6):
                violations.append(f"window {index}: scheduled T decreased from {previous:.17g} to {current:.17g}")
        for record in windows:
            if not record.ball_ok:
                violations.append(f"window {record.index}: window sup {record.window_sup:.17g} left the ball R = {record.plan.R:.17g}")
            if not record.self_map_ok:
                violations.append(f"window {record.index}: self-map inequality failed")
    return violations
