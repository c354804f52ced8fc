#!/usr/bin/env python3
"""
Continuation Module
Sizes contraction windows, chains them up to the requested horizon and watches
for degenerate windows or runaway sup norms
"""

import math
import sys
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

from diagnostics import EnergyMonitor, EnergyReport
from duhamel_picard import DEFAULT_MAX_ITER, DEFAULT_NODES, DEFAULT_TOLERANCE, PicardReport, solve_window
from field_core import RealField, sup_norm
from heat_semigroup import HeatSemigroup, default_semigroup
from solver_errors import BlowupSuspectedError, InvalidParameterError, NonConvergenceError, NonFiniteFieldError

EPSILON_FLOOR = 1e-8
DEFAULT_Q = 0.5
DEFAULT_T_CAP = 1.0
DEFAULT_CAP_FACTOR = 1e12
DEFAULT_T_MIN = 1e-12
# remaining time below this fraction of t_max counts as landed
LANDING_FRACTION = 1e-14
SELF_MAP_SLACK = 1e-8
LOG_FLOAT_MAX = math.log(sys.float_info.max)

COMPLETED = "completed"
BLOWUP_SUSPECTED = "blowup_suspected"
NONCONVERGENCE = "nonconvergence"


def scaled_power(c: float, base: float, p: float) -> float:
    """c * base^p for c, base >= 0; inf once the product passes float max"""
    if c == 0.0 or base == 0.0:
        return 0.0
    try:
        power = base ** p
    except OverflowError:
        power = 0.0
    if power >= sys.float_info.min:
        return c * power
    log_value = math.log(c) + p * math.log(base)
    if log_value >= LOG_FLOAT_MAX:
        return math.inf
    return math.exp(log_value)


@dataclass(frozen=True)
class WindowPlan:
    """Ball radius R, window length T, target contraction q and node count M"""

    R: float
    T: float
    q: float
    M: int
    F_bound: float
    rho: float

    def self_map_margin(self) -> float:
        """R - (T R^(rho+1) + F_bound); nonnegative when Q maps B(R) into itself"""
        return self.R - (scaled_power(self.T, self.R, self.rho + 1.0) + self.F_bound)

    def lipschitz_bound(self) -> float:
        """T (rho+1) R^rho; at most q by construction"""
        return scaled_power(self.T * (self.rho + 1.0), self.R, self.rho)

    def satisfies_contract(self, rel_tol: float = 1e-12) -> bool:
        return (
            self.self_map_margin() >= -rel_tol * self.R
            and self.lipschitz_bound() <= self.q * (1.0 + rel_tol)
            and self.T > 0
        )

    def shortened(self, T: float) -> "WindowPlan":
        if not (0 < T <= self.T):
            raise InvalidParameterError(f"shortened length must be in (0, {self.T}], got {T}")
        return replace(self, T=T)


def window_size(
    F_bound: float,
    rho: float,
    q: float = DEFAULT_Q,
    T_cap: float = DEFAULT_T_CAP,
    M: int = DEFAULT_NODES,
) -> WindowPlan:
    """
    Largest window the ball argument allows, with R = 2 max(F_bound, EPSILON_FLOOR).

    Args:
        F_bound (float): sup norm of the window's initial field
        rho (float): exponent
        q (float): target contraction factor in (0, 1)
        T_cap (float): upper limit on T
        M (int): node intervals per window

    Returns:
        WindowPlan: T = min((R - F)/R^(rho+1), q/((rho+1) R^rho), T_cap)
    """
    if not (F_bound >= 0) or not math.isfinite(F_bound):
        raise InvalidParameterError(f"F_bound must be finite and >= 0, got {F_bound}")
    if not (rho > 0) or not math.isfinite(rho):
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    if not (0 < q < 1):
        raise InvalidParameterError(f"q must lie in (0, 1), got {q}")
    if not (T_cap > 0):
        raise InvalidParameterError(f"T_cap must be > 0, got {T_cap}")
    R = 2.0 * max(F_bound, EPSILON_FLOOR)
    # huge R underflows T towards 0 and trips the T_min check
    self_map = scaled_power(R - F_bound, R, -(rho + 1.0))
    contraction = scaled_power(q / (rho + 1.0), R, -rho)
    T = min(self_map, contraction, T_cap)
    return WindowPlan(R=R, T=T, q=q, M=int(M), F_bound=float(F_bound), rho=float(rho))


@dataclass
class BlowupDiagnosis:
    time: float
    reason: str
    sup_history: List[Tuple[float, float]]
    last_plan: Optional[WindowPlan]
    message: str


class BlowupDetector:
    def __init__(self, sup0: float, cap_factor: float = DEFAULT_CAP_FACTOR, t_min: float = DEFAULT_T_MIN):
        """
        Watches a run for the two symptoms of a broken window contract.

        Args:
            sup0 (float): sup norm of the initial data
            cap_factor (float): fire when a sup norm exceeds cap_factor * sup0
            t_min (float): fire when a scheduled window is shorter than this
        """
        self.sup0 = sup0
        self.cap = cap_factor * sup0
        self.t_min = t_min
        self.sup_history: List[Tuple[float, float]] = [(0.0, sup0)]
        self.last_plan: Optional[WindowPlan] = None

    def check_plan(self, plan: WindowPlan, t: float) -> Optional[BlowupDiagnosis]:
        self.last_plan = plan
        if plan.T < self.t_min:
            return BlowupDiagnosis(
                t, "t_min", list(self.sup_history), plan,
                f"scheduled window T={plan.T:.3e} at t={t:.6g} is below T_min={self.t_min:.3e}",
            )
        return None

    def check_sup(self, sup: float, t: float) -> Optional[BlowupDiagnosis]:
        self.sup_history.append((t, sup))
        if not math.isfinite(sup) or sup > self.cap:
            return BlowupDiagnosis(
                t, "sup_cap", list(self.sup_history), self.last_plan,
                f"sup norm {sup:.6e} at t={t:.6g} exceeds cap {self.cap:.6e}",
            )
        return None

    def non_finite(self, error: NonFiniteFieldError, t: float) -> BlowupDiagnosis:
        """An overflowing Picard iterate means the window contract broke"""
        return BlowupDiagnosis(
            t, "non_finite", list(self.sup_history), self.last_plan,
            f"window starting at t={t:.6g} produced non-finite values: {error}",
        )


@dataclass
class WindowRecord:
    index: int
    t0: float
    plan: WindowPlan
    report: PicardReport
    window_sup: float
    self_map_ok: bool
    ball_ok: bool

    @property
    def F_bound(self) -> float:
        return self.plan.F_bound


@dataclass
class GlobalRun:
    windows: List[WindowRecord] = field(default_factory=list)
    final_time: float = 0.0
    status: str = COMPLETED
    final_field: Optional[RealField] = None
    failure: Optional[Exception] = None
    sup0: float = 0.0

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def raise_for_status(self) -> None:
        """Re-raise the error that stopped the run, if any"""
        if self.failure is not None:
            raise self.failure


@dataclass
class SolverConfig:
    rho: float
    t_max: float
    q: float = DEFAULT_Q
    M: int = DEFAULT_NODES
    tol: float = DEFAULT_TOLERANCE
    max_iter: int = DEFAULT_MAX_ITER
    t_cap: float = DEFAULT_T_CAP
    blowup_cap_factor: float = DEFAULT_CAP_FACTOR
    t_min: float = DEFAULT_T_MIN
    nonlinear: bool = True


class GlobalSolver:
    def __init__(
        self,
        config: SolverConfig,
        verbose: bool = False,
        semigroup: Optional[HeatSemigroup] = None,
        window_callback: Optional[Callable[[WindowRecord, RealField, float], None]] = None,
    ):
        """
        Window-by-window continuation driver.

        Args:
            config (SolverConfig): run parameters
            verbose (bool): print one status line per window
            semigroup (HeatSemigroup, optional): multiplier cache shared by all windows
            window_callback (Callable, optional): called with (record, end field, end time) after each window
        """
        if not (config.t_max > 0) or not math.isfinite(config.t_max):
            raise InvalidParameterError(f"t_max must be > 0, got {config.t_max}")
        self.config = config
        self.verbose = verbose
        self.semigroup = semigroup or default_semigroup
        self.window_callback = window_callback

    def _log(self, message: str) -> None:
        if self.verbose:
            print(message)

    def _record(self, index: int, t0: float, plan: WindowPlan, report: PicardReport, window) -> WindowRecord:
        window_sup = window.window_sup
        rho = self.config.rho
        slack = SELF_MAP_SLACK * max(plan.R, 1.0)
        self_map_ok = window_sup <= scaled_power(plan.T, window_sup, rho + 1.0) + plan.F_bound + slack
        ball_ok = window_sup <= plan.R + self.config.tol + slack
        return WindowRecord(index, t0, plan, report, window_sup, self_map_ok, ball_ok)

    def solve(self, u0: RealField) -> Tuple[GlobalRun, EnergyReport]:
        """
        Chain contraction windows from t = 0 to t_max.

        Args:
            u0 (RealField): initial data

        Returns:
            Tuple[GlobalRun, EnergyReport]: window log and per-node energy rows; a failed
            run carries its error on GlobalRun.failure
        """
        cfg = self.config
        sup0 = sup_norm(u0)
        detector = BlowupDetector(sup0, cfg.blowup_cap_factor, cfg.t_min)
        monitor = EnergyMonitor(cfg.rho, cfg.nonlinear, self.semigroup)
        run = GlobalRun(final_field=u0, sup0=sup0)
        energy = EnergyReport(cfg.rho)
        pending: List[Future] = []
        t = 0.0
        u = u0
        self._log(f"🚀 Solving to t_max={cfg.t_max:g} (rho={cfg.rho:g}, q={cfg.q:g}, M={cfg.M})")

        with ThreadPoolExecutor(max_workers=1) as pool:
            while cfg.t_max - t > LANDING_FRACTION * cfg.t_max:
                index = len(run.windows)
                plan = window_size(sup_norm(u), cfg.rho, cfg.q, cfg.t_cap, cfg.M)
                diagnosis = detector.check_plan(plan, t)
                if diagnosis is not None:
                    self._fail(run, BLOWUP_SUSPECTED, BlowupSuspectedError(diagnosis))
                    break
                remaining = cfg.t_max - t
                final = plan.T >= remaining
                step_plan = plan.shortened(remaining) if final else plan
                try:
                    window, picard = solve_window(
                        u, step_plan, cfg.rho, cfg.tol, cfg.max_iter, t0=t,
                        nonlinear=cfg.nonlinear, semigroup=self.semigroup,
                    )
                except NonConvergenceError as e:
                    self._fail(run, NONCONVERGENCE, e)
                    break
                except NonFiniteFieldError as e:
                    self._fail(run, BLOWUP_SUSPECTED, BlowupSuspectedError(detector.non_finite(e, t)))
                    break
                record = self._record(index, t, step_plan, picard, window)
                run.windows.append(record)
                pending.append(pool.submit(monitor.window_rows, window, index, index == 0))
                t = cfg.t_max if final else window.end_time
                u = window.final_field
                run.final_time = t
                run.final_field = u
                if self.window_callback is not None:
                    self.window_callback(record, u, t)
                self._log(
                    f"🪟 Window {index}: t0={record.t0:.6g} T={step_plan.T:.6g} "
                    f"iterations={picard.iterations} q_measured={picard.measured_q:.3g} sup={sup_norm(u):.6g}"
                )
                diagnosis = detector.check_sup(record.window_sup, t)
                if diagnosis is not None:
                    self._fail(run, BLOWUP_SUSPECTED, BlowupSuspectedError(diagnosis))
                    break

            for future in pending:
                energy.extend(future.result())

        if run.windows and run.completed:
            energy.rows[-1].t = run.final_time
        if not energy.rows:
            energy.extend([monitor.node_row(u0, 0.0, 0)])
        if run.completed:
            self._log(f"✅ Reached t={run.final_time:g} in {len(run.windows)} windows")
        return run, energy

    def _fail(self, run: GlobalRun, status: str, error: Exception) -> None:
        run.status = status
        run.failure = error
        self._log(f"❌ {status}: {error}")


def global_solve(
    u0: RealField,
    rho: float,
    q: float = DEFAULT_Q,
    t_max: float = 1.0,
    tol: float = DEFAULT_TOLERANCE,
    M: int = DEFAULT_NODES,
    max_iter: int = DEFAULT_MAX_ITER,
    t_cap: float = DEFAULT_T_CAP,
    blowup_cap_factor: float = DEFAULT_CAP_FACTOR,
    t_min: float = DEFAULT_T_MIN,
    nonlinear: bool = True,
    verbose: bool = False,
    semigroup: Optional[HeatSemigroup] = None,
) -> Tuple[GlobalRun, EnergyReport]:
    """Convenience wrapper around GlobalSolver"""
    config = SolverConfig(
        rho=rho, t_max=t_max, q=q, M=M, tol=tol, max_iter=max_iter, t_cap=t_cap,
        blowup_cap_factor=blowup_cap_factor, t_min=t_min, nonlinear=nonlinear,
    )
    return GlobalSolver(config, verbose=verbose, semigroup=semigroup).solve(u0)
