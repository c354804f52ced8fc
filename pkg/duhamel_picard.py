#!/usr/bin/env python3
"""
Duhamel Picard Module
Fixed-point iteration of Q(u) = F - integral_0^t S(t - tau) |u|^rho u dtau on one time window

The Duhamel integral is the composite trapezoid rule over the window nodes with
the semigroup applied node to node. The semigroup factor is bounded by 1, so the
endpoints need no special treatment.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from field_core import GridSpec, RealField, SpectralField, from_spectral, sup_norm, to_spectral
from heat_semigroup import HeatSemigroup, default_semigroup
from solver_errors import InvalidParameterError, NonConvergenceError, NonFiniteFieldError

DEFAULT_NODES = 8
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True, eq=False)
class WindowState:
    """Trajectory on the nodes t0 + j*T/M, j = 0..M"""

    grid: GridSpec
    t0: float
    T: float
    trajectory: Tuple[RealField, ...]

    def __post_init__(self):
        trajectory = tuple(self.trajectory)
        if len(trajectory) < 3:
            raise InvalidParameterError(f"a window needs M >= 2 (got {len(trajectory) - 1} intervals)")
        if not (self.T > 0) or not np.isfinite(self.T):
            raise InvalidParameterError(f"window length must be positive, got {self.T}")
        if self.t0 < 0:
            raise InvalidParameterError(f"window start must be >= 0, got {self.t0}")
        object.__setattr__(self, "trajectory", trajectory)

    @property
    def M(self) -> int:
        return len(self.trajectory) - 1

    @property
    def step(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + np.arange(self.M + 1) * self.step

    @property
    def end_time(self) -> float:
        return self.t0 + self.T

    @property
    def initial_field(self) -> RealField:
        return self.trajectory[0]

    @property
    def final_field(self) -> RealField:
        return self.trajectory[-1]

    @property
    def window_sup(self) -> float:
        """Discrete X_T norm: max over nodes and grid points"""
        return max(sup_norm(u) for u in self.trajectory)

    def with_trajectory(self, trajectory) -> "WindowState":
        return WindowState(self.grid, self.t0, self.T, tuple(trajectory))


@dataclass
class PicardReport:
    iterations: int
    successive_diffs: List[float] = field(default_factory=list)
    measured_q: float = 0.0
    converged: bool = False

    @property
    def final_diff(self) -> float:
        return self.successive_diffs[-1] if self.successive_diffs else 0.0


def _check_rho(rho: float) -> None:
    if not (rho > 0) or not np.isfinite(rho):
        raise InvalidParameterError(f"rho must be > 0 for the absorption term |u|^rho u, got {rho}")


def _absorption(values: np.ndarray, rho: float) -> np.ndarray:
    return np.abs(values) ** rho * values


def nonlinearity(f: RealField, rho: float) -> RealField:
    """Pointwise |f|^rho f"""
    _check_rho(rho)
    return RealField(f.grid, _absorption(f.values, rho))


def window_distance(a: WindowState, b: WindowState) -> float:
    """Window-sup distance max_j sup_norm(a_j - b_j)"""
    if a.M != b.M:
        raise InvalidParameterError(f"node count mismatch: {a.M} vs {b.M}")
    return max(sup_norm(u.values - v.values) for u, v in zip(a.trajectory, b.trajectory))


def free_trajectory(
    u_init: RealField,
    T: float,
    M: int = DEFAULT_NODES,
    t0: float = 0.0,
    semigroup: Optional[HeatSemigroup] = None,
) -> WindowState:
    """
    F on the window: node j holds the heat flow of u_init over time j*T/M.

    Args:
        u_init (RealField): data at the window start
        T (float): window length
        M (int): number of node intervals
        t0 (float): window start time
        semigroup (HeatSemigroup, optional): multiplier cache

    Returns:
        WindowState: the free evolution, node 0 equal to u_init
    """
    semigroup = semigroup or default_semigroup
    if int(M) != M or M < 2:
        raise InvalidParameterError(f"M must be an integer >= 2, got {M}")
    h = T / M
    spectrum = to_spectral(u_init)
    trajectory = [u_init]
    for j in range(1, M + 1):
        trajectory.append(from_spectral(semigroup.apply_spectral(spectrum, j * h)))
    return WindowState(u_init.grid, t0, T, tuple(trajectory))


def duhamel_integral(
    w: WindowState,
    rho: float,
    semigroup: Optional[HeatSemigroup] = None,
    absolute: bool = False,
) -> List[SpectralField]:
    """
    Trapezoid Duhamel integrals at every node, in spectral space.

    Node j gets h * sum_i c_i S(t_j - t_i) n_i with trapezoid weights c_i over
    i = 0..j, evaluated by the recurrence P_j = E P_{j-1} + n_j, E = S(h).

    Args:
        w (WindowState): trajectory u
        rho (float): exponent
        semigroup (HeatSemigroup, optional): multiplier cache
        absolute (bool): integrate |u|^(rho+1) instead of |u|^rho u

    Returns:
        List[SpectralField]: M+1 spectra, the first one zero
    """
    semigroup = semigroup or default_semigroup
    _check_rho(rho)
    h = w.step
    step = semigroup.multiplier(w.grid, h).table
    if absolute:
        sources = [to_spectral(RealField(w.grid, np.abs(u.values) ** (rho + 1))).coeffs for u in w.trajectory]
    else:
        sources = [to_spectral(nonlinearity(u, rho)).coeffs for u in w.trajectory]
    running = sources[0]
    first = sources[0]
    integrals = [SpectralField(w.grid, np.zeros(w.grid.shape, dtype=np.complex128))]
    for j in range(1, w.M + 1):
        running = step * running + sources[j]
        first = step * first
        integrals.append(SpectralField(w.grid, h * (running - 0.5 * (first + sources[j]))))
    return integrals


def apply_Q(
    w: WindowState,
    F_traj: WindowState,
    rho: float,
    nonlinear: bool = True,
    semigroup: Optional[HeatSemigroup] = None,
) -> WindowState:
    """
    One application of Q(u) = F - A(u) on the window nodes.

    Args:
        w (WindowState): current iterate u
        F_traj (WindowState): free evolution of the window's initial data
        rho (float): exponent of the absorption term
        nonlinear (bool): False drops the absorption term (pure heat flow)
        semigroup (HeatSemigroup, optional): multiplier cache

    Returns:
        WindowState: v with v[0] = F[0] and v[j] = F[j] - trapezoid Duhamel integral

    Raises:
        NonFiniteFieldError: an intermediate field overflowed (window mis-sized)
    """
    _check_rho(rho)
    if w.M != F_traj.M:
        raise InvalidParameterError(f"node count mismatch: {w.M} vs {F_traj.M}")
    if not nonlinear:
        return F_traj
    integrals = duhamel_integral(w, rho, semigroup)
    trajectory = [F_traj.trajectory[0]]
    try:
        for j in range(1, w.M + 1):
            correction = from_spectral(integrals[j])
            trajectory.append(RealField(w.grid, F_traj.trajectory[j].values - correction.values))
    except NonFiniteFieldError as e:
        raise NonFiniteFieldError(
            f"non-finite Duhamel iterate on window starting at t={w.t0:.6g}: {e}", bad_count=e.bad_count
        ) from e
    return F_traj.with_trajectory(trajectory)


def residual(
    w: WindowState,
    F_traj: WindowState,
    rho: float,
    nonlinear: bool = True,
    semigroup: Optional[HeatSemigroup] = None,
) -> float:
    """Window-sup norm of u - Q(u); zero exactly at a discrete fixed point"""
    return window_distance(w, apply_Q(w, F_traj, rho, nonlinear, semigroup))


def measure_contraction(diffs: List[float]) -> float:
    """Geometric mean of the last min(3, count-1) successive diff ratios"""
    if len(diffs) < 2:
        return 0.0
    ratios = []
    for previous, current in zip(diffs[:-1], diffs[1:]):
        ratios.append(current / previous if previous > 0 else 0.0)
    tail = ratios[-min(3, len(ratios)):]
    if min(tail) <= 0.0:
        return 0.0
    return float(math.exp(sum(math.log(r) for r in tail) / len(tail)))


def predicted_iterations(first_diff: float, tol: float, q: float) -> int:
    """Geometric-series bound ceil(log(tol / d1) / log(q)) on the Picard count"""
    if first_diff <= tol:
        return 1
    return int(math.ceil(math.log(tol / first_diff) / math.log(q)))


def solve_window(
    u_init: RealField,
    plan,
    rho: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    t0: float = 0.0,
    nonlinear: bool = True,
    initial_guess: Optional[WindowState] = None,
    semigroup: Optional[HeatSemigroup] = None,
) -> Tuple[WindowState, PicardReport]:
    """
    Iterate u <- Q(u) from u = F until successive iterates agree to tol.

    Args:
        u_init (RealField): data at the window start
        plan (WindowPlan): window length T, node count M (and R, q for bookkeeping)
        rho (float): exponent
        tol (float): window-sup distance that stops the iteration
        max_iter (int): iteration budget
        t0 (float): window start time
        nonlinear (bool): False for pure heat flow
        initial_guess (WindowState, optional): starting iterate instead of F
        semigroup (HeatSemigroup, optional): multiplier cache

    Returns:
        Tuple[WindowState, PicardReport]: converged window and its iteration record

    Raises:
        NonConvergenceError: max_iter exceeded; carries the diff history
    """
    _check_rho(rho)
    if not (tol > 0):
        raise InvalidParameterError(f"tol must be > 0, got {tol}")
    semigroup = semigroup or default_semigroup
    F_traj = free_trajectory(u_init, plan.T, plan.M, t0, semigroup)
    u = F_traj if initial_guess is None else F_traj.with_trajectory(initial_guess.trajectory)
    diffs: List[float] = []
    for iteration in range(1, max_iter + 1):
        new = apply_Q(u, F_traj, rho, nonlinear, semigroup)
        diff = window_distance(new, u)
        diffs.append(diff)
        u = new
        if diff < tol:
            report = PicardReport(iteration, diffs, measure_contraction(diffs), True)
            return u, report
    raise NonConvergenceError(
        f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"on window t0={t0:.6g}, T={plan.T:.6g} (last diff {diffs[-1]:.3e})",
        diff_history=diffs,
        t0=t0,
    )


def uniqueness_probe(
    u_init: RealField,
    plan,
    rho: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    semigroup: Optional[HeatSemigroup] = None,
) -> float:
    """
    Solve one window from F and from a random start inside the ball B(R).

    Args:
        u_init (RealField): data at the window start
        plan (WindowPlan): contraction window
        rho (float): exponent
        tol (float): Picard tolerance
        max_iter (int): iteration budget
        seed (int): seed of the second starting iterate
        semigroup (HeatSemigroup, optional): multiplier cache

    Returns:
        float: window-sup distance between the two fixed points
    """
    semigroup = semigroup or default_semigroup
    reference, _ = solve_window(u_init, plan, rho, tol, max_iter, semigroup=semigroup)
    rng = np.random.default_rng(seed)
    guess = [u_init]
    for _ in range(plan.M):
        noise = RealField(u_init.grid, rng.uniform(-1.0, 1.0, u_init.grid.shape))
        smooth = semigroup.apply(noise, u_init.grid.spacing ** 2)
        guess.append(smooth.scaled(plan.R / max(sup_norm(smooth), 1e-300)))
    other, _ = solve_window(
        u_init, plan, rho, tol, max_iter, initial_guess=reference.with_trajectory(guess), semigroup=semigroup
    )
    return window_distance(reference, other)
