#!/usr/bin/env python3
"""
Oracle FD Module
Explicit finite-difference reference integrator and closed-form solutions used
to cross-check the spectral solver; the solver itself never calls into here
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from field_core import GridSpec, RealField
from solver_errors import InvalidParameterError, NonFiniteFieldError

# 7-point periodic Laplacian: forward Euler is stable for dt <= h^2 / 6
STABILITY_DIVISOR = 6.0
# step-count slack, in units of dt, when deciding whether a run reaches t_max
HORIZON_SLACK = 1e-9


def stability_limit(grid: GridSpec) -> float:
    return grid.spacing ** 2 / STABILITY_DIVISOR


@dataclass(frozen=True)
class FDConfig:
    grid: GridSpec
    dt: float
    steps: int

    def __post_init__(self):
        if not (self.dt > 0) or not math.isfinite(self.dt):
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        limit = stability_limit(self.grid)
        if self.dt > limit:
            raise InvalidParameterError(
                f"dt={self.dt:.3e} violates the explicit stability bound h^2/6={limit:.3e}"
            )
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParameterError(f"steps must be a positive integer, got {self.steps}")

    @classmethod
    def for_horizon(cls, grid: GridSpec, t_max: float, dt: float) -> "FDConfig":
        """Step count that reaches t_max, the last step possibly shortened"""
        if not (t_max > 0):
            raise InvalidParameterError(f"t_max must be > 0, got {t_max}")
        return cls(grid, dt, max(1, int(math.ceil(t_max / dt - HORIZON_SLACK))))


def laplacian_7pt(values: np.ndarray, h: float) -> np.ndarray:
    """Second-order periodic Laplacian on a 3-D array"""
    out = -6.0 * values
    for axis in range(3):
        out = out + np.roll(values, 1, axis=axis) + np.roll(values, -1, axis=axis)
    return out / h ** 2


def stencil_eigenvalue(grid: GridSpec, mode: Sequence[int]) -> float:
    """lambda_h = 4/h^2 * sum_i sin^2(pi m_i / N), so laplacian_7pt(e_m) = -lambda_h e_m"""
    h = grid.spacing
    return 4.0 / h ** 2 * sum(math.sin(math.pi * m / grid.N) ** 2 for m in mode)


def fd_step(f: RealField, dt: float, rho: float, nonlinear: bool = True) -> RealField:
    """
    One forward Euler step of u' = Laplacian u - |u|^rho u.

    Args:
        f (RealField): current field
        dt (float): step, at most h^2/6
        rho (float): exponent
        nonlinear (bool): False integrates the pure heat equation

    Returns:
        RealField: f + dt * (Laplacian_h f - |f|^rho f)

    Raises:
        InvalidParameterError: dt above the stability bound or rho <= 0
        NonFiniteFieldError: the step overflowed
    """
    if not (rho > 0):
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    if dt > stability_limit(f.grid) * (1.0 + HORIZON_SLACK):
        raise InvalidParameterError(f"dt={dt:.3e} violates the explicit stability bound")
    u = f.values
    rate = laplacian_7pt(u, f.grid.spacing)
    if nonlinear:
        rate = rate - np.abs(u) ** rho * u
    with np.errstate(over="ignore", invalid="ignore"):
        out = u + dt * rate
    try:
        return RealField(f.grid, out)
    except NonFiniteFieldError as e:
        raise NonFiniteFieldError(f"finite-difference step produced non-finite values: {e}", e.bad_count) from e


def fd_solve(u0: RealField, t_max: float, config: FDConfig, rho: float, nonlinear: bool = True) -> RealField:
    """
    March fd_step from 0 to t_max.

    Args:
        u0 (RealField): initial data on config.grid
        t_max (float): final time
        config (FDConfig): step size and count
        rho (float): exponent
        nonlinear (bool): False integrates the pure heat equation

    Returns:
        RealField: FD solution at exactly t_max

    Raises:
        InvalidParameterError: grid mismatch, or config.steps steps of config.dt stop short of t_max
    """
    if u0.grid != config.grid:
        raise InvalidParameterError(f"grid mismatch: {u0.grid} vs {config.grid}")
    if not (t_max > 0):
        raise InvalidParameterError(f"t_max must be > 0, got {t_max}")
    reach = config.steps * config.dt
    if reach < t_max - HORIZON_SLACK * config.dt:
        raise InvalidParameterError(
            f"{config.steps} steps of dt={config.dt:.3e} reach t={reach:.6g}, short of t_max={t_max:.6g}; "
            "size the run with FDConfig.for_horizon"
        )
    f = u0
    t = 0.0
    for step in range(config.steps):
        remaining = t_max - t
        if remaining <= 0:
            break
        last = step == config.steps - 1
        dt = remaining if last or remaining <= config.dt else config.dt
        f = fd_step(f, dt, rho, nonlinear)
        t = t_max if dt == remaining else (step + 1) * config.dt
    return f


def homogeneous_exact(u0: float, rho: float, t: float) -> float:
    """Solution of u' = -|u|^rho u: sign(u0) |u0| (1 + rho |u0|^rho t)^(-1/rho)"""
    if not (rho > 0):
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    magnitude = abs(u0)
    if magnitude == 0.0:
        return 0.0
    return math.copysign(magnitude * (1.0 + rho * magnitude ** rho * t) ** (-1.0 / rho), u0)
