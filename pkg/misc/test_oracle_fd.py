#!/usr/bin/env python3
"""
Tests for the explicit finite-difference oracle and the closed-form reduction
"""

import math

import numpy as np
import pytest

from continuation import global_solve
from field_core import GridSpec, RealField, sup_norm
from oracle_fd import (
    FDConfig,
    fd_solve,
    fd_step,
    homogeneous_exact,
    laplacian_7pt,
    stability_limit,
    stencil_eigenvalue,
)
from solver_errors import InvalidParameterError

GRID = GridSpec(2.0 * math.pi, 8)


def bump(grid: GridSpec, amplitude: float = 1.0, width: float = 1.2) -> RealField:
    c = 0.5 * grid.L
    return RealField.from_function(
        grid, lambda x, y, z: amplitude * np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / (2 * width ** 2))
    )


class TestHomogeneousExact:
    def test_values(self):
        assert homogeneous_exact(1.0, 2.0, 1.0) == pytest.approx(3 ** -0.5, rel=1e-15)
        assert homogeneous_exact(0.0, 2.0, 5.0) == 0.0
        assert homogeneous_exact(-1.0, 2.0, 1.0) == -homogeneous_exact(1.0, 2.0, 1.0)

    def test_nonincreasing_in_time(self):
        values = [homogeneous_exact(2.0, 1.5, t) for t in np.linspace(0.0, 3.0, 20)]
        assert all(b <= a for a, b in zip(values[:-1], values[1:]))

    def test_rejects_bad_rho(self):
        with pytest.raises(InvalidParameterError):
            homogeneous_exact(1.0, 0.0, 1.0)


class TestStep:
    def test_constant_field(self):
        out = fd_step(RealField.constant(GRID, 1.0), 1e-3, 2.0)
        np.testing.assert_allclose(out.values, 0.999, rtol=0, atol=1e-15)

    def test_zero_field(self):
        assert sup_norm(fd_step(RealField.zeros(GRID), 1e-3, 1.0)) == 0.0

    def test_single_mode_uses_stencil_eigenvalue(self):
        f = RealField.from_function(GRID, lambda x, y, z: np.sin(x) * np.cos(2 * y) + 0 * z)
        dt = 1e-3
        lam = stencil_eigenvalue(GRID, (1, 2, 0))
        out = fd_step(f, dt, 1.0, nonlinear=False)
        np.testing.assert_allclose(out.values, (1.0 - dt * lam) * f.values, atol=1e-14)

    def test_laplacian_of_constant_is_zero(self):
        assert sup_norm(laplacian_7pt(np.full(GRID.shape, 3.0), GRID.spacing)) == 0.0

    def test_unstable_step_rejected(self):
        with pytest.raises(InvalidParameterError):
            fd_step(RealField.zeros(GRID), 2.0 * stability_limit(GRID), 1.0)
        with pytest.raises(InvalidParameterError):
            FDConfig(GRID, 2.0 * stability_limit(GRID), 10)


class TestSolve:
    def test_horizon_step_count(self):
        config = FDConfig.for_horizon(GRID, 0.25, 1e-3)
        assert config.steps == 250
        assert FDConfig.for_horizon(GRID, 0.2505, 1e-3).steps == 251

    def test_short_step_budget_rejected(self):
        grid = GridSpec(2.0 * math.pi, 4)
        with pytest.raises(InvalidParameterError):
            fd_solve(RealField.constant(grid, 1.0), 1.0, FDConfig(grid, 1e-3, 10), 2.0)

    def test_spare_steps_still_land_on_horizon(self):
        grid = GridSpec(2.0 * math.pi, 4)
        u0 = RealField.constant(grid, 1.0)
        exact_count = fd_solve(u0, 0.5, FDConfig.for_horizon(grid, 0.5, 1e-3), 2.0)
        spare = fd_solve(u0, 0.5, FDConfig(grid, 1e-3, 900), 2.0)
        np.testing.assert_allclose(spare.values, exact_count.values, rtol=1e-12)

    def test_uneven_horizon_lands_exactly(self):
        grid = GridSpec(2.0 * math.pi, 4)
        u0 = RealField.constant(grid, 1.0)
        out = fd_solve(u0, 0.0105, FDConfig.for_horizon(grid, 0.0105, 1e-3), 2.0)
        # ten full steps and one half step of the pure ODE
        expected = 1.0
        for dt in [1e-3] * 10 + [5e-4]:
            expected = expected - dt * expected ** 3
        assert float(out.values[0, 0, 0]) == pytest.approx(expected, rel=1e-12)

    def test_homogeneous_reaches_closed_form(self):
        grid = GridSpec(2.0 * math.pi, 4)
        u0 = RealField.constant(grid, 1.0)
        out = fd_solve(u0, 1.0, FDConfig.for_horizon(grid, 1.0, 1e-4), 2.0)
        assert abs(float(out.values[0, 0, 0]) - 3 ** -0.5) < 5e-4

    def test_homogeneous_error_is_first_order(self):
        grid = GridSpec(2.0 * math.pi, 4)
        u0 = RealField.constant(grid, 1.0)
        dts = [1e-3, 5e-4, 2.5e-4]
        errors = []
        for dt in dts:
            out = fd_solve(u0, 1.0, FDConfig.for_horizon(grid, 1.0, dt), 2.0)
            errors.append(abs(float(out.values[0, 0, 0]) - homogeneous_exact(1.0, 2.0, 1.0)))
        slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
        assert 0.9 <= slope <= 1.1

    def test_pure_heat_sine_decay(self):
        grid = GridSpec(2.0 * math.pi, 16)
        f = RealField.from_function(grid, lambda x, y, z: np.sin(x) + 0 * y + 0 * z)
        t = 0.5
        out = fd_solve(f, t, FDConfig.for_horizon(grid, t, 1e-3), 1.0, nonlinear=False)
        exact = math.exp(-t) * f.values
        # O(dt) + O(h^2): h^2/12 * t from the stencil plus dt/2 * t from Euler
        assert sup_norm(out.values - exact) < 0.5 * (grid.spacing ** 2 / 12 + 1e-3)

    def test_spectral_linear_limit_is_exact(self):
        f = RealField.from_function(GRID, lambda x, y, z: np.sin(x) + 0 * y + 0 * z)
        run, _ = global_solve(f, 1.0, t_max=0.3, nonlinear=False)
        assert sup_norm(run.final_field.values - math.exp(-0.3) * f.values) < 1e-12

    @pytest.mark.slow
    def test_spectral_and_fd_agree_on_gaussian(self):
        diffs = []
        for N, dt in ((16, 1e-3), (32, 5e-4), (64, 2.5e-4)):
            grid = GridSpec(2.0 * math.pi, N)
            u0 = bump(grid)
            run, _ = global_solve(u0, 1.0, t_max=0.25)
            fd = fd_solve(u0, 0.25, FDConfig.for_horizon(grid, 0.25, dt), 1.0)
            diffs.append(sup_norm(run.final_field.values - fd.values))
        assert diffs[2] <= 5e-3
        assert diffs[0] > diffs[1] > diffs[2]
