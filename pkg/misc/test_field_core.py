#!/usr/bin/env python3
"""
Tests for grid geometry, the spectral transform pair, norms and snapshots
"""

import math

import numpy as np
import pytest

from field_core import (
    SNAPSHOT_HEADER,
    GridSpec,
    RealField,
    SpectralField,
    boundary_shell_max,
    field_from_snapshot_bytes,
    from_spectral,
    grid_integral,
    read_snapshot,
    snapshot_bytes,
    sup_norm,
    to_spectral,
    write_snapshot,
)
from solver_errors import InvalidParameterError, NonFiniteFieldError, SnapshotFormatError, SymmetryViolationError

GRID = GridSpec(2.0 * math.pi, 8)


def smooth_field(grid: GridSpec) -> RealField:
    return RealField.from_function(grid, lambda x, y, z: np.sin(x) * np.cos(2 * y) + 0.3 * np.cos(z) + 0.1)


class TestGridSpec:
    def test_rejects_odd_or_small_n(self):
        with pytest.raises(InvalidParameterError):
            GridSpec(1.0, 7)
        with pytest.raises(InvalidParameterError):
            GridSpec(1.0, 2)

    def test_rejects_nonpositive_box(self):
        with pytest.raises(InvalidParameterError):
            GridSpec(0.0, 8)

    def test_folded_modes(self):
        np.testing.assert_array_equal(GRID.folded_modes(), [0, 1, 2, 3, 4, -3, -2, -1])

    def test_wavenumber_squared_is_sum_of_axes(self):
        k2 = GRID.wavenumber_squared()
        assert k2.shape == GRID.shape
        assert k2[1, 2, 7] == pytest.approx(1 + 4 + 1)
        assert not k2.flags.writeable


class TestRealField:
    def test_values_are_frozen_copies(self):
        raw = np.ones(GRID.shape)
        f = RealField(GRID, raw)
        raw[0, 0, 0] = 5.0
        assert f.values[0, 0, 0] == 1.0
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 2.0

    def test_non_finite_rejected(self):
        raw = np.zeros(GRID.shape)
        raw[1, 2, 3] = np.nan
        raw[0, 0, 0] = np.inf
        with pytest.raises(NonFiniteFieldError) as excinfo:
            RealField(GRID, raw)
        assert excinfo.value.bad_count == 2

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            RealField(GRID, np.zeros((4, 4, 4)))


class TestTransforms:
    def test_constant_maps_to_dc(self):
        F = to_spectral(RealField.constant(GRID, 2.5))
        assert F.coefficient((0, 0, 0)) == pytest.approx(2.5, abs=1e-15)
        rest = F.coeffs.copy()
        rest[0, 0, 0] = 0
        assert np.max(np.abs(rest)) < 1e-14

    def test_single_sine_mode_coefficients(self):
        f = RealField.from_function(GRID, lambda x, y, z: np.sin(x) + 0 * y + 0 * z)
        F = to_spectral(f)
        assert F.coefficient((1, 0, 0)) == pytest.approx(-0.5j, abs=1e-15)
        assert F.coefficient((-1, 0, 0)) == pytest.approx(0.5j, abs=1e-15)

    def test_round_trip(self):
        f = smooth_field(GRID)
        back = from_spectral(to_spectral(f))
        assert sup_norm(back.values - f.values) < 1e-14 * max(1.0, sup_norm(f))

    def test_parseval(self):
        f = smooth_field(GRID)
        lhs = grid_integral(f.values ** 2, GRID)
        coeffs = to_spectral(f).coeffs
        rhs = GRID.volume * float(np.sum(np.abs(coeffs) ** 2))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("N", [4, 8, 16, 32])
    def test_round_trip_random(self, N):
        grid = GridSpec(2.0 * math.pi, N)
        f = RealField(grid, np.random.default_rng(N).normal(size=grid.shape))
        back = from_spectral(to_spectral(f))
        assert sup_norm(back.values - f.values) < 1e-13 * sup_norm(f)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_parseval_random(self, seed):
        grid = GridSpec(3.0, 16)
        f = RealField(grid, np.random.default_rng(seed).uniform(-2.0, 2.0, grid.shape))
        lhs = grid_integral(f.values ** 2, grid)
        coeffs = to_spectral(f).coeffs
        rhs = grid.volume * float(np.sum(np.abs(coeffs) ** 2))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_asymmetric_spectrum_raises(self):
        coeffs = np.zeros(GRID.shape, dtype=np.complex128)
        coeffs[1, 0, 0] = 1.0
        with pytest.raises(SymmetryViolationError) as excinfo:
            from_spectral(SpectralField(GRID, coeffs))
        assert excinfo.value.relative_residue > 1e-10

    def test_zero_spectrum_is_zero_field(self):
        f = from_spectral(SpectralField(GRID, np.zeros(GRID.shape, dtype=np.complex128)))
        assert sup_norm(f) == 0.0


class TestNorms:
    def test_sup_norm_and_integral(self):
        f = RealField.constant(GRID, -3.0)
        assert sup_norm(f) == 3.0
        assert grid_integral(f) == pytest.approx(-3.0 * GRID.volume, rel=1e-14)

    def test_sup_norm_is_a_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.normal(size=GRID.shape)
            b = rng.normal(size=GRID.shape)
            c = rng.uniform(-5.0, 5.0)
            assert sup_norm(c * a) == pytest.approx(abs(c) * sup_norm(a), rel=1e-15)
            assert sup_norm(a + b) <= sup_norm(a) + sup_norm(b)

    def test_integral_of_raw_array_needs_grid(self):
        with pytest.raises(InvalidParameterError):
            grid_integral(np.ones(GRID.shape))

    def test_reduction_is_deterministic(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=GRID.shape)
        first = grid_integral(values, GRID)
        for _ in range(5):
            assert grid_integral(values, GRID) == first

    def test_boundary_shell_of_centred_bump(self):
        grid = GridSpec(2.0 * math.pi, 16)
        c = math.pi
        f = RealField.from_function(grid, lambda x, y, z: np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / 0.5))
        assert boundary_shell_max(f) < 1e-6 * sup_norm(f)


class TestSnapshots:
    def test_header_layout(self):
        assert SNAPSHOT_HEADER.size == 24
        data = snapshot_bytes(RealField.zeros(GRID))
        assert data[:6] == b"SLHF1\x00"
        assert len(data) == 24 + 8 * 8 ** 3

    def test_file_round_trip_is_bitwise(self, tmp_path):
        f = smooth_field(GRID)
        path = str(tmp_path / "u.bin")
        write_snapshot(path, f)
        g = read_snapshot(path)
        assert g.grid == f.grid
        assert np.array_equal(g.values, f.values)

    def test_bad_magic_rejected(self):
        data = bytearray(snapshot_bytes(RealField.zeros(GRID)))
        data[0:1] = b"X"
        with pytest.raises(SnapshotFormatError):
            field_from_snapshot_bytes(bytes(data))

    def test_truncated_payload_rejected(self):
        data = snapshot_bytes(RealField.zeros(GRID))
        with pytest.raises(SnapshotFormatError):
            field_from_snapshot_bytes(data[:-8])
