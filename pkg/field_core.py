#!/usr/bin/env python3
"""
Field Core Module
Handles grid geometry, field storage, norms and the real <-> spectral transform pair

Normalization used everywhere in the package:

    coeffs = fftn(values) / N**3        (forward, DC coefficient = grid mean)
    values = ifftn(coeffs) * N**3       (inverse)

so a constant field c maps to the single coefficient c at mode (0, 0, 0), and
Parseval reads  sum(values**2) * dV == L**3 * sum(|coeffs|**2).
Other modules must go through to_spectral / from_spectral and never call the
FFT directly.
"""

import os
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from scipy import fft as sp_fft

from solver_errors import (
    InvalidParameterError,
    NonFiniteFieldError,
    SnapshotFormatError,
    SymmetryViolationError,
)

load_dotenv()

IMAG_TOLERANCE = 1e-10

SNAPSHOT_MAGIC = b"SLHF1\x00"
# magic[6], pad[2], u32 N, pad[4], f64 L  -> 24 bytes, little-endian
SNAPSHOT_HEADER = struct.Struct("<6s2xI4xd")


def fft_workers() -> int:
    """Thread count handed to scipy.fft; results do not depend on it"""
    try:
        return max(1, int(os.getenv("SLHEAT_FFT_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the box [0, L)^3 with N points per axis"""

    box_length: float
    points_per_axis: int

    def __post_init__(self):
        L = float(self.box_length)
        N = self.points_per_axis
        if not np.isfinite(L) or L <= 0:
            raise InvalidParameterError(f"box length must be positive, got {self.box_length}")
        if int(N) != N or N < 4 or N % 2:
            raise InvalidParameterError(f"points per axis must be an even integer >= 4, got {N}")
        object.__setattr__(self, "box_length", L)
        object.__setattr__(self, "points_per_axis", int(N))

    @property
    def L(self) -> float:
        return self.box_length

    @property
    def N(self) -> int:
        return self.points_per_axis

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def volume_element(self) -> float:
        return self.spacing ** 3

    @property
    def volume(self) -> float:
        return self.box_length ** 3

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.N, self.N, self.N)

    def coordinates(self) -> np.ndarray:
        """1-D sample positions i*L/N"""
        return np.arange(self.N) * self.spacing

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.coordinates()
        return np.meshgrid(x, x, x, indexing="ij")

    def folded_modes(self) -> np.ndarray:
        """fold(m) = m for m <= N/2, m - N otherwise"""
        m = np.arange(self.N)
        return np.where(m <= self.N // 2, m, m - self.N)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * self.folded_modes() / self.box_length

    def wavenumber_squared(self) -> np.ndarray:
        """|k|^2 on the full 3-D spectral grid (read-only, cached per grid)"""
        return _wavenumber_squared(self)


@lru_cache(maxsize=32)
def _wavenumber_squared(grid: GridSpec) -> np.ndarray:
    k2 = grid.wavenumbers() ** 2
    table = k2[:, None, None] + k2[None, :, None] + k2[None, None, :]
    table.flags.writeable = False
    return table


def _frozen_array(values, dtype, shape) -> np.ndarray:
    array = np.array(values, dtype=dtype, order="C", copy=True)
    if array.shape != shape:
        raise InvalidParameterError(f"expected array of shape {shape}, got {array.shape}")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples on a GridSpec; index (i, j, k) is the point (iL/N, jL/N, kL/N)"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = self.values
        if not (isinstance(values, np.ndarray) and values.dtype == np.float64
                and not values.flags.writeable and values.flags.c_contiguous
                and values.shape == self.grid.shape):
            values = _frozen_array(values, np.float64, self.grid.shape)
        finite = np.isfinite(values)
        if not finite.all():
            bad = int(values.size - np.count_nonzero(finite))
            raise NonFiniteFieldError(f"field has {bad} non-finite samples", bad_count=bad)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "RealField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "RealField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> "RealField":
        """Sample func(x, y, z) on the grid mesh"""
        x, y, z = grid.mesh()
        return cls(grid, np.broadcast_to(func(x, y, z), grid.shape))

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.values)

    def __add__(self, other: "RealField") -> "RealField":
        _check_same_grid(self.grid, other.grid)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_same_grid(self.grid, other.grid)
        return RealField(self.grid, self.values - other.values)

    def scaled(self, factor: float) -> "RealField":
        return RealField(self.grid, self.values * factor)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a RealField in the mean-preserving normalization"""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen_array(self.coeffs, np.complex128, self.grid.shape))

    def coefficient(self, mode: Tuple[int, int, int]) -> complex:
        """Coefficient at a signed mode (mx, my, mz); negative modes wrap around"""
        i, j, k = (m % self.grid.N for m in mode)
        return complex(self.coeffs[i, j, k])


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise InvalidParameterError(f"grid mismatch: {a} vs {b}")


def to_spectral(f: RealField) -> SpectralField:
    """
    Forward transform in the mean-preserving normalization.

    Args:
        f (RealField): finite real field

    Returns:
        SpectralField: coefficients with DC equal to the grid mean of f
    """
    coeffs = sp_fft.fftn(f.values, norm="forward", workers=fft_workers())
    return SpectralField(f.grid, coeffs)


def from_spectral(F: SpectralField) -> RealField:
    """
    Inverse transform back to a real field.

    The spectrum is not symmetrized; the imaginary residue of the inverse is
    measured relative to the largest sample magnitude and discarded when below
    IMAG_TOLERANCE.

    Args:
        F (SpectralField): conjugate-symmetric spectrum

    Returns:
        RealField: real part of the inverse transform

    Raises:
        SymmetryViolationError: imaginary residue above IMAG_TOLERANCE
    """
    z = sp_fft.ifftn(F.coeffs, norm="forward", workers=fft_workers())
    scale = float(np.max(np.abs(z)))
    if scale > 0.0:
        residue = float(np.max(np.abs(z.imag))) / scale
        if residue > IMAG_TOLERANCE:
            raise SymmetryViolationError(
                f"spectrum is not conjugate-symmetric (imaginary residue {residue:.3e})",
                relative_residue=residue,
            )
    return RealField(F.grid, np.ascontiguousarray(z.real))


def sup_norm(f: Union[RealField, np.ndarray]) -> float:
    """Max of |values| over the grid (per time slice)"""
    values = f.values if isinstance(f, RealField) else np.asarray(f)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-order pairwise reduction (numpy add.reduce on a contiguous 1-D array)"""
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return float(np.add.reduce(flat))


def grid_integral(f: Union[RealField, np.ndarray], grid: Optional[GridSpec] = None) -> float:
    """Rectangle-rule integral over the periodic box"""
    if isinstance(f, RealField):
        return pairwise_sum(f.values) * f.grid.volume_element
    if grid is None:
        raise InvalidParameterError("grid is required when integrating a raw array")
    return pairwise_sum(f) * grid.volume_element


def boundary_shell_max(f: RealField) -> float:
    """Largest |u| on the six faces of the box (index 0 and N-1 on each axis)"""
    v = np.abs(f.values)
    faces = (v[0], v[-1], v[:, 0], v[:, -1], v[:, :, 0], v[:, :, -1])
    return float(max(np.max(face) for face in faces))


# Snapshot format

def snapshot_bytes(f: RealField) -> bytes:
    header = SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, f.grid.N, f.grid.L)
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")


def field_from_snapshot_bytes(data: bytes) -> RealField:
    if len(data) < SNAPSHOT_HEADER.size:
        raise SnapshotFormatError(f"snapshot too short ({len(data)} bytes)")
    magic, N, L = SNAPSHOT_HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad snapshot magic {magic!r}")
    expected = SNAPSHOT_HEADER.size + 8 * N ** 3
    if len(data) != expected:
        raise SnapshotFormatError(f"snapshot payload is {len(data)} bytes, expected {expected}")
    grid = GridSpec(L, N)
    values = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size).reshape(grid.shape)
    return RealField(grid, values.astype(np.float64))


def write_snapshot(path: str, f: RealField) -> None:
    with open(path, "wb") as handle:
        handle.write(snapshot_bytes(f))


def read_snapshot(path: str) -> RealField:
    with open(path, "rb") as handle:
        return field_from_snapshot_bytes(handle.read())
