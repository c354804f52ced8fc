#!/usr/bin/env python3
"""
Heat Semigroup Module
Applies e^{t*Laplacian} exactly in spectral space and cross-checks it against a
direct real-space convolution with the periodized Gaussian kernel

    g(x, t) = exp(-|x|^2 / (4t)) / (4*pi*t)^(3/2)
"""

import math
from dataclasses import dataclass
from threading import Lock
from typing import Dict, Optional, Tuple

import numpy as np

from field_core import (
    GridSpec,
    RealField,
    SpectralField,
    from_spectral,
    pairwise_sum,
    to_spectral,
)
from solver_errors import InvalidParameterError

IMAGE_TAIL_CUTOFF = 1e-12
# quadrature alias term exp(-arg) of the refined real-space rule must stay below 1e-16
REFINED_ALIAS_EXPONENT = 37.0


@dataclass(frozen=True, eq=False)
class SemigroupMultiplier:
    """exp(-|k|^2 t) per spectral mode of a grid"""

    grid: GridSpec
    t: float
    table: np.ndarray

    @classmethod
    def build(cls, grid: GridSpec, t: float) -> "SemigroupMultiplier":
        if t < 0 or not np.isfinite(t):
            raise InvalidParameterError(f"semigroup time must be >= 0, got {t}")
        table = np.exp(-grid.wavenumber_squared() * float(t))
        table.flags.writeable = False
        return cls(grid, float(t), table)


class HeatSemigroup:
    def __init__(self, max_entries: int = 256):
        """
        Cache of multiplier tables keyed by (grid, t).

        Args:
            max_entries (int): tables kept before the oldest entry is evicted
        """
        self.max_entries = max_entries
        self._tables: Dict[Tuple[GridSpec, float], SemigroupMultiplier] = {}
        self._lock = Lock()

    def multiplier(self, grid: GridSpec, t: float) -> SemigroupMultiplier:
        key = (grid, float(t))
        with self._lock:
            cached = self._tables.get(key)
        if cached is not None:
            return cached
        # built outside the lock; two racing builders produce identical tables
        built = SemigroupMultiplier.build(grid, t)
        with self._lock:
            if len(self._tables) >= self.max_entries and key not in self._tables:
                self._tables.pop(next(iter(self._tables)))
            return self._tables.setdefault(key, built)

    def apply_spectral(self, F: SpectralField, t: float) -> SpectralField:
        if t == 0:
            return F
        return SpectralField(F.grid, F.coeffs * self.multiplier(F.grid, t).table)

    def apply(self, f: RealField, t: float) -> RealField:
        """
        Evolve f by the pure heat flow for time t.

        Args:
            f (RealField): data at time 0
            t (float): nonnegative time

        Returns:
            RealField: e^{t*Laplacian} f; f itself when t == 0
        """
        if t < 0 or not np.isfinite(t):
            raise InvalidParameterError(f"semigroup time must be >= 0, got {t}")
        if t == 0:
            return f
        return from_spectral(self.apply_spectral(to_spectral(f), t))

    def clear(self) -> None:
        with self._lock:
            self._tables.clear()


default_semigroup = HeatSemigroup()


def apply_semigroup(f: RealField, t: float, semigroup: Optional[HeatSemigroup] = None) -> RealField:
    """Convolution with the heat kernel, applied as a Fourier multiplier"""
    return (semigroup or default_semigroup).apply(f, t)


# Direct real-space oracle

def _check_positive_time(t: float) -> None:
    if not (t > 0) or not np.isfinite(t):
        raise InvalidParameterError(f"kernel time must be > 0, got {t}")


def image_count(t: float, L: float) -> int:
    """Periodic images needed on each side so the dropped tail weight is below 1e-12"""
    n = 0
    while 2.0 * math.erfc((n + 0.5) * L / (2.0 * math.sqrt(t))) >= IMAGE_TAIL_CUTOFF:
        n += 1
    return n


def periodic_gaussian_1d(x: np.ndarray, t: float, L: float) -> np.ndarray:
    """1-D heat kernel summed over periodic images, evaluated at offsets x"""
    _check_positive_time(t)
    x = np.mod(np.asarray(x, dtype=np.float64) + 0.5 * L, L) - 0.5 * L
    n_max = image_count(t, L)
    shifts = np.arange(-n_max, n_max + 1) * L
    offsets = x[..., None] + shifts
    weights = np.exp(-offsets ** 2 / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    return weights.sum(axis=-1)


def periodic_sinc(z: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Trigonometric interpolation basis centred at 0 (Nyquist mode split symmetrically)"""
    N, L = grid.N, grid.L
    m = np.arange(1, N // 2)
    z = np.asarray(z, dtype=np.float64)
    total = 1.0 + 2.0 * np.cos(2.0 * np.pi * z[..., None] * m / L).sum(axis=-1)
    total += np.cos(np.pi * N * z / L)
    return total / N


def refinement_factor(grid: GridSpec, t: float) -> int:
    """Sub-samples per grid cell so the refined rectangle rule resolves the kernel"""
    r = 0.5 + math.sqrt(REFINED_ALIAS_EXPONENT / t) * grid.L / (2.0 * math.pi * grid.N)
    return max(2, int(math.ceil(r)))


def direct_kernel_1d(grid: GridSpec, t: float) -> np.ndarray:
    """
    Weights d_n = integral of g1(x_n - z) * S(z) dz on the refined rule.

    Applying d along each axis convolves the periodized Gaussian with the
    trigonometric interpolant of the grid samples.

    Args:
        grid (GridSpec): grid of the data
        t (float): positive time

    Returns:
        np.ndarray: N weights, d_n for offset n*h
    """
    _check_positive_time(t)
    r = refinement_factor(grid, t)
    fine_count = r * grid.N
    fine_step = grid.L / fine_count
    z = np.arange(fine_count) * fine_step
    sinc = periodic_sinc(z, grid)
    offsets = grid.coordinates()
    weights = np.empty(grid.N)
    for n, x in enumerate(offsets):
        weights[n] = pairwise_sum(periodic_gaussian_1d(x - z, t, grid.L) * sinc) * fine_step
    return weights


def gaussian_convolve_direct(f: RealField, t: float) -> RealField:
    """
    Real-space heat-kernel convolution, used only as an oracle for apply_semigroup.

    Args:
        f (RealField): data
        t (float): positive time

    Returns:
        RealField: periodized Gaussian convolved with f, axis by axis
    """
    _check_positive_time(t)
    N = f.grid.N
    d = direct_kernel_1d(f.grid, t)
    index = np.arange(N)
    circulant = d[(index[:, None] - index[None, :]) % N]
    out = np.einsum("ai,ijk->ajk", circulant, f.values)
    out = np.einsum("bj,ajk->abk", circulant, out)
    out = np.einsum("ck,abk->abc", circulant, out)
    return RealField(f.grid, out)


def kernel_mass(t: float, grid: GridSpec) -> float:
    """
    Grid integral of the periodized 3-D kernel over one box.

    Args:
        t (float): positive time
        grid (GridSpec): box and resolution; the rule is refined as in direct_kernel_1d

    Returns:
        float: mass, 1 up to quadrature round-off
    """
    _check_positive_time(t)
    r = refinement_factor(grid, t)
    fine_count = r * grid.N
    fine_step = grid.L / fine_count
    z = np.arange(fine_count) * fine_step
    mass_1d = pairwise_sum(periodic_gaussian_1d(z, t, grid.L)) * fine_step
    return mass_1d ** 3
