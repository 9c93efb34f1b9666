"""Irregular-site DFT, periodograms and the expanding frequency grid."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sampling import SiteSample

__all__ = ["FrequencyGrid", "PeriodogramSet", "build_grid", "dft", "dft_many", "periodogram"]

MAX_GRID_POINTS = 4_000_000
_CHUNK = 2048


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequencies ``j * lam**-kappa`` for integer ``|j_i| <= floor(cstar * lam**eta)``.

    Rows of ``frequencies`` are ordered row-major over ``j`` (last coordinate
    varies fastest).
    """

    d: int
    kappa: float
    eta: float
    cstar: float
    lam: float
    jmax: int
    frequencies: np.ndarray

    @property
    def N(self) -> int:
        return self.frequencies.shape[0]

    @property
    def spacing(self) -> float:
        return self.lam ** (-self.kappa)


def build_grid(lam: float, kappa: float, eta: float, cstar: float, d: int = 2,
               max_points: int = MAX_GRID_POINTS) -> FrequencyGrid:
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    if not (kappa < eta <= 1):
        raise ValueError("eta must satisfy kappa < eta <= 1")
    if cstar <= 0 or lam <= 0 or d < 1:
        raise ValueError("cstar, lambda and d must be positive")
    if eta == 1:
        warnings.warn("eta = 1 sits on the boundary of the admissible range", stacklevel=2)
    # guard against cstar * lam**eta landing a hair below an integer
    jmax = int(math.floor(cstar * lam**eta * (1 + 1e-12)))
    count = (2 * jmax + 1) ** d
    if count > max_points:
        raise MemoryError(f"frequency grid of {count} points exceeds cap {max_points}")
    axis = np.arange(-jmax, jmax + 1)
    j = np.array(list(itertools.product(axis, repeat=d)), dtype=float).reshape(count, d)
    return FrequencyGrid(d, kappa, eta, cstar, float(lam), jmax, j * lam ** (-kappa))


def _centered(sample: SiteSample, center: bool) -> np.ndarray:
    if sample.values is None:
        raise ValueError("sample has no values")
    z = sample.values
    if not center:
        return z
    if np.all(z == z[0]):
        # the rounded mean of equal values need not equal them
        return np.zeros_like(z)
    return z - z.mean()


def dft_many(sample: SiteSample, omegas, center: bool = True) -> np.ndarray:
    """DFT ``lam^(d/2) n^-1 sum_j z_j exp(i w's_j)`` at each row of ``omegas``.

    Sums run over sites in their stored order, independently for every
    frequency, so results do not depend on chunking.
    """
    z = _centered(sample, center)[:, None]
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    scale = sample.lam ** (sample.d / 2.0) / sample.n
    out = np.empty(omegas.shape[0], dtype=complex)
    for start in range(0, omegas.shape[0], _CHUNK):
        w = omegas[start:start + _CHUNK]
        phase = sample.sites @ w.T
        re = np.add.reduce(z * np.cos(phase), axis=0)
        im = np.add.reduce(z * np.sin(phase), axis=0)
        out[start:start + _CHUNK] = scale * (re + 1j * im)
    if center:
        # centered values sum to zero; keep that exact instead of rounding noise
        out[~np.any(omegas != 0.0, axis=1)] = 0.0
    return out


def dft(sample: SiteSample, omega, center: bool = True) -> complex:
    return complex(dft_many(sample, np.asarray(omega, dtype=float)[None, :], center)[0])


@dataclass(frozen=True)
class PeriodogramSet:
    grid: FrequencyGrid
    raw: np.ndarray
    corrected: np.ndarray
    sigma_hat0: float
    c_n: float

    @property
    def bias(self) -> float:
        """The subtracted term ``lam^d / n * sigma_hat0``."""
        return self.sigma_hat0 / self.c_n


def periodogram(sample: SiteSample, grid: FrequencyGrid, center: bool = True) -> PeriodogramSet:
    """Raw and bias-corrected periodograms over ``grid``.

    The correction subtracts ``lam^d / n`` times the divisor-``n`` sample
    variance from every raw ordinate, so corrected values can be negative.
    """
    if sample.n < 2:
        raise ValueError("periodogram needs at least two sites")
    if grid.d != sample.d:
        raise ValueError("grid and sample dimensions differ")
    d_n = dft_many(sample, grid.frequencies, center)
    raw = d_n.real**2 + d_n.imag**2
    sigma_hat0 = float(np.mean(_centered(sample, True) ** 2))
    c_n = sample.n / sample.lam**sample.d
    corrected = raw - sigma_hat0 / c_n
    return PeriodogramSet(grid, raw, corrected, sigma_hat0, c_n)
