"""Spectral estimating functions and parametric variogram models.

Every estimating function maps frequencies to ``R^p`` and is symmetric in
the frequency, ``G(w) = G(-w)``. At the true parameter its integral against
the spectral density vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExponentialVariogram",
    "GaussianVariogram",
    "Autocorrelation",
    "SpectralCDF",
    "VariogramLS",
    "g_eval",
    "variogram_gradient",
    "MomentResidual",
    "spectral_moment_residual",
]


def _lags(lags) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(lags, dtype=float))
    if arr.size == 0:
        raise ValueError("at least one lag is required")
    return arr


@dataclass(frozen=True)
class ExponentialVariogram:
    """Separable exponential model, normalized to unit variance.

    The semivariogram is ``1 - exp(-theta1 |h1| - theta2 |h2|)``, which is
    the semivariogram of a unit-variance field with correlation
    ``exp(-theta1 |h1| - theta2 |h2|)``.
    """

    p = 2
    name = "exp"

    def semivariogram(self, h, theta) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return 1.0 - np.exp(-theta[0] * np.abs(h[..., 0]) - theta[1] * np.abs(h[..., 1]))

    def variogram(self, h, theta) -> np.ndarray:
        return 2.0 * self.semivariogram(h, theta)

    def gradient(self, h, theta) -> np.ndarray:
        """Gradient of the variogram in ``theta``; trailing axis has length 2."""
        h = np.abs(np.asarray(h, dtype=float))
        e = np.exp(-theta[0] * h[..., 0] - theta[1] * h[..., 1])
        return 2.0 * np.stack([h[..., 0] * e, h[..., 1] * e], axis=-1)


@dataclass(frozen=True)
class GaussianVariogram:
    """Isotropic Gaussian model in the range only: ``2 gamma = 2 (1 - exp(-|h|^2 / theta^2))``."""

    p = 1
    name = "gauss"

    def semivariogram(self, h, theta) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return 1.0 - np.exp(-np.sum(h * h, axis=-1) / theta[0] ** 2)

    def variogram(self, h, theta) -> np.ndarray:
        return 2.0 * self.semivariogram(h, theta)

    def gradient(self, h, theta) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        r2 = np.sum(h * h, axis=-1)
        t = theta[0]
        return (-4.0 * r2 / t**3 * np.exp(-r2 / t**2))[..., None]


VariogramModel = Union[ExponentialVariogram, GaussianVariogram]


class _Family:
    p: int

    def admissible(self, theta) -> bool:
        raise NotImplementedError

    def evaluate(self, theta, omegas) -> np.ndarray:
        """Rows ``G_theta(w_k)`` for each row ``w_k`` of ``omegas``; shape (N, p)."""
        raise NotImplementedError

    def bound(self, theta) -> np.ndarray:
        """Componentwise bound on ``|G_theta|`` over all frequencies."""
        raise NotImplementedError


@dataclass(frozen=True)
class Autocorrelation(_Family):
    """``cos(h_i'w) - theta_i``: targets the autocorrelation at lags ``h_i``."""

    lags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lags", _lags(self.lags))

    @property
    def p(self) -> int:
        return self.lags.shape[0]

    def admissible(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.p,) and bool(np.all(np.abs(theta) <= 1))

    def evaluate(self, theta, omegas) -> np.ndarray:
        omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
        return np.cos(omegas @ self.lags.T) - np.asarray(theta, dtype=float)

    def bound(self, theta) -> np.ndarray:
        return 1.0 + np.abs(np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class SpectralCDF(_Family):
    """Symmetrized indicator of ``w <= t_i`` minus ``theta_i``.

    Targets the normalized spectral distribution function at the thresholds.
    """

    thresholds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "thresholds", _lags(self.thresholds))

    @property
    def p(self) -> int:
        return self.thresholds.shape[0]

    def admissible(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.p,) and bool(np.all((theta >= 0) & (theta <= 1)))

    def evaluate(self, theta, omegas) -> np.ndarray:
        w = np.atleast_2d(np.asarray(omegas, dtype=float))[:, None, :]
        t = self.thresholds[None, :, :]
        plus = np.all(w <= t, axis=-1)
        minus = np.all(-w <= t, axis=-1)
        return 0.5 * (plus.astype(float) + minus.astype(float)) - np.asarray(theta, dtype=float)

    def bound(self, theta) -> np.ndarray:
        return np.ones(self.p)


@dataclass(frozen=True)
class VariogramLS(_Family):
    """Least-squares variogram fit written as a spectral estimating function.

    ``G(w) = sum_i [1 - cos(h_i'w) - gamma(h_i; theta)] grad 2gamma(h_i; theta)``
    with ``gamma`` the normalized semivariogram of ``model``.
    """

    model: VariogramModel
    lags: np.ndarray

    def __post_init__(self):
        lags = _lags(self.lags)
        object.__setattr__(self, "lags", lags)
        if lags.shape[0] < self.model.p:
            raise ValueError("need at least as many lags as model parameters")

    @property
    def p(self) -> int:
        return self.model.p

    def admissible(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.p,) and bool(np.all(theta > 0)) and bool(np.all(np.isfinite(theta)))

    def evaluate(self, theta, omegas) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
        gam = self.model.semivariogram(self.lags, theta)  # (m,)
        grad = self.model.gradient(self.lags, theta)  # (m, p)
        resid = 1.0 - np.cos(omegas @ self.lags.T) - gam  # (N, m)
        return resid @ grad

    def bound(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        gam = self.model.semivariogram(self.lags, theta)
        grad = self.model.gradient(self.lags, theta)
        return np.full(self.p, np.sum((1.0 + gam) * np.max(np.abs(grad), axis=1)))


EstimatingFunction = Union[Autocorrelation, SpectralCDF, VariogramLS]


def g_eval(fn: EstimatingFunction, theta, omega) -> np.ndarray:
    """``G_theta(omega)`` for a single frequency."""
    if not fn.admissible(theta):
        raise ValueError(f"theta={theta!r} is not admissible for {type(fn).__name__}")
    return fn.evaluate(theta, np.asarray(omega, dtype=float)[None, :])[0]


def variogram_gradient(model: VariogramModel, theta, h) -> np.ndarray:
    return model.gradient(np.asarray(h, dtype=float), np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class MomentResidual:
    value: np.ndarray
    error: float
    converged: bool


def _window(x):
    """Smooth taper: 1 on ``|x| <= 1``, 0 on ``|x| >= 2``, infinitely differentiable."""
    y = np.clip(np.abs(x) - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(y < 1.0, np.exp(-1.0 / np.maximum(1.0 - y, 1e-300)), 0.0)
        b = np.where(y > 0.0, np.exp(-1.0 / np.maximum(y, 1e-300)), 0.0)
    return a / (a + b)


def _axis_rule(scale, radius, order):
    """Gauss-Legendre panels of width ``scale / 2`` over ``|w| <= 2 radius scale``, tapered."""
    half_width = 2.0 * radius * scale
    n_panels = int(math.ceil(8 * radius))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-half_width, half_width, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel() * _window(nodes / (radius * scale))
    keep = weights > 0
    return nodes[keep], weights[keep]


def _moment(fn, theta, density, scales, radius, order, chunk=64):
    a, wa = _axis_rule(scales[0], radius, order)
    b, wb = _axis_rule(scales[1], radius, order)
    total = np.zeros(fn.p)
    for start in range(0, a.size, chunk):
        sl = slice(start, start + chunk)
        om = np.empty((a[sl].size, b.size, 2))
        om[..., 0] = a[sl, None]
        om[..., 1] = b[None, :]
        flat = om.reshape(-1, 2)
        weight = (wa[sl, None] * wb[None, :]).ravel() * density(flat)
        total += weight @ fn.evaluate(theta, flat)
    return total


def spectral_moment_residual(fn: EstimatingFunction, theta, density, scales=(1.0, 1.0),
                             radius: float = 16.0, order: int = 6, tol: float = 1e-3) -> MomentResidual:
    """Quadrature of ``int G_theta(w) phi(w) dw`` over the whole plane.

    The integrand is tapered smoothly to zero beyond ``radius * scale`` on
    each axis and integrated by Gauss-Legendre panels; the taper kills
    oscillating tails, and the mass it removes from slowly decaying
    densities (a power series in ``1 / radius``) is extrapolated away from
    radii ``r``, ``2r`` and ``4r``. ``error`` compares this with the
    first-order extrapolation from ``2r`` and ``4r``; ``converged`` reports
    whether it is within ``tol``. ``density`` takes an ``(M, 2)`` array.
    """
    i1, i2, i4 = (_moment(fn, theta, density, scales, k * radius, order) for k in (1, 2, 4))
    value = (i1 - 6.0 * i2 + 8.0 * i4) / 3.0
    err = float(np.max(np.abs(value - (2.0 * i4 - i2))))
    return MomentResidual(value, err, err <= tol)
