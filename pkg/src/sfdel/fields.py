"""Stationary random fields at irregular sites.

Gaussian fields are simulated exactly by a dense Cholesky factor of the
site covariance matrix. The chi-square transform squares a unit-variance
Gaussian field and rescales it so that ``E Z = shift`` and ``Var Z = theta1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .sampling import Seed, SiteSample

__all__ = [
    "ExponentialSeparable",
    "GaussianIsotropic",
    "GaussianIdentity",
    "ChiSqShifted",
    "FieldSpec",
    "FactorizationError",
    "correlation",
    "covariance_matrix",
    "simulate_field",
    "spectral_density",
]

JITTERS = (0.0, 1e-12, 1e-10, 1e-8)


class FactorizationError(np.linalg.LinAlgError):
    """Covariance matrix not factorizable even after maximal jitter."""


@dataclass(frozen=True)
class ExponentialSeparable:
    """``rho(h) = exp(-theta1 |h1| - theta2 |h2|)``."""

    theta1: float = 1.0
    theta2: float = 1.0

    def __post_init__(self):
        if self.theta1 <= 0 or self.theta2 <= 0:
            raise ValueError("exponential decay rates must be positive")

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return np.exp(-self.theta1 * np.abs(h[..., 0]) - self.theta2 * np.abs(h[..., 1]))

    def matrix(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        w = np.array([self.theta1, self.theta2])
        return np.exp(-cdist(a * w, b * w, metric="cityblock"))


@dataclass(frozen=True)
class GaussianIsotropic:
    """``rho(h) = exp(-||h||^2 / theta2^2)``."""

    theta2: float = 1.0

    def __post_init__(self):
        if self.theta2 <= 0:
            raise ValueError("range must be positive")

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return np.exp(-np.sum(h * h, axis=-1) / self.theta2**2)

    def matrix(self, a, b) -> np.ndarray:
        return np.exp(-cdist(a, b, metric="sqeuclidean") / self.theta2**2)


CorrelationModel = Union[ExponentialSeparable, GaussianIsotropic]


@dataclass(frozen=True)
class GaussianIdentity:
    pass


@dataclass(frozen=True)
class ChiSqShifted:
    theta1: float = 7.5
    shift: float = 40.23

    def __post_init__(self):
        if self.theta1 <= 0:
            raise ValueError("theta1 must be positive")


@dataclass(frozen=True)
class FieldSpec:
    model: CorrelationModel
    mean: float = 0.0
    variance: float = 1.0
    transform: Union[GaussianIdentity, ChiSqShifted] = GaussianIdentity()

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")


def correlation(model: CorrelationModel, h) -> float:
    return float(model(h))


def covariance_matrix(model: CorrelationModel, variance: float, sites) -> np.ndarray:
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    c = variance * model.matrix(sites, sites)
    # exact symmetry regardless of how the distance kernel rounds
    c = np.triu(c) + np.triu(c, 1).T
    np.fill_diagonal(c, variance)
    return c


def _cholesky(cov: np.ndarray, variance: float) -> np.ndarray:
    eye = np.eye(cov.shape[0])
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(cov + jitter * variance * eye)
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"covariance of {cov.shape[0]} sites not positive definite after jitter "
        f"{JITTERS[-1]:g} * variance; sites are probably (near) coincident"
    )


def simulate_field(spec: FieldSpec, sample: SiteSample, seed: Seed) -> np.ndarray:
    """Simulate field values at the sites of ``sample``.

    The Gaussian part uses the ``Seed`` sub-stream reserved for field noise,
    so the same ``Seed`` can be handed to :func:`~sfdel.sampling.draw_sites`
    without the two draws sharing random numbers.
    """
    sites = sample.sites
    eps = seed.generator(1).standard_normal(sites.shape[0])
    if isinstance(spec.transform, ChiSqShifted):
        chol = _cholesky(covariance_matrix(spec.model, 1.0, sites), 1.0)
        y = chol @ eps
        t = spec.transform
        return np.sqrt(t.theta1 / 2.0) * (y * y - 1.0) + t.shift
    chol = _cholesky(covariance_matrix(spec.model, spec.variance, sites), spec.variance)
    return spec.mean + chol @ eps


def spectral_density(model: ExponentialSeparable, omega) -> np.ndarray:
    """Spectral density of the exponential separable correlation.

    ``phi(w) = prod_i (theta_i / pi) / (theta_i^2 + w_i^2)``; integrates to 1.
    """
    if not isinstance(model, ExponentialSeparable):
        raise TypeError("closed-form spectral density only for ExponentialSeparable")
    w = np.asarray(omega, dtype=float)
    t1, t2 = model.theta1, model.theta2
    return (t1 / np.pi) / (t1**2 + w[..., 0] ** 2) * (t2 / np.pi) / (t2**2 + w[..., 1] ** 2)
