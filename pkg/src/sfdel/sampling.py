"""Sampling regions and stochastic site designs.

Sites are generated as ``s_i = lambda * X_i`` where the ``X_i`` are i.i.d.
draws from a design density supported on a prototype rectangle contained
in ``(-1/2, 1/2]^d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

__all__ = [
    "Seed",
    "PrototypeRegion",
    "Uniform",
    "TruncatedGaussianMixture",
    "SiteSample",
    "SamplingError",
    "draw_sites",
    "density_at",
    "default_mixture",
]

MAX_ATTEMPTS_PER_SITE = 10**6


class SamplingError(RuntimeError):
    """Raised when the rejection sampler exceeds its attempt budget."""


@dataclass(frozen=True)
class Seed:
    """Seed plus sub-stream index.

    Identical ``(seed, stream)`` pairs always produce identical draws.
    Independent consumers within one replicate (sites, field noise) ask
    for different ``purpose`` keys so their streams never overlap.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")

    def generator(self, purpose: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, purpose))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class PrototypeRegion:
    """Axis-aligned rectangle ``prod_i (lo_i, hi_i]`` inside ``(-1/2, 1/2]^d``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be nonempty and of equal length")
        for a, b in zip(lo, hi):
            if not (a < 0.0 <= b):
                raise ValueError(f"region must contain the origin, got ({a}, {b}]")
            if a < -0.5 or b > 0.5 or b - a > 1.0:
                raise ValueError(f"region side ({a}, {b}] not inside (-1/2, 1/2]")

    @classmethod
    def unit(cls, d: int = 2) -> "PrototypeRegion":
        return cls((-0.5,) * d, (0.5,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x) -> np.ndarray:
        """Membership test for points in prototype coordinates (last axis = d)."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((x > lo) & (x <= hi), axis=-1)


@dataclass(frozen=True)
class Uniform:
    """Uniform design on the prototype region."""


@dataclass(frozen=True)
class TruncatedGaussianMixture:
    """Gaussian mixture truncated to (and renormalized on) the region."""

    weights: tuple
    means: tuple
    covariances: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a probability vector")
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)
        if means.shape[0] != w.size or covs.shape != (w.size, means.shape[1], means.shape[1]):
            raise ValueError("weights, means and covariances disagree in shape")
        for c in covs:
            if not np.allclose(c, c.T):
                raise ValueError("covariance matrices must be symmetric")
            if np.any(np.linalg.eigvalsh(c) <= 0):
                raise ValueError("covariance matrices must be positive definite")

    @property
    def d(self) -> int:
        return len(self.means[0])

    def _arrays(self):
        return (
            np.asarray(self.weights, dtype=float),
            np.asarray(self.means, dtype=float),
            np.asarray(self.covariances, dtype=float),
        )

    def untruncated_pdf(self, x) -> np.ndarray:
        w, means, covs = self._arrays()
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for wk, mk, ck in zip(w, means, covs):
            out += wk * stats.multivariate_normal(mk, ck).pdf(x).reshape(out.shape)
        return out

    def region_mass(self, region: PrototypeRegion) -> float:
        """Probability the untruncated mixture assigns to ``region``."""
        w, means, covs = self._arrays()
        lo = np.asarray(region.lo)
        hi = np.asarray(region.hi)
        total = 0.0
        for wk, mk, ck in zip(w, means, covs):
            if np.allclose(ck, np.diag(np.diag(ck))):
                sd = np.sqrt(np.diag(ck))
                mass = np.prod(stats.norm.cdf((hi - mk) / sd) - stats.norm.cdf((lo - mk) / sd))
            else:
                mvn = stats.multivariate_normal(mk, ck)
                mass = mvn.cdf(hi, lower_limit=lo)
            total += wk * float(mass)
        return total


SamplingDesign = Union[Uniform, TruncatedGaussianMixture]


def default_mixture() -> TruncatedGaussianMixture:
    """``0.5 N((0,0), I) + 0.5 N((1/4,1/4), 2I)`` used for the nonuniform design."""
    return TruncatedGaussianMixture(
        weights=(0.5, 0.5),
        means=((0.0, 0.0), (0.25, 0.25)),
        covariances=(np.eye(2).tolist(), (2 * np.eye(2)).tolist()),
    )


@dataclass
class SiteSample:
    """Sites in ``lambda * region`` with (optional) observed values."""

    lam: float
    region: PrototypeRegion
    sites: np.ndarray
    values: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sites = np.atleast_2d(np.asarray(self.sites, dtype=float))
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.sites.shape[0] < 1:
            raise ValueError("need at least one site")
        if self.sites.shape[1] != self.region.d:
            raise ValueError(
                f"sites have dimension {self.sites.shape[1]}, region has {self.region.d}"
            )
        if not np.all(self.region.contains(self.sites / self.lam)):
            raise ValueError("every site must lie in lambda * region")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float).ravel()
            if self.values.size != self.sites.shape[0]:
                raise ValueError("sites and values differ in length")

    @property
    def n(self) -> int:
        return self.sites.shape[0]

    @property
    def d(self) -> int:
        return self.sites.shape[1]

    def with_values(self, values) -> "SiteSample":
        return SiteSample(self.lam, self.region, self.sites, values, dict(self.meta))


def _draw_prototype(design, region: PrototypeRegion, n: int, rng: np.random.Generator):
    lo = np.asarray(region.lo)
    hi = np.asarray(region.hi)
    if isinstance(design, Uniform):
        # (lo, hi] from [0, 1): map u -> hi - u * (hi - lo)
        u = rng.random((n, region.d))
        return hi - u * (hi - lo)

    if design.d != region.d:
        raise ValueError("design and region dimensions differ")
    w, means, covs = design._arrays()
    chols = [np.linalg.cholesky(c) for c in covs]
    accepted = []
    n_acc = 0
    attempts = 0
    batch = max(64, 4 * n)
    while n_acc < n:
        comp = rng.choice(w.size, size=batch, p=w)
        z = rng.standard_normal((batch, region.d))
        x = np.empty_like(z)
        for k in range(w.size):
            idx = comp == k
            x[idx] = means[k] + z[idx] @ chols[k].T
        ok = region.contains(x)
        attempts += batch
        accepted.append(x[ok])
        n_acc += int(ok.sum())
        if attempts > MAX_ATTEMPTS_PER_SITE * (n_acc + 1):
            raise SamplingError(
                f"rejection sampler accepted {n_acc} of {attempts} draws; "
                "the design puts negligible mass on the region"
            )
    return np.concatenate(accepted)[:n]


def draw_sites(design: SamplingDesign, region: PrototypeRegion, lam: float, n: int,
               seed: Seed) -> SiteSample:
    """Draw ``n`` i.i.d. sites from ``design`` on ``region`` scaled by ``lam``.

    Parameters
    ----------
    design : Uniform or TruncatedGaussianMixture
    region : PrototypeRegion
    lam : float
        Region scale, at least 1.
    n : int
        Number of sites, at least 1.
    seed : Seed
        Source of randomness; the draw is a pure function of all arguments.

    Returns
    -------
    SiteSample
        Sample without values.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    x = _draw_prototype(design, region, n, seed.generator(0))
    return SiteSample(float(lam), region, lam * x)


def density_at(design: SamplingDesign, region: PrototypeRegion, x) -> float:
    """Design density at prototype point ``x``, renormalized on the region."""
    x = np.asarray(x, dtype=float)
    if not region.contains(x):
        return 0.0
    if isinstance(design, Uniform):
        return 1.0 / region.volume
    return float(design.untruncated_pdf(x[None, :])[0] / design.region_mass(region))
