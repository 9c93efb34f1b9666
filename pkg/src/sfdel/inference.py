"""Scaled EL statistic, tests, confidence regions and point estimates."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.spatial.distance import pdist

from .chi2 import chi2_quantile, chi2_sf
from .el import ELSolution, Status, solve_el
from .sampling import SiteSample
from .spectral import PeriodogramSet

__all__ = [
    "ZeroDenominator",
    "EmptyRegion",
    "AllInfeasible",
    "ScaledStatistic",
    "TestResult",
    "Interval",
    "GridMask",
    "scaling_factor",
    "scaled_statistic",
    "test",
    "confidence_region",
    "point_estimate",
    "coarse_start",
    "effective_df",
    "matheron_semivariogram",
]

log = logging.getLogger(__name__)


class ZeroDenominator(ZeroDivisionError):
    """The raw-periodogram weighted sum in the scaling factor vanishes."""


class EmptyRegion(RuntimeError):
    pass


class AllInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class ScaledStatistic:
    theta: np.ndarray
    neg_log_ratio: float
    a_n: float
    statistic: float
    df: int
    status: Status
    el: Optional[ELSolution] = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    critical: float
    pvalue: float
    reject: bool
    status: Status
    a_n: float


def effective_df(G: np.ndarray, rtol: float = 1e-8) -> int:
    """Numerical column rank of the estimating-function matrix over the grid.

    Linearly dependent components impose the same constraint twice, so the
    chi-square limit has as many degrees of freedom as independent ones.
    """
    sv = np.linalg.svd(G, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def _scaling(G: np.ndarray, pgram: PeriodogramSet) -> float:
    w = np.sum(G * G, axis=1)
    num = float(np.sum(w * pgram.corrected**2))
    den = float(np.sum(w * pgram.raw**2))
    if den <= 0.0:
        raise ZeroDenominator("sum of ||G||^2 I^2 over the grid is zero")
    return num / den


def scaling_factor(theta, fn, pgram: PeriodogramSet) -> float:
    """``a_n = sum ||G||^2 corrected^2 / sum ||G||^2 raw^2`` over the grid."""
    G = fn.evaluate(np.asarray(theta, dtype=float), pgram.grid.frequencies)
    return _scaling(G, pgram)


def scaled_statistic(theta, fn, pgram: PeriodogramSet, tol: float = 1e-10) -> ScaledStatistic:
    """``2 a_n(theta) (-log R_n(theta))`` together with its ingredients.

    ``df`` is the rank of the estimating function over the grid, which is
    ``p`` unless some components are linear combinations of the others.
    Inadmissible or infeasible ``theta`` yield ``statistic = inf``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not fn.admissible(theta):
        return ScaledStatistic(theta, math.inf, math.nan, math.inf, fn.p, Status.INFEASIBLE)
    G = fn.evaluate(theta, pgram.grid.frequencies)
    df = effective_df(G)
    sol = solve_el(G * pgram.corrected[:, None], tol=tol)
    try:
        a_n = _scaling(G, pgram)
    except ZeroDenominator:
        log.warning("scaling factor has zero denominator (constant data?); using a_n = 1")
        a_n = 1.0
    if not sol.converged:
        return ScaledStatistic(theta, math.inf, a_n, math.inf, df, sol.status, sol)
    return ScaledStatistic(theta, sol.neg_log_ratio, a_n, 2.0 * a_n * sol.neg_log_ratio,
                           df, sol.status, sol)


def _critical(alpha, df):
    return chi2_quantile(1.0 - alpha, df) if df > 0 else 0.0


def test(theta0, fn, pgram: PeriodogramSet, alpha: float = 0.1, df=None) -> TestResult:
    """Test ``H0: theta = theta0`` at level ``alpha``.

    The chi-square reference uses the effective degrees of freedom unless
    ``df`` is given. Infeasible ``theta0`` has empirical likelihood zero and
    is rejected with p-value 0.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    st = scaled_statistic(theta0, fn, pgram)
    df = st.df if df is None else int(df)
    critical = _critical(alpha, df)
    if not st.feasible:
        return TestResult(math.inf, df, critical, 0.0, True, st.status, st.a_n)
    pvalue = min(1.0, max(0.0, chi2_sf(st.statistic, df))) if df > 0 else 1.0
    return TestResult(st.statistic, df, critical, pvalue, st.statistic > critical,
                      st.status, st.a_n)


def _neg_log_ratio(theta, fn, pgram) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not fn.admissible(theta):
        return math.inf
    G = fn.evaluate(theta, pgram.grid.frequencies)
    return solve_el(G * pgram.corrected[:, None]).neg_log_ratio


def point_estimate(fn, pgram: PeriodogramSet, init, bounds, restarts: int = 3,
                   jitter: float = 0.1, seed: int = 0) -> np.ndarray:
    """Maximizer of the empirical likelihood over the box ``bounds``.

    Nelder-Mead from ``init`` and from ``restarts - 1`` jittered copies of it;
    the lowest ``-log R_n`` wins, earlier starts winning ties.
    """
    bounds = np.asarray(bounds, dtype=float).reshape(fn.p, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    init = np.atleast_1d(np.asarray(init, dtype=float))
    rng = np.random.default_rng(seed)

    def objective(theta):
        if np.any(theta < lo) or np.any(theta > hi):
            return math.inf
        return _neg_log_ratio(theta, fn, pgram)

    starts = [init]
    for _ in range(restarts - 1):
        starts.append(np.clip(init * (1.0 + jitter * rng.uniform(-1, 1, fn.p)) +
                              jitter * (hi - lo) * rng.uniform(-0.1, 0.1, fn.p), lo, hi))
    best, best_val = None, math.inf
    for x0 in starts:
        if not math.isfinite(objective(x0)):
            continue
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 2000})
        if res.fun < best_val:
            best, best_val = np.atleast_1d(res.x), float(res.fun)
    if best is None:
        # all starts infeasible: coarse scan of the box for a feasible start
        axes = [np.linspace(a, b, 11)[1:-1] for a, b in bounds]
        for point in np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, fn.p):
            if math.isfinite(objective(point)):
                return point_estimate(fn, pgram, point, bounds, restarts=1)
        raise AllInfeasible("no feasible parameter found in the search box")
    return best


def coarse_start(fn, pgram: PeriodogramSet, bounds, points: int = 9) -> np.ndarray:
    """Node of a ``points``-per-axis interior grid over ``bounds`` minimizing ``-log R_n``."""
    bounds = np.asarray(bounds, dtype=float).reshape(fn.p, 2)
    axes = [np.linspace(a, b, points + 2)[1:-1] for a, b in bounds]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, fn.p)
    values = [_neg_log_ratio(t, fn, pgram) for t in nodes]
    best = int(np.argmin(values))
    if not math.isfinite(values[best]):
        raise AllInfeasible("no feasible parameter found in the search box")
    return nodes[best]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    alpha: float
    estimate: float
    lo_open: bool = False
    hi_open: bool = False

    def contains(self, theta) -> bool:
        t = float(np.ravel(theta)[0])
        return self.lo <= t <= self.hi


@dataclass(frozen=True)
class GridMask:
    axes: tuple
    accepted: np.ndarray
    statistic: np.ndarray
    alpha: float
    estimate: Optional[np.ndarray] = None

    def contains(self, theta) -> bool:
        """Acceptance at the grid node nearest ``theta``."""
        idx = tuple(int(np.argmin(np.abs(ax - t))) for ax, t in zip(self.axes, np.ravel(theta)))
        return bool(self.accepted[idx])

    def projections(self) -> list:
        """Per-parameter ``(lo, hi)`` covering all accepted nodes."""
        if not self.accepted.any():
            return [(math.nan, math.nan)] * len(self.axes)
        out = []
        for k, ax in enumerate(self.axes):
            other = tuple(i for i in range(len(self.axes)) if i != k)
            hit = self.accepted.any(axis=other) if other else self.accepted
            out.append((float(ax[hit].min()), float(ax[hit].max())))
        return out


def _crossing(f, start, stop, step, xtol):
    """First point from ``start`` toward ``stop`` where ``f`` turns positive."""
    direction = 1.0 if stop > start else -1.0
    inside = start
    x = start
    while direction * (stop - x) > 0:
        x = x + direction * step
        if direction * (x - stop) > 0:
            x = stop
        if f(x) > 0:
            a, b = inside, x
            while abs(b - a) > xtol:
                mid = 0.5 * (a + b)
                if f(mid) > 0:
                    b = mid
                else:
                    a = mid
            return a, False
        inside = x
    return stop, True


def confidence_region(fn, pgram: PeriodogramSet, alpha: float, bounds, init=None,
                      resolution: int = 61, xtol: float = 1e-4, scan_steps: int = 100):
    """Confidence region ``{theta : test(theta, alpha) does not reject}``.

    For one parameter the interval is found by stepping outward from the
    point estimate until the statistic exceeds the critical value, then
    bisecting to ``xtol``. For two parameters the statistic is evaluated on
    a ``resolution`` x ``resolution`` grid over ``bounds``.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    bounds = np.asarray(bounds, dtype=float).reshape(fn.p, 2)

    def excess(theta):
        # same reference distribution as ``test``: the effective df at theta
        st = scaled_statistic(theta, fn, pgram)
        return st.statistic - _critical(alpha, st.df)

    if fn.p == 1:
        lo, hi = bounds[0]
        try:
            x0 = coarse_start(fn, pgram, bounds, 21) if init is None else np.ravel(init)[:1]
            est = float(point_estimate(fn, pgram, x0, bounds)[0])
        except AllInfeasible as exc:
            raise EmptyRegion(str(exc)) from exc

        def f(t):
            return excess([t])

        start = est
        if f(start) > 0:
            grid = np.linspace(lo, hi, scan_steps + 1)
            ok = [t for t in grid if f(t) <= 0]
            if not ok:
                raise EmptyRegion("no parameter in the search box is accepted")
            start = min(ok, key=lambda t: abs(t - est))
        step = (hi - lo) / scan_steps
        left, lo_open = _crossing(f, start, lo, step, xtol)
        right, hi_open = _crossing(f, start, hi, step, xtol)
        return Interval(left, right, alpha, est, lo_open, hi_open)

    if fn.p != 2:
        raise ValueError("confidence regions are supported for p in {1, 2}")
    axes = tuple(np.linspace(a, b, resolution) for a, b in bounds)
    stat = np.empty((resolution, resolution))
    accepted = np.zeros((resolution, resolution), dtype=bool)
    for i, t1 in enumerate(axes[0]):
        for j, t2 in enumerate(axes[1]):
            st = scaled_statistic([t1, t2], fn, pgram)
            stat[i, j] = st.statistic
            accepted[i, j] = st.statistic <= _critical(alpha, st.df)
    if not accepted.any():
        raise EmptyRegion("no grid point is accepted")
    if init is None:
        i, j = np.unravel_index(np.argmin(stat), stat.shape)
        init = [axes[0][i], axes[1][j]]
    try:
        est = point_estimate(fn, pgram, init, bounds)
    except AllInfeasible:
        est = None
    return GridMask(axes, accepted, stat, alpha, est)


def matheron_semivariogram(sample: SiteSample, n_bins: int = 10,
                           max_dist_fraction: float = 0.5) -> list:
    """Binned Matheron semivariogram estimate.

    Distances up to ``max_dist_fraction`` of the largest inter-site distance
    are split into ``n_bins`` equal bins. Each entry holds the bin midpoint,
    ``sum (Z_i - Z_j)^2 / (2 * count)`` (``None`` for empty bins) and the
    pair count.
    """
    if sample.n < 2:
        raise ValueError("need at least two sites")
    if sample.values is None:
        raise ValueError("sample has no values")
    dist = pdist(sample.sites)
    sq = pdist(sample.values[:, None], metric="sqeuclidean")
    cutoff = max_dist_fraction * dist.max()
    edges = np.linspace(0.0, cutoff, n_bins + 1)
    which = np.digitize(dist, edges[1:-1], right=True)
    keep = dist <= cutoff
    rows = []
    for b in range(n_bins):
        sel = keep & (which == b)
        count = int(sel.sum())
        avg = float(sq[sel].sum() / (2.0 * count)) if count else None
        rows.append({"midpoint": float(0.5 * (edges[b] + edges[b + 1])),
                     "average": avg, "count": count})
    return rows


test.__test__ = False  # keep pytest from collecting the public ``test`` function
