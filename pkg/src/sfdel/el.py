"""Empirical likelihood for a mean-zero constraint on vectors ``g_k``.

The weights maximizing ``prod N p_k`` subject to ``sum p_k g_k = 0`` are
``p_k = 1 / (N (1 + beta'g_k))`` where ``beta`` minimizes the convex dual
``-sum log*(1 + beta'g_k)``. ``log*`` is the logarithm continued below
``1/N`` by its second-order Taylor expansion, which keeps the objective
finite and smooth along the whole Newton path. When zero is outside the
convex hull of the ``g_k`` the dual is unbounded below; any iterate
``beta`` with ``beta'g_k >= 0`` for every row, strictly for some, certifies this.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Status", "ELSolution", "solve_el", "el_at", "log_star"]

log = logging.getLogger(__name__)

ARMIJO = 1e-4


class Status(str, enum.Enum):
    CONVERGED = "converged"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class ELSolution:
    beta: np.ndarray
    weights: np.ndarray
    neg_log_ratio: float
    status: Status
    residual: float
    iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def log_star(z, eps):
    """Log for ``z >= eps``, quadratic continuation below; returns (value, d1, d2)."""
    z = np.asarray(z, dtype=float)
    lo = z < eps
    safe = np.where(lo, eps, z)
    val = np.log(safe)
    d1 = 1.0 / safe
    d2 = -1.0 / (safe * safe)
    if np.any(lo):
        r = z[lo] / eps
        val[lo] = math.log(eps) - 1.5 + 2.0 * r - 0.5 * r * r
        d1[lo] = (2.0 - r) / eps
        d2[lo] = -1.0 / (eps * eps)
    return val, d1, d2


def _newton_step(hess, grad, tr):
    """Newton direction, restricted to the range of a (near) singular Hessian.

    Collinear columns of ``g`` make the Hessian singular; the EL ratio then
    only depends on the component of ``beta`` in the column space.
    """
    vals, vecs = np.linalg.eigh(hess)
    floor = 1e-12 * tr
    inv = np.where(vals > floor, 1.0 / np.where(vals > floor, vals, 1.0), 0.0)
    return -(vecs @ (inv * (vecs.T @ grad)))


def _newton(g: np.ndarray, eps: float, tol: float, max_iter: int):
    """Damped Newton on the dual; returns (beta, iterations, outcome)."""
    p = g.shape[1]
    beta = np.zeros(p)
    val, d1, d2 = log_star(1.0 + g @ beta, eps)
    obj = -val.sum()
    for it in range(1, max_iter + 1):
        grad = -(g.T @ d1)
        hess = (g.T * -d2) @ g
        tr = np.trace(hess)
        if tr <= 0:
            return beta, it, "converged"
        step = _newton_step(hess, grad, tr)
        decrement = -grad @ step
        if decrement <= tol * tol:
            return beta, it, "converged"
        # near the optimum rounding noise in the objective defeats the
        # Armijo test; the full step is safe there
        backtrack = decrement > 1e-8
        t = 1.0
        while True:
            cand = beta + t * step
            val_c, d1_c, d2_c = log_star(1.0 + g @ cand, eps)
            obj_c = -val_c.sum()
            if not backtrack or obj_c <= obj - ARMIJO * t * decrement:
                break
            t *= 0.5
            if t < 1e-12:
                # no further descent possible in floating point
                return beta, it, "converged"
        beta, obj, d1, d2 = cand, obj_c, d1_c, d2_c
        gb = g @ beta
        if gb.min() >= 0.0 and gb.max() > 1e-12:
            return beta, it, "separated"
    return beta, max_iter, "max_iter"


def solve_el(g, tol: float = 1e-10, max_iter: int = 100) -> ELSolution:
    """Solve the empirical likelihood problem for the rows of ``g``.

    Parameters
    ----------
    g : array_like, shape (N, p)
        Estimating-equation values, one row per frequency.
    tol : float
        Tolerance on the Newton decrement and on the constraint residual
        (the latter relative to ``1 + max row norm``).
    max_iter : int
        Newton iteration cap.

    Returns
    -------
    ELSolution
        ``neg_log_ratio`` is ``sum log(1 + beta'g_k)`` when converged and
        ``inf`` otherwise; infeasible problems report uniform weights.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    N, p = g.shape
    if N <= p:
        raise ValueError(f"need more rows than columns, got {N} x {p}")
    if not np.all(np.isfinite(g)):
        raise ValueError("estimating-equation values must be finite")

    uniform = np.full(N, 1.0 / N)
    nonzero = np.any(g != 0.0, axis=1)
    if not nonzero.any():
        return ELSolution(np.zeros(p), uniform, 0.0, Status.CONVERGED, 0.0)

    eps = 1.0 / N
    # dividing by the column scale leaves the solution invariant and keeps
    # the Newton systems well conditioned
    scale = np.max(np.abs(g), axis=0)
    scale[scale == 0] = 1.0
    gs = g[nonzero] / scale
    beta_s, iterations, outcome = _newton(gs, eps, tol, max_iter)
    beta = beta_s / scale

    z = 1.0 + gs @ beta_s
    row_max = float(np.max(np.linalg.norm(g, axis=1)))
    if outcome == "separated":
        return ELSolution(beta, uniform, math.inf, Status.INFEASIBLE, math.nan, iterations)
    if outcome == "max_iter":
        log.debug("EL Newton hit max_iter=%d", max_iter)
        return ELSolution(beta, uniform, math.inf, Status.MAX_ITERATIONS, math.nan, iterations)
    if np.any(z < eps):
        return ELSolution(beta, uniform, math.inf, Status.INFEASIBLE, math.nan, iterations)

    full_z = np.ones(N)
    full_z[nonzero] = z
    weights = 1.0 / (N * full_z)
    residual = float(np.linalg.norm(weights @ g))
    total = weights.sum()
    if residual > tol * (1.0 + row_max) or abs(total - 1.0) > 1e-8:
        return ELSolution(beta, uniform, math.inf, Status.INFEASIBLE, residual, iterations)
    weights = weights / total
    neg_log_ratio = float(np.sum(np.log(z)))
    return ELSolution(beta, weights, max(neg_log_ratio, 0.0), Status.CONVERGED, residual, iterations)


def el_at(theta, fn, pgram, tol: float = 1e-10, max_iter: int = 100) -> ELSolution:
    """EL solution at ``theta`` with ``g_k = G_theta(w_k) * corrected_k``."""
    G = fn.evaluate(np.asarray(theta, dtype=float), pgram.grid.frequencies)
    return solve_el(G * pgram.corrected[:, None], tol=tol, max_iter=max_iter)
