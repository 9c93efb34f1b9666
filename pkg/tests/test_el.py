import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sfdel.chi2 import chi2_quantile
from sfdel.el import Status, el_at, log_star, solve_el
from sfdel.estimating import Autocorrelation
from sfdel.fields import ExponentialSeparable, FieldSpec, simulate_field
from sfdel.sampling import PrototypeRegion, Seed, Uniform, draw_sites
from sfdel.spectral import build_grid, periodogram

from oracles import primal_oracle


def test_two_point_symmetric():
    sol = solve_el([[-1.0], [1.0]])
    assert sol.status is Status.CONVERGED
    assert sol.beta == pytest.approx([0.0], abs=1e-10)
    assert sol.weights == pytest.approx([0.5, 0.5], abs=1e-10)
    assert sol.neg_log_ratio == pytest.approx(0.0, abs=1e-10)


def test_two_point_asymmetric():
    sol = solve_el([[-1.0], [3.0]])
    assert sol.status is Status.CONVERGED
    assert sol.beta == pytest.approx([1 / 3], abs=1e-10)
    assert sol.weights == pytest.approx([0.75, 0.25], abs=1e-10)
    assert sol.neg_log_ratio == pytest.approx(math.log(4 / 3), abs=1e-10)


def test_zero_outside_hull_is_infeasible():
    sol = solve_el([[1.0], [2.0], [3.0]])
    assert sol.status is Status.INFEASIBLE
    assert math.isinf(sol.neg_log_ratio)
    assert sol.weights.sum() == pytest.approx(1.0)


def test_six_point_against_primal_oracle():
    g = [-2.0, -0.5, 0.3, 0.7, 1.1, 1.9]
    sol = solve_el(np.array(g)[:, None])
    val, _ = primal_oracle(g)
    assert sol.neg_log_ratio == pytest.approx(-val, abs=1e-5)


def test_all_zero_rows_degenerate():
    sol = solve_el(np.zeros((10, 2)))
    assert sol.status is Status.CONVERGED and sol.neg_log_ratio == 0.0
    assert np.all(sol.beta == 0) and np.allclose(sol.weights, 0.1)


def test_invalid_problems():
    with pytest.raises(ValueError):
        solve_el([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        solve_el([[1.0], [np.nan], [2.0]])


def test_log_star_is_smooth_at_threshold():
    eps = 0.1
    below = log_star(np.array([eps - 1e-9]), eps)
    above = log_star(np.array([eps + 1e-9]), eps)
    for a, b in zip(below, above):
        assert a[0] == pytest.approx(b[0], rel=1e-6)


def test_rank_deficient_columns():
    rng = np.random.default_rng(1)
    col = rng.normal(size=200) + 0.05
    g = np.column_stack([col, 2 * col])
    sol = solve_el(g)
    single = solve_el(col[:, None])
    assert sol.status is Status.CONVERGED
    assert sol.neg_log_ratio == pytest.approx(single.neg_log_ratio, abs=1e-9)


@st.composite
def feasible_instances(draw, max_n=7, p=1):
    n = draw(st.integers(p + 1, max_n))
    g = np.array(draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=n * p, max_size=n * p)))
    g = g.reshape(n, p)
    return g


@settings(max_examples=80, deadline=None)
@given(g=feasible_instances())
def test_matches_primal_oracle(g):
    assume(g.min() < -0.05 and g.max() > 0.05)  # zero well inside the hull
    sol = solve_el(g)
    assert sol.status is Status.CONVERGED
    val, _ = primal_oracle(g)
    assert sol.neg_log_ratio == pytest.approx(-val, abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(5, 300), p=st.integers(1, 3),
       c=st.floats(1e-3, 1e3), shift=st.floats(-0.3, 0.3))
def test_solution_invariants(seed, n, p, c, shift):
    g = np.random.default_rng(seed).normal(size=(n, p)) + shift
    sol = solve_el(g)
    if sol.status is not Status.CONVERGED:
        return
    w = sol.weights
    assert np.all(w >= 0) and abs(w.sum() - 1.0) <= 1e-10
    z = 1.0 + g @ sol.beta
    assert np.all(z > 0)
    assert np.allclose(w, 1.0 / (n * z), rtol=1e-8)
    row_max = np.max(np.linalg.norm(g, axis=1))
    assert np.linalg.norm(w @ g) <= 1e-10 * (1 + row_max)
    # duality: primal value equals -neg_log_ratio
    assert np.sum(np.log(n * w)) == pytest.approx(-sol.neg_log_ratio, abs=1e-8)
    scaled = solve_el(c * g)
    assert scaled.neg_log_ratio == pytest.approx(sol.neg_log_ratio, abs=1e-9, rel=1e-9)
    assert np.allclose(scaled.weights, w, atol=1e-9)
    assert np.allclose(scaled.beta * c, sol.beta, rtol=1e-6, atol=1e-9)


def test_zero_ratio_iff_zero_means():
    g = np.array([[-1.0, 2.0], [1.0, -2.0], [3.0, 0.5], [-3.0, -0.5]])
    assert solve_el(g).neg_log_ratio == pytest.approx(0.0, abs=1e-12)
    assert solve_el(g + 0.1).neg_log_ratio > 1e-6


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(4, 50), k=st.integers(0, 49))
def test_appending_negated_row_keeps_feasibility(seed, n, k):
    g = np.random.default_rng(seed).normal(size=(n, 1)) + 0.2
    sol = solve_el(g)
    assume(sol.status is Status.CONVERGED)
    k = k % n
    more = solve_el(np.vstack([g, -g[k:k + 1]]))
    assert more.status is Status.CONVERGED


def _field_pgram(seed=0, values_scale=1.0, n=150):
    s = draw_sites(Uniform(), PrototypeRegion.unit(2), 12.0, n, Seed(seed, 0))
    z = simulate_field(FieldSpec(ExponentialSeparable(1, 1)), s, Seed(seed, 0))
    return s.with_values(values_scale * z)


def test_el_at_constant_field():
    s = draw_sites(Uniform(), PrototypeRegion.unit(2), 12.0, 50, Seed(0, 0)).with_values(np.full(50, 2.0))
    sol = el_at([0.3], Autocorrelation([[1, 0]]), periodogram(s, build_grid(12, 0.2, 0.8, 1, 2)))
    assert sol.status is Status.CONVERGED and sol.neg_log_ratio == 0 and np.all(sol.beta == 0)


def test_el_at_far_theta_rejected():
    grid = build_grid(12, 0.2, 0.8, 1, 2)
    pg = periodogram(_field_pgram(n=400), grid)
    fn = Autocorrelation([[1, 0], [0, 1]])
    # theta = 5 is outside the admissible set, so bypass el_at's check
    sol = solve_el(fn.evaluate([5.0, 5.0], grid.frequencies) * pg.corrected[:, None])
    assert sol.status in (Status.INFEASIBLE, Status.CONVERGED)
    assert sol.neg_log_ratio > chi2_quantile(0.99, 2)


def test_el_at_scale_invariance():
    grid = build_grid(12, 0.2, 0.8, 1, 2)
    fn = Autocorrelation([[1, 0], [0, 1]])
    a = el_at([0.35, 0.4], fn, periodogram(_field_pgram(3), grid))
    b = el_at([0.35, 0.4], fn, periodogram(_field_pgram(3, 3.0), grid))
    assert a.neg_log_ratio == pytest.approx(b.neg_log_ratio, abs=1e-9)
