import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfdel.estimating import (Autocorrelation, ExponentialVariogram, GaussianVariogram, SpectralCDF,
                              VariogramLS, g_eval, spectral_moment_residual, variogram_gradient)
from sfdel.fields import ExponentialSeparable, spectral_density

from oracles import fd_gradient

E2 = math.exp(-2.0)
PHI = lambda w: spectral_density(ExponentialSeparable(1.0, 1.0), w)  # noqa: E731


def test_autocorrelation_at_zero_frequency():
    fn = Autocorrelation([[1, 0], [0.5, 2]])
    assert np.array_equal(g_eval(fn, [0.3, -0.2], [0, 0]), [0.7, 1.2])


def test_spectral_cdf_symmetrized_indicator():
    fn = SpectralCDF([[0.0]])
    assert g_eval(fn, [0.2], [0.5]) == pytest.approx([0.3])


def test_variogram_ls_single_lag_at_zero_frequency():
    # semivariogram convention: gamma = 1 - exp(-|h1| - |h2|), grad(2 gamma) = 2 |h| exp(...)
    # a zero lag contributes nothing and keeps m >= p
    fn = VariogramLS(ExponentialVariogram(), [[1, 1], [0, 0]])
    expected = -(1 - E2) * 2 * E2
    assert g_eval(fn, [1, 1], [0, 0]) == pytest.approx([expected, expected], abs=1e-12)
    grad = fd_gradient(ExponentialVariogram(), [1, 1], np.array([1.0, 1.0]))
    assert g_eval(fn, [1, 1], [0, 0]) == pytest.approx(-(1 - E2) * grad, rel=1e-8)


def test_exponential_gradient_value():
    assert variogram_gradient(ExponentialVariogram(), [1, 1], [1, 1]) == pytest.approx([2 * E2, 2 * E2],
                                                                                      rel=1e-14)


@pytest.mark.parametrize("model,theta", [(ExponentialVariogram(), [0.7, 2.0]), (GaussianVariogram(), [1.3])])
def test_gradient_vanishes_at_zero_lag(model, theta):
    assert np.all(variogram_gradient(model, theta, [0.0, 0.0]) == 0)
    assert model.variogram(np.zeros(2), theta) == 0


def test_gaussian_gradient_finite_difference():
    m = GaussianVariogram()
    h = np.array([1.0, 0.0])
    step = 1e-5
    fd = (m.variogram(h, [1 + step]) - m.variogram(h, [1 - step])) / (2 * step)
    assert variogram_gradient(m, [1.0], h)[0] == pytest.approx(fd, abs=1e-6)


def test_inadmissible_theta_rejected():
    with pytest.raises(ValueError):
        g_eval(Autocorrelation([[1, 0]]), [1.5], [0, 0])
    with pytest.raises(ValueError):
        g_eval(SpectralCDF([[0, 0]]), [-0.1], [0, 0])
    with pytest.raises(ValueError):
        g_eval(VariogramLS(ExponentialVariogram(), [[1, 0], [0, 1]]), [1, -1], [0, 0])
    with pytest.raises(ValueError):
        VariogramLS(ExponentialVariogram(), [[1, 0]])


def test_moment_residual_autocorrelation_at_truth():
    res = spectral_moment_residual(Autocorrelation([[1, 1]]), [E2], PHI)
    assert res.converged
    assert np.max(np.abs(res.value)) < 1e-4


def test_moment_residual_variogram_ls_at_truth():
    fn = VariogramLS(ExponentialVariogram(), [[1, 1], [1, -1]])
    res = spectral_moment_residual(fn, [1.0, 1.0], PHI)
    assert res.converged
    assert np.max(np.abs(res.value)) < 1e-4


@pytest.mark.parametrize("fn,truth", [
    (Autocorrelation([[1, 1]]), [E2]),
    (Autocorrelation([[1, 0], [0, 2]]), [math.exp(-1), math.exp(-2)]),
    (VariogramLS(ExponentialVariogram(), [[1, 0], [0, 1]]), [1.0, 1.0]),
    (VariogramLS(ExponentialVariogram(), [[1, 1], [1, -1]]), [1.0, 1.0]),
])
def test_moment_residual_grows_off_truth(fn, truth):
    at = spectral_moment_residual(fn, truth, PHI).value
    off = spectral_moment_residual(fn, np.asarray(truth) + 0.2, PHI).value
    assert np.linalg.norm(off) > np.linalg.norm(at)


def test_spectral_cdf_moment_matches_closed_form():
    # F(t) for the product Cauchy density at t = (0.5, 1)
    t = np.array([0.5, 1.0])
    cdf = np.prod(0.5 + np.arctan(t) / math.pi)
    res = spectral_moment_residual(SpectralCDF([t]), [cdf], PHI)
    assert res.converged and abs(res.value[0]) < 1e-4


def test_gaussian_variogram_ls_root():
    # Gaussian spectral density with range 1: exp(-|w|^2 / 4) / (4 pi)
    phi = lambda w: np.exp(-np.sum(w * w, axis=-1) / 4) / (4 * math.pi)  # noqa: E731
    fn = VariogramLS(GaussianVariogram(), [[0.25, 0.25], [1, 1], [2, 2]])
    res = spectral_moment_residual(fn, [1.0], phi, scales=(2.0, 2.0))
    assert res.converged and abs(res.value[0]) < 1e-6


@settings(max_examples=60, deadline=None)
@given(w=st.tuples(st.floats(-80, 80), st.floats(-80, 80)), th=st.tuples(st.floats(0.05, 5), st.floats(0.05, 5)),
       a=st.floats(-1, 1))
def test_families_are_symmetric(w, th, a):
    w = np.array(w)
    fams = [(Autocorrelation([[1, 0.5], [-2, 1]]), [a, a / 2]),
            (SpectralCDF([[0.3, -0.1], [1.0, 2.0]]), [abs(a), abs(a) / 2]),
            (VariogramLS(ExponentialVariogram(), [[1, 1], [1, -1], [0.5, 2]]), list(th)),
            (VariogramLS(GaussianVariogram(), [[0.25, 0.25], [1, 1]]), [th[0]])]
    for fn, theta in fams:
        assert np.array_equal(g_eval(fn, theta, w), g_eval(fn, theta, -w))


@pytest.mark.parametrize("fn,theta", [
    (Autocorrelation([[1, 0.5], [-2, 1]]), [0.4, -0.9]),
    (SpectralCDF([[0.3, -0.1], [1.0, 2.0]]), [0.2, 0.7]),
    (VariogramLS(ExponentialVariogram(), [[1, 1], [1, -1], [0.5, 2]]), [0.8, 1.7]),
    (VariogramLS(GaussianVariogram(), [[0.25, 0.25], [1, 1], [2, 2]]), [1.1]),
])
def test_boundedness(fn, theta):
    w = np.random.default_rng(0).uniform(-100, 100, (100_000, 2))
    G = fn.evaluate(theta, w)
    assert np.all(np.abs(G).max(axis=0) <= fn.bound(theta) + 1e-12)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        h = rng.uniform(-3, 3, 2)
        for model, theta in ((ExponentialVariogram(), rng.uniform(0.1, 3, 2)),
                             (GaussianVariogram(), rng.uniform(0.3, 3, 1))):
            g = variogram_gradient(model, theta, h)
            fd = fd_gradient(model, theta, h)
            worst = max(worst, float(np.max(np.abs(fd - g) / np.abs(g))))
    assert worst < 1e-6


@settings(max_examples=40, deadline=None)
@given(t1=st.floats(0.05, 5), t2=st.floats(0.05, 5), r=st.floats(0, 10), s=st.floats(0, 10))
def test_variogram_nondecreasing_along_rays(t1, t2, r, s):
    lo, hi = min(r, s), max(r, s)
    for m, th in ((ExponentialVariogram(), [t1, t2]), (GaussianVariogram(), [t1])):
        for axis in (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.6, -0.8])):
            assert m.variogram(lo * axis, th) <= m.variogram(hi * axis, th)
