import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sfdel.chi2 import chi2_cdf, chi2_quantile, chi2_sf


def test_exponential_case_quantile():
    assert chi2_quantile(0.9, 2) == pytest.approx(-2 * math.log(0.1), abs=1e-8)
    assert chi2_quantile(0.9, 2) == pytest.approx(4.6051702, abs=1e-7)


def test_cdf_at_zero():
    assert chi2_cdf(0.0, 2) == 0.0


def test_median_df1():
    assert chi2_quantile(0.5, 1) == pytest.approx(0.4549364, abs=1e-6)


def test_critical_value_99():
    assert chi2_quantile(0.99, 2) == pytest.approx(9.2103404, abs=1e-6)


@pytest.mark.parametrize("df", [1, 2, 3, 4, 5, 10])
def test_against_scipy(df):
    xs = np.linspace(0.01, 40, 200)
    ours = np.array([chi2_cdf(x, df) for x in xs])
    assert np.allclose(ours, stats.chi2.cdf(xs, df), rtol=0, atol=1e-12)
    assert np.allclose([chi2_sf(x, df) for x in xs], stats.chi2.sf(xs, df), rtol=1e-9, atol=1e-14)
    for q in (0.01, 0.1, 0.5, 0.9, 0.95, 0.99, 0.999):
        assert chi2_quantile(q, df) == pytest.approx(stats.chi2.ppf(q, df), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.01, 30), df=st.integers(1, 5))
def test_round_trip(x, df):
    assert chi2_quantile(chi2_cdf(x, df), df) == pytest.approx(x, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0, 60), b=st.floats(0, 60), df=st.integers(1, 8))
def test_cdf_monotone(a, b, df):
    lo, hi = min(a, b), max(a, b)
    assert 0.0 <= chi2_cdf(lo, df) <= chi2_cdf(hi, df) <= 1.0


def test_invalid_arguments():
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            chi2_quantile(q, 2)
    with pytest.raises(ValueError):
        chi2_cdf(1.0, 0)
