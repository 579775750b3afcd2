import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from statsmodels.stats.multitest import multipletests

from ratingprecision.core import DomainError
from ratingprecision.stats import (
    betainc,
    f_cdf,
    f_sf,
    holm_adjust,
    normal_cdf,
    student_t_cdf,
    student_t_ppf,
    welch_t_test,
    welch_t_test_samples,
)

from reference_values import F_REF, HOLM_GOLDEN, NORMAL_REF, T_REF, WELCH_GOLDEN


@pytest.mark.parametrize("z, ref", NORMAL_REF)
def test_normal_cdf_reference(z, ref):
    assert normal_cdf(z) == pytest.approx(ref, abs=1e-10)


def test_normal_cdf_vectorised():
    z = np.array([-1.0, 0.0, 1.5])
    np.testing.assert_allclose(normal_cdf(z), sps.norm.cdf(z), atol=1e-12)
    assert normal_cdf(0.0) == 0.5


@settings(max_examples=200)
@given(st.floats(-30, 30))
def test_normal_cdf_reflection(x):
    assert normal_cdf(x) + normal_cdf(-x) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("t, df, ref", T_REF)
def test_student_t_cdf_reference(t, df, ref):
    assert student_t_cdf(t, df) == pytest.approx(ref, abs=1e-8)


def test_student_t_examples():
    assert student_t_cdf(0.0, 7.3) == 0.5
    assert student_t_cdf(2.086, 20) == pytest.approx(0.975, abs=1e-3)
    for t in (-2.0, 0.7, 1.8):
        assert student_t_cdf(t, 1e6) == pytest.approx(normal_cdf(t), abs=1e-3)
    with pytest.raises(DomainError):
        student_t_cdf(1.0, 0)


@pytest.mark.parametrize("q, df", [(0.975, 20), (0.9, 3.5), (0.025, 40), (0.999, 2)])
def test_student_t_ppf(q, df):
    assert student_t_ppf(q, df) == pytest.approx(sps.t.ppf(q, df), abs=1e-9)


@pytest.mark.parametrize("x, d1, d2, ref", F_REF)
def test_f_cdf_reference(x, d1, d2, ref):
    assert f_cdf(x, d1, d2) == pytest.approx(ref, abs=1e-8)
    assert f_sf(x, d1, d2) == pytest.approx(1.0 - ref, abs=1e-8)


def test_f_cdf_examples():
    for d in (1.0, 4.0, 29.0):
        assert f_cdf(1.0, d, d) == pytest.approx(0.5, abs=1e-12)
    assert f_cdf(0.0, 3, 5) == 0.0
    assert f_cdf(4.026, 9, 9) == pytest.approx(0.975, abs=1e-3)
    with pytest.raises(DomainError):
        f_cdf(1.0, 0, 3)


def test_f_sf_tail_precision():
    assert f_sf(200.0, 20, 20) == pytest.approx(sps.f.sf(200.0, 20, 20), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 50), st.floats(0.5, 50), st.floats(0.0, 1.0))
def test_betainc_matches_scipy(a, b, x):
    from scipy.special import betainc as ref

    assert betainc(a, b, x) == pytest.approx(ref(a, b, x), abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-8, 8), min_size=2, max_size=12, unique=True),
    st.floats(0.5, 60),
    st.floats(0.5, 60),
)
def test_cdfs_monotone(xs, d1, d2):
    xs = sorted(xs)
    vals = [normal_cdf(x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    vals = [student_t_cdf(x, d1) for x in xs]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    pos = sorted(abs(x) for x in xs)
    vals = [f_cdf(x, d1, d2) for x in pos]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_welch_golden():
    res = welch_t_test(2.1, 0.5, 10, 2.9, 0.7, 12)
    assert res.statistic == pytest.approx(WELCH_GOLDEN[0], abs=1e-10)
    assert res.p_value == pytest.approx(WELCH_GOLDEN[1], abs=1e-10)


def test_welch_identical_and_swapped():
    res = welch_t_test(3.0, 0.4, 15, 3.0, 0.4, 15)
    assert (res.statistic, res.p_value) == (0.0, 1.0)
    a = welch_t_test(1.0, 0.3, 8, 1.4, 0.9, 20)
    b = welch_t_test(1.4, 0.9, 20, 1.0, 0.3, 8)
    assert a.p_value == pytest.approx(b.p_value, abs=1e-15)
    assert a.statistic == pytest.approx(-b.statistic)


def test_welch_degenerate_zero_variance():
    assert welch_t_test(2.0, 0.0, 5, 2.0, 0.0, 5).p_value == 1.0
    res = welch_t_test(2.0, 0.0, 5, 3.0, 0.0, 5)
    assert res.p_value == 0.0 and math.isinf(res.statistic)
    with pytest.raises(DomainError):
        welch_t_test(1.0, 0.1, 1, 1.0, 0.1, 5)


def test_welch_samples_matches_scipy(rng):
    x, y = rng.normal(0, 1, 14), rng.normal(0.5, 2, 9)
    ref = sps.ttest_ind(x, y, equal_var=False)
    res = welch_t_test_samples(x, y)
    assert res.statistic == pytest.approx(ref.statistic, abs=1e-10)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_holm_examples():
    assert holm_adjust([0.2]).tolist() == [0.2]
    np.testing.assert_allclose(holm_adjust([0.01, 0.04, 0.03]), HOLM_GOLDEN, atol=1e-15)
    assert holm_adjust([1.0, 1.0, 1.0]).tolist() == [1.0, 1.0, 1.0]
    np.testing.assert_allclose(holm_adjust([0.01, 0.04, 0.03], method="bonferroni"), [0.03, 0.12, 0.09])
    with pytest.raises(DomainError):
        holm_adjust([0.5, 1.2])
    with pytest.raises(DomainError):
        holm_adjust([0.5], method="sidak")


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=15))
def test_holm_matches_statsmodels(p):
    ours = holm_adjust(p)
    ref = multipletests(p, method="holm")[1]
    np.testing.assert_allclose(ours, ref, atol=1e-12)
    assert np.all(ours >= np.asarray(p) - 1e-15)
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(ours[order]) >= -1e-15)
