from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from evofda.ingest import ProjectSeries, ReleaseRecord, describe_sample
from evofda.inference import (
    AnovaResult,
    CollinearityError,
    cluster_profile,
    format_f,
    loc_complexity_correlation,
    manova,
    one_way_anova,
    pairwise_comparisons,
)

A = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
LAB = [1, 1, 1, 2, 2, 2]


def test_hand_anova():
    r = one_way_anova(A, LAB)
    assert (r.ss_between, r.ss_within) == (13.5, 4.0)
    assert r.f == 13.5
    assert (r.df_between, r.df_within) == (1, 4)
    assert r.eta_squared == pytest.approx(0.7714, abs=1e-4)
    assert r.p_value == pytest.approx(stats.f.sf(13.5, 1, 4))


def test_identical_means():
    r = one_way_anova([1, 2, 3, 1, 2, 3], LAB)
    assert r.f == 0 and r.eta_squared == 0 and r.p_value == pytest.approx(1.0)


def test_two_group_f_is_t_squared():
    rng = np.random.default_rng(2)
    y = rng.normal(size=17)
    lab = [0] * 8 + [1] * 9
    t = stats.ttest_ind(y[:8], y[8:]).statistic
    assert one_way_anova(y, lab).f == pytest.approx(t**2, rel=1e-10)


def test_matches_scipy_f_oneway():
    rng = np.random.default_rng(3)
    groups = [rng.normal(m, 1, n) for m, n in ((0, 5), (1, 7), (0.5, 9))]
    y = np.concatenate(groups)
    lab = np.repeat([0, 1, 2], [5, 7, 9])
    ref = stats.f_oneway(*groups)
    r = one_way_anova(y, lab)
    assert r.f == pytest.approx(ref.statistic, rel=1e-12)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_zero_within_variance():
    r = one_way_anova([0, 0, 10, 10, 5, 5], [1, 1, 2, 2, 3, 3])
    assert r.degenerate and r.p_value == 0.0 and r.f == float("inf")
    flat = one_way_anova([2, 2, 2, 2], [1, 1, 2, 2])
    assert flat.degenerate and flat.f == 0.0 and flat.p_value == 1.0


def test_anova_errors():
    with pytest.raises(ValueError):
        one_way_anova([1, 2, 3], [1, 1, 1])
    with pytest.raises(ValueError):
        one_way_anova([1, 2], [1, 2])
    with pytest.raises(ValueError):
        one_way_anova([1, 2, 3], [1, 2])


# ---- MANOVA


def test_single_variable_manova_equals_anova():
    rng = np.random.default_rng(5)
    y = rng.normal(size=30)
    lab = np.repeat([1, 2, 3], 10)
    m = manova(y[:, None], lab)
    a = one_way_anova(y, lab)
    assert m.f_approx == pytest.approx(a.f, rel=1e-10)
    assert m.p_value == pytest.approx(a.p_value, rel=1e-8)
    assert (m.df1, m.df2) == (a.df_between, a.df_within)


def test_identical_group_means_lambda_one():
    base = np.array([[1.0, 5.0], [2.0, 3.0], [3.0, 4.0], [0.5, 2.0]])
    Y = np.vstack([base, base])
    m = manova(Y, [1] * 4 + [2] * 4)
    assert m.wilks_lambda == pytest.approx(1.0, abs=1e-12)
    assert m.f_approx == pytest.approx(0.0, abs=1e-10)


def test_lambda_determinant_oracle():
    rng = np.random.default_rng(6)
    Y = np.vstack([rng.normal((0, 0), 1, (12, 2)), rng.normal((3, 1), 1, (10, 2))])
    lab = np.repeat([1, 2], [12, 10])
    W = sum(np.cov(Y[lab == g].T, ddof=0) * (lab == g).sum() for g in (1, 2))
    T = np.cov(Y.T, ddof=0) * Y.shape[0]
    m = manova(Y, lab)
    assert m.wilks_lambda == pytest.approx(np.linalg.det(W) / np.linalg.det(T), rel=1e-10)
    # two groups: Rao's F is exact, F = (1 - L)/L * (n - p - 1)/p
    n, p = Y.shape
    lam = m.wilks_lambda
    assert m.f_approx == pytest.approx((1 - lam) / lam * (n - p - 1) / p, rel=1e-10)


def test_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.multivariate.manova")
    rng = np.random.default_rng(7)
    Y = np.vstack([rng.normal(m, 1, (9, 3)) for m in (0, 0.7, 1.5, 0.2)])
    lab = np.repeat(["a", "b", "c", "d"], 9)
    ours = manova(Y, lab)
    X = np.column_stack([np.ones(36), *(lab == g for g in "bcd")]).astype(float)
    # joint test that all three group contrasts vanish
    res = sm.MANOVA(Y, X).mv_test([("groups", np.eye(4)[1:])])
    ref = res.results["groups"]["stat"].loc["Wilks' lambda"]
    assert ours.wilks_lambda == pytest.approx(float(ref["Value"]), rel=1e-10)
    assert ours.f_approx == pytest.approx(float(ref["F Value"]), rel=1e-8)
    assert (ours.df1, ours.df2) == pytest.approx((float(ref["Num DF"]), float(ref["Den DF"])))


def test_collinear_names_variable():
    rng = np.random.default_rng(8)
    x = rng.normal(size=20)
    Y = np.column_stack([x, 2 * x + 1])
    with pytest.raises(CollinearityError, match="loc_growth"):
        manova(Y, np.repeat([1, 2], 10), names=["first_loc", "loc_growth"])


# ---- pairwise


def test_lsd_hand_case():
    t = pairwise_comparisons(A, LAB)
    (row,) = t.rows
    assert row.difference == -3.0
    assert row.se == pytest.approx(0.8165, abs=1e-4)
    assert abs(row.t) == pytest.approx(3.674, abs=1e-3)
    assert row.p_value == pytest.approx(0.0213, abs=1e-4)
    assert t.df == 4


def test_identical_groups_pairwise():
    t = pairwise_comparisons([1, 2, 3, 1, 2, 3], LAB)
    assert t.rows[0].difference == 0 and t.rows[0].p_value == pytest.approx(1.0)


def test_zero_variance_pairwise_flagged():
    t = pairwise_comparisons([0, 0, 10, 10, 5, 5], [1, 1, 2, 2, 3, 3])
    assert t.degenerate
    assert all(r.p_value == 0.0 for r in t.rows)


def test_bonferroni():
    y = np.concatenate([np.arange(5.0), np.arange(5.0) + 2, np.arange(5.0) + 4])
    lab = np.repeat([1, 2, 3], 5)
    raw = pairwise_comparisons(y, lab)
    adj = pairwise_comparisons(y, lab, correction="bonferroni")
    for r, a in zip(raw.rows, adj.rows):
        assert a.p_value == pytest.approx(min(1.0, 3 * r.p_value))
    with pytest.raises(ValueError):
        pairwise_comparisons(y, lab, correction="holm")


def test_lookup_antisymmetric():
    t = pairwise_comparisons(A, LAB)
    ab, ba = t.lookup(1, 2), t.lookup(2, 1)
    assert ab.difference == -ba.difference and ab.p_value == ba.p_value


# ---- profile and report helpers


def _series(pid, rows):
    start = date(2001, 1, 1)
    return ProjectSeries(pid, tuple(ReleaseRecord(pid, start + timedelta(d), loc, cx) for d, loc, cx in rows))


def test_one_cluster_profile_equals_describe():
    ps = [
        _series("a", [(0, 100, 1.0), (30, 150, 2.0)]),
        _series("b", [(0, 10, 4.0), (10, 20, 3.0), (50, 40, 6.0)]),
        _series("c", [(0, 7, 9.0)]),
    ]
    prof = cluster_profile(ps, [1, 1, 1])
    desc = describe_sample(ps)
    assert prof["sizes"] == {1: 3}
    for m, s in desc.measures.items():
        assert prof["means"][m][1] == pytest.approx(s.mean)


def test_correlation_helper():
    ps = [_series("a", [(0, 100, 1.0), (30, 200, 2.0), (60, 300, 3.5)])]
    r, p = loc_complexity_correlation(ps)
    assert r == pytest.approx(stats.pearsonr([100, 200, 300], [1, 2, 3.5])[0])


def test_format_f():
    assert format_f(one_way_anova(A, LAB)) == "F1,4 = 13.500, p < 0.05"
    r = AnovaResult(4.57, 3, 55, 0.006, 0.2, 1, 1)
    assert format_f(r) == "F3,55 = 4.570, p < 0.01"


# ---- properties

groups = st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=8)


@settings(max_examples=100, deadline=None)
@given(groups, groups, groups, st.floats(-1e3, 1e3), st.floats(0.01, 100))
def test_anova_invariances(g1, g2, g3, shift, scale):
    y = np.array(g1 + g2 + g3)
    lab = [1] * len(g1) + [2] * len(g2) + [3] * len(g3)
    r = one_way_anova(y, lab)
    if r.degenerate or r.ss_within < 1e-6:
        return
    assert 0 <= r.eta_squared <= 1
    assert one_way_anova(y + shift, lab).f == pytest.approx(r.f, rel=1e-6, abs=1e-9)
    assert one_way_anova(y * scale, lab).f == pytest.approx(r.f, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("sizes", [(3, 3), (20, 20, 19, 0), (8, 12, 10)])
def test_larger_f_smaller_p(sizes):
    sizes = [n for n in sizes if n]
    e = np.random.default_rng(0).normal(size=sum(sizes))
    lab = np.repeat(np.arange(len(sizes)), sizes)
    res = [one_way_anova(e + lab * step, lab) for step in np.linspace(0, 3, 25)]
    order = np.argsort([r.f for r in res])
    ps = np.array([r.p_value for r in res])[order]
    assert np.all(np.diff(ps) <= 0)
