import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from teamscope import oracles as O
from teamscope.stats import (
    CollinearityError,
    ConvergenceError,
    RegressionSpec,
    binned_surface,
    correlogram,
    design_matrix,
    fit,
    marginal_effect,
    percentile_rank_by_group,
    summary_stats,
    turning_point,
)


# -- percentile ranks

def test_rank_examples():
    assert percentile_rank_by_group([10, 20, 30], ["g"] * 3).tolist() == [0.0, 0.5, 1.0]
    assert percentile_rank_by_group([5, 5], ["g"] * 2).tolist() == [0.5, 0.5]
    r = percentile_rank_by_group(np.random.default_rng(0).permutation(101), ["g"] * 101)
    assert math.fsum(r) / 101 == 0.5


def test_rank_singleton_and_missing():
    r = percentile_rank_by_group([3.0, np.nan, 1.0, 7.0], ["a", "b", "b", "b"])
    assert r[0] == 0.5
    assert math.isnan(r[1])
    assert r[2:].tolist() == [0.0, 1.0]


def test_rank_groups_are_tuples():
    vals = [1, 2, 3, 4]
    groups = [("x", 2000), ("x", 2001), ("x", 2000), ("x", 2001)]
    assert percentile_rank_by_group(vals, groups).tolist() == [0.0, 0.0, 1.0, 1.0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.sampled_from("abc")), min_size=1, max_size=40))
def test_rank_matches_oracle(rows):
    vals = [float(v) for v, _ in rows]
    groups = [g for _, g in rows]
    got = percentile_rank_by_group(vals, groups)
    want = O.oracle_percentile_rank(vals, groups)
    assert got.tolist() == want
    assert np.all((got >= 0) & (got <= 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000))
def test_tie_free_group_law(n, seed):
    vals = np.random.default_rng(seed).permutation(n).astype(float)
    r = percentile_rank_by_group(vals, [0] * n)
    assert sorted(r.tolist()) == [k / (n - 1) for k in range(n)]
    assert math.fsum(r) / n == 0.5


# -- descriptives

def test_summary_examples():
    t = pd.DataFrame({"c": [3.0] * 5, "x": [1.0, 2.0, 3.0, 4.0, np.nan]})
    s = summary_stats(t, ["c", "x"]).set_index("variable")
    assert s.loc["c", "sd"] == 0.0
    assert s.loc["x", "mean"] == 2.5 and s.loc["x", "median"] == 2.5
    assert s.loc["x", "n"] == 4


def test_summary_empty_column():
    s = summary_stats(pd.DataFrame({"e": [np.nan, np.nan]}), ["e"])
    assert s.loc[0, "n"] == 0 and math.isnan(s.loc[0, "mean"])


def test_summary_matches_streaming_oracle():
    rng = np.random.default_rng(5)
    x = rng.lognormal(size=537)
    s = summary_stats(pd.DataFrame({"x": x}), ["x"]).iloc[0]
    # Welford streaming moments
    n, mean, m2 = 0, 0.0, 0.0
    for v in x:
        n += 1
        d = v - mean
        mean += d / n
        m2 += d * (v - mean)
    assert s["mean"] == pytest.approx(mean, rel=1e-12)
    assert s["sd"] == pytest.approx(math.sqrt(m2 / (n - 1)), rel=1e-12)
    srt = sorted(x)
    assert s["min"] == srt[0] and s["max"] == srt[-1]
    assert s["median"] == srt[268]
    assert s["p25"] == O.oracle_percentile(list(x), 25)
    assert s["p75"] == O.oracle_percentile(list(x), 75)


def test_correlogram_signs_and_exclusion():
    x = np.arange(10.0)
    t = pd.DataFrame({"x": x, "x2": x, "neg": -x, "flat": np.ones(10)})
    c = correlogram(t, ["x", "x2", "neg", "flat"])
    assert c.matrix.loc["x", "x"] == pytest.approx(1.0)
    assert c.matrix.loc["x", "neg"] == pytest.approx(-1.0)
    assert c.excluded == ["flat"]
    assert c.matrix.loc["flat"].isna().all()
    assert sorted(c.order) == ["neg", "x", "x2"]


def test_correlogram_needs_two_columns():
    with pytest.raises(ValueError):
        correlogram(pd.DataFrame({"a": [1, 2]}), ["a"])


def test_correlogram_blocks_contiguous():
    rng = np.random.default_rng(2)
    f1, f2 = rng.normal(size=400), rng.normal(size=400)
    cols = {}
    for i in range(3):
        cols[f"a{i}"] = f1 + 0.3 * rng.normal(size=400)
        cols[f"b{i}"] = f2 + 0.3 * rng.normal(size=400)
    names = ["a0", "b0", "a1", "b1", "a2", "b2"]
    order = correlogram(pd.DataFrame(cols), names).order
    blocks = "".join(n[0] for n in order)
    assert blocks in ("aaabbb", "bbbaaa")


def test_surface_constant_and_monotone():
    rng = np.random.default_rng(1)
    x, y = rng.random(300), rng.random(300)
    s = binned_surface(pd.DataFrame({"x": x, "y": y, "z": 4.0}), "x", "y", "z", bins=4)
    assert (s.loc[~s["empty"], "mean_z"] == 4.0).all()
    assert s["n"].sum() == 300
    s2 = binned_surface(pd.DataFrame({"x": x, "y": y, "z": x}), "x", "y", "z", bins=2)
    left = s2[s2.x_bin == 0]
    right = s2[s2.x_bin == 1]
    lm = (left.mean_z * left.n).sum() / left.n.sum()
    rm = (right.mean_z * right.n).sum() / right.n.sum()
    assert rm > lm


def test_surface_matches_groupby_oracle():
    rng = np.random.default_rng(8)
    t = pd.DataFrame({"x": rng.random(500), "y": rng.random(500), "z": rng.normal(size=500)})
    s = binned_surface(t, "x", "y", "z", bins=5)
    bx = pd.cut(t.x, np.linspace(t.x.min(), t.x.max(), 6), include_lowest=True, right=False, labels=False)
    by = pd.cut(t.y, np.linspace(t.y.min(), t.y.max(), 6), include_lowest=True, right=False, labels=False)
    bx = bx.fillna(4).astype(int)
    by = by.fillna(4).astype(int)
    want = t.groupby([bx, by]).z.agg(["mean", "size"])
    for _, row in s[~s["empty"]].iterrows():
        m, n = want.loc[(row.x_bin, row.y_bin)]
        assert row.n == n
        assert row.mean_z == pytest.approx(m, rel=1e-12, abs=1e-12)
    assert s["empty"].sum() == 25 - len(want)


def test_surface_degenerate_and_bad_bins():
    t = pd.DataFrame({"x": [1.0, 1.0], "y": [0.0, 1.0], "z": [2.0, 4.0]})
    s = binned_surface(t, "x", "y", "z", bins=3)
    assert s.x_bin.nunique() == 1 and len(s) == 3
    with pytest.raises(ValueError):
        binned_surface(t, "x", "y", "z", bins=1)


# -- regression

def clustered_table(n=200, g=15, seed=4):
    rng = np.random.default_rng(seed)
    cl = rng.integers(0, g, size=n)
    shock = rng.normal(size=g)[cl]
    x1, x2 = rng.normal(size=n), rng.random(n)
    y = 0.5 + 1.5 * x1 - 0.7 * x2 + 0.3 * x2 ** 2 + shock + rng.normal(size=n)
    return pd.DataFrame({"y": y, "x1": x1, "x2": x2, "j": [f"J{c}" for c in cl]})


def test_spec_validation():
    with pytest.raises(ValueError):
        RegressionSpec("m", "probit", "y", ["x"])
    with pytest.raises(ValueError):
        RegressionSpec("m", "linear", "y", ["y"])
    s = RegressionSpec("m", "linear", "y", ["a^2", "a:b"], ["yr"], "j")
    assert s.base_columns() == ["y", "a", "b", "yr", "j"]


def test_exact_line():
    x = np.arange(12.0)
    t = pd.DataFrame({"y": 1 + 2 * x, "x": x, "j": np.arange(12) % 3})
    f = fit(RegressionSpec("line", "linear", "y", ["x"], cluster="j"), t)
    assert f.params == pytest.approx([1.0, 2.0], abs=1e-12)
    assert f.r2 == pytest.approx(1.0)


def test_linear_matches_normal_equation_oracle():
    t = clustered_table()
    spec = RegressionSpec("m", "linear", "y", ["x1", "x2", "x2^2"], cluster="j")
    f = fit(spec, t)
    y, x, names, clusters = design_matrix(spec, t)
    beta, se = O.oracle_clustered_se(x, y, list(clusters))
    assert np.max(np.abs(f.params - beta)) < 1e-8
    assert np.max(np.abs(f.se - se)) < 1e-8
    assert names == ["const", "x1", "x2", "x2^2"]
    assert f.n_clusters == 15


def test_linear_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.api")
    t = clustered_table(seed=9)
    f = fit(RegressionSpec("m", "linear", "y", ["x1", "x2"], cluster="j"), t)
    X = sm.add_constant(t[["x1", "x2"]])
    ref = sm.OLS(t.y, X).fit(cov_type="cluster", cov_kwds={"groups": pd.factorize(t.j)[0]})
    assert np.allclose(f.params, ref.params.to_numpy(), atol=1e-10)
    assert np.allclose(f.se, ref.bse.to_numpy(), rtol=1e-8)


def test_identity_and_single_giant_cluster():
    t = clustered_table(n=80, seed=3)
    t["row"] = np.arange(len(t))
    spec = RegressionSpec("m", "linear", "y", ["x1", "x2"], cluster="row")
    f = fit(spec, t)
    y, x, _, _ = design_matrix(spec, t)
    n, k = x.shape
    xtx = np.linalg.inv(x.T @ x)
    u = y - x @ (xtx @ x.T @ y)
    hc1 = n / (n - 1) * (n - 1) / (n - k) * xtx @ (x.T * u ** 2) @ x @ xtx
    assert np.allclose(f.se, np.sqrt(np.diag(hc1)), rtol=1e-10)
    # a single cluster is rejected: OLS residuals are orthogonal to X, so its meat is zero
    t["one"] = "g"
    assert np.abs(x.T @ u).max() < 1e-9
    with pytest.raises(ValueError):
        fit(RegressionSpec("m", "linear", "y", ["x1"], cluster="one"), t)


def test_t_stats_invariant_to_rescaling():
    t = clustered_table()
    spec = RegressionSpec("m", "linear", "y", ["x1", "x2"], cluster="j")
    a = fit(spec, t)
    t2 = t.assign(x1=2 * t.x1)
    b = fit(spec, t2)
    assert b.coef("x1") == pytest.approx(a.coef("x1") / 2, rel=1e-10)
    assert np.allclose(a.stat, b.stat, rtol=1e-9)


def test_fixed_effects_drop_most_frequent_level():
    t = clustered_table()
    t["yr"] = np.where(np.arange(len(t)) % 4 == 0, "2001", "2000")
    spec = RegressionSpec("m", "linear", "y", ["x1"], fixed_effects=["yr"], cluster="j")
    f = fit(spec, t)
    assert f.names == ["const", "x1", "yr[2001]"]


def test_listwise_deletion_per_model():
    t = clustered_table()
    t.loc[:9, "x2"] = np.nan
    a = fit(RegressionSpec("a", "linear", "y", ["x1"], cluster="j"), t)
    b = fit(RegressionSpec("b", "linear", "y", ["x1", "x2"], cluster="j"), t)
    assert (a.nobs, b.nobs) == (200, 190)


def test_collinearity_names_columns():
    t = clustered_table()
    t["x3"] = 2 * t.x1
    with pytest.raises(CollinearityError, match="x"):
        fit(RegressionSpec("m", "linear", "y", ["x1", "x3"], cluster="j"), t)


def test_logit_symmetric_intercept():
    x = np.linspace(-2, 2, 40)
    rng = np.random.default_rng(0)
    y = (rng.random(40) < 1 / (1 + np.exp(-x))).astype(float)
    t = pd.DataFrame({"y": np.concatenate([y, 1 - y]), "x": np.concatenate([x, -x]),
                      "j": np.arange(80) % 8})
    f = fit(RegressionSpec("m", "logit", "y", ["x"], cluster="j"), t)
    assert abs(f.coef("const")) < 1e-6
    assert f.stat_name == "z"


def test_logit_separation_is_convergence_error():
    x = np.arange(20.0)
    t = pd.DataFrame({"y": (x > 9.5).astype(float), "x": x, "j": np.arange(20) % 4})
    with pytest.raises(ConvergenceError) as err:
        fit(RegressionSpec("m", "logit", "y", ["x"], cluster="j"), t)
    assert err.value.trace


def test_glm_rejects_bad_dependent():
    t = pd.DataFrame({"y": [0.5, 1, 0, 1, 0], "x": [1, 2, 3, 4, 5.0], "j": [0, 1, 0, 1, 0]})
    with pytest.raises(ValueError):
        fit(RegressionSpec("m", "logit", "y", ["x"], cluster="j"), t)
    with pytest.raises(ValueError):
        fit(RegressionSpec("m", "poisson", "y", ["x"], cluster="j"), t.assign(y=[-1, 0, 1, 2, 3]))


def test_glms_match_statsmodels_point_estimates():
    sm = pytest.importorskip("statsmodels.api")
    rng = np.random.default_rng(12)
    n = 2000
    x = rng.normal(size=n)
    j = rng.integers(0, 30, size=n)
    X = sm.add_constant(x)
    yl = (rng.random(n) < 1 / (1 + np.exp(-(0.3 + 0.8 * x)))).astype(float)
    yp = rng.poisson(np.exp(0.2 + 0.5 * x)).astype(float)
    t = pd.DataFrame({"yl": yl, "yp": yp, "x": x, "j": j})
    fl = fit(RegressionSpec("l", "logit", "yl", ["x"], cluster="j"), t)
    fp = fit(RegressionSpec("p", "poisson", "yp", ["x"], cluster="j"), t)
    rl = sm.Logit(yl, X).fit(disp=0, cov_type="cluster", cov_kwds={"groups": j})
    rp = sm.Poisson(yp, X).fit(disp=0, cov_type="cluster", cov_kwds={"groups": j})
    assert np.allclose(fl.params, rl.params, atol=1e-7)
    assert np.allclose(fp.params, rp.params, atol=1e-7)
    assert fl.llf == pytest.approx(rl.llf, rel=1e-9)
    assert fp.llf == pytest.approx(rp.llf, rel=1e-9)
    # statsmodels' GLM cluster default also applies G/(G-1) * (N-1)/(N-K); undo the second factor
    k = 2
    adj = math.sqrt((n - k) / (n - 1))
    assert np.allclose(fl.se, rl.bse * adj, rtol=1e-5)
    assert np.allclose(fp.se, rp.bse * adj, rtol=1e-5)


def test_covariance_symmetric_psd_and_dict():
    f = fit(RegressionSpec("m", "linear", "y", ["x1", "x2"], cluster="j"), clustered_table())
    assert np.array_equal(f.cov, f.cov.T)
    assert np.linalg.eigvalsh(f.cov).min() > -1e-12
    d = f.to_dict()
    assert d["convention"]["covariance"] == "CR1"
    assert set(d["coefficients"]["x1"]) == {"coef", "se", "t", "p"}


# -- turning points and marginal effects

def test_turning_point_examples():
    assert round(turning_point(0.056, -0.088), 3) == 0.318
    assert abs(turning_point(0.169, -0.031) - 2.725) <= 0.005
    assert turning_point(1, -0.5) == 1
    assert turning_point(0.188, -0.047) == 2.0
    with pytest.raises(ZeroDivisionError):
        turning_point(1.0, 0.0)


def test_marginal_effect_examples():
    assert marginal_effect(0.169, -0.031, 0.5) == pytest.approx(0.138, abs=1e-12)
    assert marginal_effect(0.169, -0.031, 0.0) == pytest.approx(0.169, abs=1e-15)
    assert marginal_effect(0.3, 0.0, 7.0) == 0.3


finite = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: abs(v) > 1e-6)


@given(finite, finite)
def test_marginal_effect_vanishes_at_turning_point(b1, b2):
    assert marginal_effect(b1, b2, turning_point(b1, b2)) == 0.0


@given(finite, finite, st.floats(-10, 10))
def test_marginal_effect_is_derivative(b1, b2, x):
    assert marginal_effect(b1, b2, x) == pytest.approx(b1 + 2 * b2 * x, rel=1e-9, abs=1e-6)
