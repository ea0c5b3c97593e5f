"""Variable-table statistics and regression models.

Field-weighting, descriptive tables, the correlogram ordering, binned
surfaces, and linear / logit / Poisson fits with journal-clustered sandwich
covariance.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import special, stats as sps
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.spatial.distance import squareform

from .cognitive import percentile


class CollinearityError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = trace or []


# -- field weighting -----------------------------------------------------------

def percentile_rank_by_group(values, groups) -> np.ndarray:
    """Within-group average ranks scaled to ``(rank - 1) / (n - 1)``.

    ``groups`` holds one hashable key per value, e.g. ``(category, year)``
    tuples. Singleton groups map to 0.5; missing values stay missing and do
    not count toward ``n``.
    """
    v = pd.Series(np.asarray(values, dtype=float))
    keys = pd.Series(pd.factorize(pd.Series(list(groups), dtype=object))[0])
    if len(keys) != len(v):
        raise ValueError("values and groups differ in length")
    gb = v.groupby(keys, sort=False)
    rank = gb.rank(method="average")
    n = gb.transform("count")
    out = (rank - 1.0) / (n - 1.0)
    out[n == 1] = 0.5
    out[v.isna()] = np.nan
    return out.to_numpy()


# -- descriptives ---------------------------------------------------------------

SUMMARY_FIELDS = ("min", "p25", "median", "mean", "p75", "max", "sd", "n")


def summary_stats(table: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    rows = []
    for col in columns:
        vals = table[col].dropna().astype(float).tolist()
        if not vals:
            rows.append({"variable": col, **{k: np.nan for k in SUMMARY_FIELDS[:-1]}, "n": 0})
            continue
        n = len(vals)
        mean = math.fsum(vals) / n
        sd = math.sqrt(math.fsum((x - mean) ** 2 for x in vals) / (n - 1)) if n > 1 else np.nan
        rows.append({
            "variable": col, "min": min(vals), "p25": percentile(vals, 25),
            "median": percentile(vals, 50), "mean": mean, "p75": percentile(vals, 75),
            "max": max(vals), "sd": sd, "n": n,
        })
    return pd.DataFrame(rows, columns=["variable", *SUMMARY_FIELDS])


@dataclass
class Correlogram:
    matrix: pd.DataFrame
    order: list[str]
    excluded: list[str]


def correlogram(table: pd.DataFrame, columns: Sequence[str]) -> Correlogram:
    """Pairwise-complete Pearson correlations with an average-linkage leaf order."""
    if len(columns) < 2:
        raise ValueError("correlogram needs at least two columns")
    sub = table[list(columns)].astype(float)
    corr = sub.corr(method="pearson", min_periods=2)
    excluded = [c for c in columns if not (sub[c].std(skipna=True) > 0)]
    for c in excluded:
        corr.loc[c, :] = np.nan
        corr.loc[:, c] = np.nan
    kept = [c for c in columns if c not in excluded]
    if len(kept) >= 2:
        dist = 1.0 - corr.loc[kept, kept].to_numpy()
        dist = np.nan_to_num(dist, nan=1.0)
        dist = np.clip((dist + dist.T) / 2.0, 0.0, 2.0)
        np.fill_diagonal(dist, 0.0)
        z = linkage(squareform(dist, checks=False), method="average")
        order = [kept[i] for i in leaves_list(z)]
    else:
        order = kept
    return Correlogram(corr, order, excluded)


def binned_surface(table: pd.DataFrame, x: str, y: str, z: str, bins: int = 10) -> pd.DataFrame:
    """Mean of ``z`` over an equal-width ``bins`` x ``bins`` grid of ``x`` and ``y``."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    sub = table[[x, y, z]].dropna().astype(float)

    def edges(col):
        lo, hi = (sub[col].min(), sub[col].max()) if len(sub) else (0.0, 0.0)
        if not hi > lo:
            return np.array([lo, hi]), np.zeros(len(sub), dtype=int)
        e = np.linspace(lo, hi, bins + 1)
        idx = np.clip(np.searchsorted(e, sub[col].to_numpy(), side="right") - 1, 0, bins - 1)
        return e, idx

    ex, ix = edges(x)
    ey, iy = edges(y)
    sums = np.zeros((len(ex) - 1, len(ey) - 1))
    counts = np.zeros_like(sums, dtype=int)
    for a, b, val in zip(ix, iy, sub[z].to_numpy()):
        sums[a, b] += val
        counts[a, b] += 1
    rows = []
    for a in range(sums.shape[0]):
        for b in range(sums.shape[1]):
            n = int(counts[a, b])
            rows.append({
                "x_bin": a, "y_bin": b, "x_lo": ex[a], "x_hi": ex[a + 1],
                "y_lo": ey[b], "y_hi": ey[b + 1], "n": n,
                "mean_z": sums[a, b] / n if n else np.nan, "empty": n == 0,
            })
    return pd.DataFrame(rows)


# -- regression -------------------------------------------------------------------

FAMILIES = ("linear", "logit", "poisson")


@dataclass
class RegressionSpec:
    """One model: ``regressors`` may name a column, ``col^2`` or ``a:b``."""

    name: str
    family: str
    dependent: str
    regressors: list[str]
    fixed_effects: list[str] = field(default_factory=list)
    cluster: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.dependent in self.regressors:
            raise ValueError("dependent variable listed among regressors")

    def base_columns(self) -> list[str]:
        cols = [self.dependent]
        for r in self.regressors:
            for part in r.split(":"):
                base = part[:-2] if part.endswith("^2") else part
                if base not in cols:
                    cols.append(base)
        cols += [f for f in self.fixed_effects if f not in cols]
        if self.cluster and self.cluster not in cols:
            cols.append(self.cluster)
        return cols


def _term(frame: pd.DataFrame, term: str) -> np.ndarray:
    out = np.ones(len(frame))
    for part in term.split(":"):
        if part.endswith("^2"):
            col = frame[part[:-2]].to_numpy(dtype=float)
            out = out * col * col
        else:
            out = out * frame[part].to_numpy(dtype=float)
    return out


def design_matrix(spec: RegressionSpec, table: pd.DataFrame):
    """Listwise-deleted ``(y, X, names, clusters)`` for ``spec``."""
    frame = table[spec.base_columns()].dropna().reset_index(drop=True)
    cols = [np.ones(len(frame))]
    names = ["const"]
    for r in spec.regressors:
        cols.append(_term(frame, r))
        names.append(r)
    for fe in spec.fixed_effects:
        levels = frame[fe].astype(str)
        freq = levels.value_counts()
        top = freq.max() if len(freq) else 0
        dropped = sorted(freq[freq == top].index)[0] if len(freq) else None
        for lev in sorted(freq.index):
            if lev == dropped:
                continue
            cols.append((levels == lev).to_numpy(dtype=float))
            names.append(f"{fe}[{lev}]")
    x = np.column_stack(cols)
    y = frame[spec.dependent].to_numpy(dtype=float)
    clusters = (frame[spec.cluster].astype(str).to_numpy() if spec.cluster
                else np.arange(len(frame)).astype(str))
    return y, x, names, clusters


def cluster_sandwich(x: np.ndarray, scores: np.ndarray, bread: np.ndarray,
                     clusters: np.ndarray) -> np.ndarray:
    """``bread @ sum_g (X_g' u_g)(X_g' u_g)' @ bread`` without small-sample factors."""
    codes, uniq = pd.factorize(clusters, sort=True)
    g_scores = np.zeros((len(uniq), x.shape[1]))
    np.add.at(g_scores, codes, x * scores[:, None])
    meat = g_scores.T @ g_scores
    return bread @ meat @ bread


@dataclass
class RegressionFit:
    spec: RegressionSpec
    names: list[str]
    params: np.ndarray
    cov: np.ndarray
    nobs: int
    n_clusters: int
    stat_name: str
    iterations: int = 0
    r2: float | None = None
    r2_adj: float | None = None
    llf: float | None = None
    aic: float | None = None
    convention: dict = field(default_factory=dict)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @property
    def stat(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.params / self.se

    @property
    def pvalues(self) -> np.ndarray:
        if self.stat_name == "t":
            return 2.0 * sps.t.sf(np.abs(self.stat), df=max(self.n_clusters - 1, 1))
        return 2.0 * sps.norm.sf(np.abs(self.stat))

    def coef(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {
            "spec": asdict(self.spec),
            "nobs": self.nobs,
            "n_params": len(self.names),
            "n_clusters": self.n_clusters,
            "iterations": self.iterations,
            "r2": num(self.r2),
            "r2_adj": num(self.r2_adj),
            "llf": num(self.llf),
            "aic": num(self.aic),
            "coefficients": {
                n: {"coef": num(b), "se": num(s), self.stat_name: num(t), "p": num(p)}
                for n, b, s, t, p in zip(self.names, self.params, self.se, self.stat, self.pvalues)
            },
            "convention": self.convention,
        }


def _fit_linear(y, x, names):
    q, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(x.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < x.shape[1]:
        dropped = sorted(names[i] for i in piv[rank:])
        raise CollinearityError(f"design matrix is rank deficient; drop one of {dropped}")
    beta_p = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty_like(beta_p)
    beta[piv] = beta_p
    rinv = scipy.linalg.solve_triangular(r, np.eye(r.shape[0]))
    bread_p = rinv @ rinv.T
    bread = np.empty_like(bread_p)
    bread[np.ix_(piv, piv)] = bread_p
    return beta, bread


def _glm_parts(family: str, eta: np.ndarray, y: np.ndarray):
    if family == "logit":
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    else:
        eta = np.clip(eta, -700.0, 700.0)
        mu = np.exp(eta)
        w = mu
        ll = float(np.sum(y * eta - mu - special.gammaln(y + 1.0)))
    return mu, w, ll


def _fit_glm(y, x, names, family, max_iter=100, score_tol=1e-8, ll_tol=1e-10):
    if family == "logit" and not np.all((y == 0) | (y == 1)):
        raise ValueError("logit dependent must be 0/1")
    if family == "poisson" and (np.any(y < 0) or np.any(y != np.round(y))):
        raise ValueError("poisson dependent must be nonnegative counts")
    beta = np.zeros(x.shape[1])
    if family == "poisson":
        beta[0] = math.log(max(y.mean(), 1e-8))
    eta = x @ beta
    mu, w, ll = _glm_parts(family, eta, y)
    trace = [ll]
    for it in range(1, max_iter + 1):
        score = x.T @ (y - mu)
        info = x.T @ (x * w[:, None])
        try:
            step = scipy.linalg.solve(info, score, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            raise ConvergenceError(f"{family}: singular information matrix at iteration {it}", trace)
        beta = beta + step
        eta = x @ beta
        mu, w, ll_new = _glm_parts(family, eta, y)
        trace.append(ll_new)
        rel = abs(ll_new - ll) / max(abs(ll), 1e-300)
        ll = ll_new
        score = x.T @ (y - mu)
        if np.max(np.abs(score)) < score_tol or rel < ll_tol:
            if family == "logit" and np.all(np.abs(y - mu) < 1e-6):
                raise ConvergenceError("logit: perfect separation, estimates diverge", trace)
            info = x.T @ (x * w[:, None])
            try:
                bread = scipy.linalg.inv(info)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                raise ConvergenceError(f"{family}: singular information at optimum", trace)
            return beta, bread, y - mu, ll, it
    raise ConvergenceError(f"{family}: no convergence after {max_iter} iterations", trace)


def fit(spec: RegressionSpec, table: pd.DataFrame) -> RegressionFit:
    """Fit ``spec`` on ``table`` with CR1 cluster-robust covariance."""
    y, x, names, clusters = design_matrix(spec, table)
    n, k = x.shape
    g = len(np.unique(clusters))
    if n <= k:
        raise ValueError(f"{spec.name}: {n} complete rows for {k} parameters")
    if g < 2:
        raise ValueError(f"{spec.name}: need at least 2 clusters, got {g}")
    if spec.family == "linear":
        beta, bread = _fit_linear(y, x, names)
        resid = y - x @ beta
        factor = g / (g - 1) * (n - 1) / (n - k)
        cov = factor * cluster_sandwich(x, resid, bread, clusters)
        tss = float(np.sum((y - y.mean()) ** 2))
        rss = float(resid @ resid)
        r2 = 1.0 - rss / tss if tss > 0 else np.nan
        fit_ = RegressionFit(spec, names, beta, (cov + cov.T) / 2, n, g, "t",
                             r2=r2, r2_adj=1.0 - (1.0 - r2) * (n - 1) / (n - k))
        fit_.convention = {"covariance": "CR1", "factor": "G/(G-1)*(N-1)/(N-K)",
                           "p_values": "t(G-1)"}
        return fit_
    _fit_linear(np.zeros(n), x, names)  # rank check only
    beta, bread, u, ll, iters = _fit_glm(y, x, names, spec.family)
    cov = g / (g - 1) * cluster_sandwich(x, u, bread, clusters)
    fit_ = RegressionFit(spec, names, beta, (cov + cov.T) / 2, n, g, "z", iterations=iters,
                         llf=ll, aic=2 * k - 2 * ll)
    fit_.convention = {"covariance": "CR1", "factor": "G/(G-1)", "p_values": "normal"}
    return fit_


def turning_point(b1: float, b2: float) -> float:
    """Extremum ``-b1 / (2 b2)`` of ``b1 x + b2 x^2``."""
    if b2 == 0:
        raise ZeroDivisionError("no interior extremum when the squared coefficient is 0")
    return -b1 / (2.0 * b2)


def marginal_effect(b1: float, b2: float, x: float) -> float:
    """Slope ``b1 + 2 b2 x`` of ``b1 x + b2 x^2`` at ``x``.

    Evaluated as ``2 b2 (x - turning point)`` so it is exactly zero at the
    turning point.
    """
    if b2 == 0:
        return float(b1)
    return 2.0 * b2 * (x - turning_point(b1, b2))
