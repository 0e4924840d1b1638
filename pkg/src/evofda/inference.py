"""Statistical characterization of cluster solutions.

One-way ANOVA, Wilks' lambda MANOVA with Rao's F approximation, Fisher LSD
pairwise comparisons and per-cluster descriptive profiles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

from .ingest import MEASURES, project_measures

__all__ = [
    "AnovaResult",
    "ManovaResult",
    "PairwiseRow",
    "PairwiseTable",
    "CollinearityError",
    "one_way_anova",
    "manova",
    "pairwise_comparisons",
    "cluster_profile",
    "loc_complexity_correlation",
    "format_f",
]


def _groups(values, labels):
    y = np.asarray(values, dtype=float)
    lab = np.asarray(labels)
    if y.shape[0] != lab.shape[0]:
        raise ValueError("values and labels differ in length")
    levels = sorted(set(lab.tolist()))
    return y, lab, levels


@dataclass(frozen=True)
class AnovaResult:
    f: float
    df_between: int
    df_within: int
    p_value: float
    eta_squared: float
    ss_between: float
    ss_within: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "F": _json_float(self.f),
            "df": [self.df_between, self.df_within],
            "p_value": self.p_value,
            "eta_squared": self.eta_squared,
            "ss_between": self.ss_between,
            "ss_within": self.ss_within,
            "degenerate": self.degenerate,
        }


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


def one_way_anova(values, labels) -> AnovaResult:
    """Between/within decomposition of ``values`` over the groups in ``labels``.

    Zero within-group variance makes F infinite when the group means differ
    (p = 0) and undefined when they do not (F = 0, p = 1); both cases are
    flagged ``degenerate``.
    """
    y, lab, levels = _groups(values, labels)
    g = len(levels)
    n = y.size
    if g < 2:
        raise ValueError("need at least two groups")
    if n <= g:
        raise ValueError(f"need more observations ({n}) than groups ({g})")
    grand = y.mean()
    ssb = ssw = 0.0
    for lv in levels:
        yi = y[lab == lv]
        if yi.size == 0:
            raise ValueError(f"group {lv!r} is empty")
        ssb += yi.size * (yi.mean() - grand) ** 2
        ssw += ((yi - yi.mean()) ** 2).sum()
    dfb, dfw = g - 1, n - g
    sst = ssb + ssw
    scale = max(1.0, float(np.abs(y).max())) ** 2 * n
    tiny = 1e-24 * scale
    if ssw <= tiny:
        if ssb <= tiny:
            return AnovaResult(0.0, dfb, dfw, 1.0, 0.0, float(ssb), float(ssw), True)
        return AnovaResult(math.inf, dfb, dfw, 0.0, 1.0, float(ssb), float(ssw), True)
    f = (ssb / dfb) / (ssw / dfw)
    p = float(stats.f.sf(f, dfb, dfw))
    eta = ssb / sst if sst > 0 else 0.0
    return AnovaResult(float(f), dfb, dfw, p, float(eta), float(ssb), float(ssw))


class CollinearityError(ValueError):
    pass


@dataclass(frozen=True)
class ManovaResult:
    wilks_lambda: float
    f_approx: float
    df1: float
    df2: float
    p_value: float
    n_variables: int
    n_groups: int

    def to_dict(self) -> dict:
        return {
            "wilks_lambda": self.wilks_lambda,
            "F": self.f_approx,
            "df": [self.df1, self.df2],
            "p_value": self.p_value,
        }


def _sscp(Y, lab, levels):
    grand = Y.mean(axis=0)
    p = Y.shape[1]
    W = np.zeros((p, p))
    B = np.zeros((p, p))
    for lv in levels:
        Yi = Y[lab == lv]
        if Yi.shape[0] == 0:
            raise ValueError(f"group {lv!r} is empty")
        mi = Yi.mean(axis=0)
        Ci = Yi - mi
        W += Ci.T @ Ci
        d = (mi - grand)[:, None]
        B += Yi.shape[0] * (d @ d.T)
    return W, B


def _collinear_names(Y, names):
    """Variables that are linear combinations of the ones before them."""
    Yc = Y - Y.mean(axis=0)
    bad = []
    tol = 1e-10 * max(1.0, float(np.abs(Yc).max()))
    for j in range(Yc.shape[1]):
        rank_before = np.linalg.matrix_rank(Yc[:, :j], tol=tol) if j else 0
        if np.linalg.matrix_rank(Yc[:, : j + 1], tol=tol) == rank_before:
            bad.append(names[j])
    return bad


def manova(Y, labels, names=None) -> ManovaResult:
    """Wilks' lambda ``det(W) / det(W + B)`` and Rao's F approximation.

    Parameters
    ----------
    Y : (n, p) array
        Dependent variables in columns.
    labels : sequence
        Group label per row.
    names : sequence of str, optional
        Variable names used in error messages.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = Y.shape
    names = list(names) if names is not None else [f"var{j}" for j in range(p)]
    _, lab, levels = _groups(Y[:, 0], labels)
    g = len(levels)
    if g < 2:
        raise ValueError("need at least two groups")
    if n <= p + g:
        raise ValueError(f"need more observations ({n}) than variables + groups ({p + g})")
    W, B = _sscp(Y, lab, levels)
    T = W + B
    bad = _collinear_names(Y, names)
    if bad:
        raise CollinearityError(f"total cross-product matrix is singular; collinear: {', '.join(bad)}")
    sign_w, logdet_w = np.linalg.slogdet(W)
    sign_t, logdet_t = np.linalg.slogdet(T)
    if sign_t <= 0:
        raise CollinearityError("total cross-product matrix is not positive definite")
    lam = float(np.exp(logdet_w - logdet_t)) if sign_w > 0 else 0.0
    lam = min(lam, 1.0)

    dfh, dfe = g - 1, n - g
    den = p * p + dfh * dfh - 5
    s = math.sqrt((p * p * dfh * dfh - 4) / den) if den > 0 else 1.0
    m = dfe + dfh - (p + dfh + 1) / 2
    df1 = p * dfh
    df2 = m * s - (p * dfh - 2) / 2
    if lam <= 0:
        return ManovaResult(0.0, math.inf, df1, df2, 0.0, p, g)
    root = lam ** (1 / s)
    f = (1 - root) / root * df2 / df1
    f = max(f, 0.0)
    pval = float(stats.f.sf(f, df1, df2))
    return ManovaResult(lam, float(f), float(df1), float(df2), pval, p, g)


@dataclass(frozen=True)
class PairwiseRow:
    group_a: object
    group_b: object
    difference: float  # mean(a) - mean(b)
    se: float
    t: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class PairwiseTable:
    rows: tuple[PairwiseRow, ...]
    df: int
    alpha: float = 0.05
    correction: str = "none"
    degenerate: bool = False

    def lookup(self, a, b) -> PairwiseRow:
        """Row for ``(a, b)``; the difference flips sign when the order does."""
        for r in self.rows:
            if (r.group_a, r.group_b) == (a, b):
                return r
            if (r.group_a, r.group_b) == (b, a):
                return PairwiseRow(a, b, -r.difference, r.se, -r.t, r.p_value, r.significant)
        raise KeyError((a, b))

    def to_list(self) -> list[dict]:
        return [
            {
                "a": _plain(r.group_a),
                "b": _plain(r.group_b),
                "difference": r.difference,
                "se": r.se,
                "t": _json_float(r.t),
                "p_value": r.p_value,
                "significant": r.significant,
            }
            for r in self.rows
        ]


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def pairwise_comparisons(values, labels, alpha: float = 0.05, correction: str = "none") -> PairwiseTable:
    """Fisher LSD t-tests on the pooled within-group mean square.

    ``correction="bonferroni"`` multiplies p-values by the number of pairs
    (capped at 1).
    """
    if correction not in ("none", "bonferroni"):
        raise ValueError(f"unknown correction {correction!r}")
    anova = one_way_anova(values, labels)
    y, lab, levels = _groups(values, labels)
    mse = anova.ss_within / anova.df_within
    means = {lv: y[lab == lv].mean() for lv in levels}
    sizes = {lv: int((lab == lv).sum()) for lv in levels}
    pairs = list(combinations(levels, 2))
    rows = []
    for a, b in pairs:
        diff = float(means[a] - means[b])
        se = math.sqrt(mse * (1 / sizes[a] + 1 / sizes[b]))
        if anova.degenerate:
            same = abs(diff) <= 1e-12 * max(1.0, abs(means[a]), abs(means[b]))
            t = 0.0 if same else math.copysign(math.inf, diff)
            p = 1.0 if same else 0.0
        else:
            t = diff / se
            p = float(2 * stats.t.sf(abs(t), anova.df_within))
        if correction == "bonferroni":
            p = min(1.0, p * len(pairs))
        rows.append(PairwiseRow(a, b, diff, se, t, p, p < alpha))
    return PairwiseTable(tuple(rows), anova.df_within, alpha, correction, anova.degenerate)


def cluster_profile(projects, labels) -> dict:
    """Per-cluster means of the descriptive measures, shaped like a summary table.

    Returns ``{"sizes": {c: n}, "means": {measure: {c: mean}}}``.
    """
    projects = list(projects)
    lab = np.asarray(labels)
    if lab.shape[0] != len(projects):
        raise ValueError("one label per project required")
    rows = [project_measures(p) for p in projects]
    levels = sorted(set(lab.tolist()))
    out = {"sizes": {}, "means": {m: {} for m in MEASURES}}
    for lv in levels:
        idx = np.flatnonzero(lab == lv)
        out["sizes"][_plain(lv)] = int(idx.size)
        for m in MEASURES:
            out["means"][m][_plain(lv)] = float(np.mean([rows[i][m] for i in idx]))
    return out


def loc_complexity_correlation(projects) -> tuple[float, float]:
    """Pearson correlation of LOC and CplXLCoh pooled over all releases."""
    loc, cx = [], []
    for p in projects:
        for r in p.releases:
            loc.append(r.loc)
            cx.append(r.cplxlcoh)
    if len(loc) < 3 or np.std(loc) == 0 or np.std(cx) == 0:
        return math.nan, math.nan
    res = stats.pearsonr(loc, cx)
    return float(res[0]), float(res[1])


def _p_text(p: float) -> str:
    for cut in (0.001, 0.01, 0.05):
        if p < cut:
            return f"p < {cut:g}"
    return f"p = {p:.3f}"


def format_f(result) -> str:
    """Render a test the way results sections do, e.g. ``F3,55 = 4.570, p < 0.01``."""
    if isinstance(result, AnovaResult):
        d1, d2, f, p = result.df_between, result.df_within, result.f, result.p_value
    else:
        d1, d2, f, p = result.df1, result.df2, result.f_approx, result.p_value
    fmt = lambda d: str(int(d)) if float(d).is_integer() else f"{d:.2f}"
    return f"F{fmt(d1)},{fmt(d2)} = {f:.3f}, {_p_text(p)}"


def report_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
