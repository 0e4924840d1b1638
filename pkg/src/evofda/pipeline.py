"""End-to-end analysis: screening, curves, spline fits, clustering, inference.

:func:`run_pipeline` computes everything in memory and :func:`write_bundle`
renders it to a directory. :func:`cmd_run` does both and only publishes the
directory once every stage has succeeded.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import clustering, inference, splines, svgplot
from .ingest import (
    ProjectSeries,
    ScreeningCriteria,
    describe_sample,
    load_releases,
    screen_projects,
    screening_log_csv,
)
from .preprocess import (
    N_DAYS,
    align_and_truncate,
    curves_to_csv,
    outcome_scalars,
    standardize,
    to_daily_step,
)
from .synth import read_truth_csv

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "EVOFDA_OUTPUT_DIR"
# highest smoothing in the sensitivity sweep; effective df 2 is the
# straight-line limit and needs an infinite lambda
HIGH_SMOOTHING_EDF = 2.001

# config keys that change how a run executes but not what it computes;
# excluded from provenance so outputs do not depend on them
_RUNTIME_KEYS = ("output_dir", "jobs")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    releases: str | None = None
    truth: str | None = None
    output_dir: str = "evofda-out"
    min_loc_growth: float = 0.05
    min_releases: int = 1
    any_positive_growth: bool = False
    knots: int = 13
    lam: float | None = None
    target_edf: float = 5.0
    features: str = "coefficients"
    k_min: int = 2
    k_max: int = 5
    seed: int = 0
    restarts: int = 10
    standardize_mode: str = "center"
    fit_grid: str = "daily"
    sensitivity_k: int = 4
    jobs: int = 1

    def validate(self) -> "PipelineConfig":
        if self.min_loc_growth < 0:
            raise ValueError("min_loc_growth must be >= 0")
        if self.min_releases < 1:
            raise ValueError("min_releases must be >= 1")
        if self.knots < 2:
            raise ValueError("knots must be >= 2")
        if self.lam is not None and not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lam must be a finite number >= 0")
        if self.lam is None and not self.target_edf > 2:
            raise ValueError("target_edf must exceed 2")
        if self.features not in clustering.FEATURE_KINDS:
            raise ValueError(f"features must be one of {clustering.FEATURE_KINDS}")
        if not 2 <= self.k_min <= self.k_max:
            raise ValueError("need 2 <= k_min <= k_max")
        if self.sensitivity_k < 2:
            raise ValueError("sensitivity_k must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.standardize_mode not in ("center", "zscore"):
            raise ValueError("standardize_mode must be 'center' or 'zscore'")
        if self.fit_grid not in ("daily", "knots"):
            raise ValueError("fit_grid must be 'daily' or 'knots'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        return self

    @property
    def screening(self) -> ScreeningCriteria:
        return ScreeningCriteria(self.min_loc_growth, self.min_releases, self.any_positive_growth)

    def provenance(self) -> dict:
        d = dataclasses.asdict(self)
        for k in _RUNTIME_KEYS:
            d.pop(k)
        return d

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**mapping)

    @classmethod
    def from_toml(cls, path) -> "PipelineConfig":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ValueError(f"{path}: {exc}") from exc
        try:
            return cls.from_mapping(data)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: {exc}") from exc


@dataclass
class ProjectData:
    series: ProjectSeries
    window: ProjectSeries
    raw: object
    standardized: object
    percent_change: float
    active_life: int


@dataclass
class RunResult:
    config: PipelineConfig
    kept: list
    rejected: list
    notices: list = field(default_factory=list)
    projects: list = field(default_factory=list)
    knots: object = None
    lam: float | None = None
    edf: float | None = None
    fits_raw: list = field(default_factory=list)
    fits_std: list = field(default_factory=list)
    band_raw: object = None
    band_std: object = None
    solutions: list = field(default_factory=list)
    solutions_abs: list = field(default_factory=list)
    inference: dict = field(default_factory=dict)
    ari: dict = field(default_factory=dict)
    description: object = None

    @property
    def project_ids(self) -> list[str]:
        return [p.series.project_id for p in self.projects]


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _fit_grid(cfg: PipelineConfig, knots):
    if cfg.fit_grid == "daily":
        return None
    return np.unique(np.round(knots.breakpoints)).astype(float)


def _resolve_lambda(cfg: PipelineConfig, knots, grid) -> float:
    sm = splines.smoother_for(knots, grid)
    if cfg.lam is not None:
        return float(cfg.lam)
    return sm.lambda_for_edf(cfg.target_edf)


def _fit_all(curves, knots, lam, grid, jobs):
    if grid is None:
        sm = splines.smoother_for(knots)
        return _map(lambda c: sm.fit(c.values, lam, c.project_id), curves, jobs)
    return _map(lambda c: splines.fit_smoothing_spline(c, knots, lam, grid), curves, jobs)


def _full_fitted(fit):
    """Fitted values on days 0..730 regardless of the fitting grid."""
    if fit.grid.size == N_DAYS:
        return fit.fitted_values
    return splines.evaluate_spline(fit, np.arange(N_DAYS, dtype=float))


def _prepare(series: ProjectSeries, mode: str) -> ProjectData:
    aligned = align_and_truncate(series)
    raw = to_daily_step(aligned)
    window = ProjectSeries(series.project_id, aligned.releases)
    try:
        sc = outcome_scalars(aligned)
        pct, life = sc.percent_change, sc.active_life
    except ValueError:
        pct, life = math.nan, int(aligned.days[-1])
    return ProjectData(series, window, raw, standardize(raw, mode), pct, life)


def load_projects(path) -> list[ProjectSeries]:
    try:
        return load_releases(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def load_truth(path) -> dict[str, str]:
    try:
        return read_truth_csv(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def run_pipeline(cfg: PipelineConfig, projects=None, truth: dict | None = None) -> RunResult:
    """Run every analysis stage; raises :class:`PipelineError` naming the stage."""
    cfg.validate()

    stage = "ingest"
    try:
        if projects is None:
            if not cfg.releases:
                raise ValueError("no releases input given")
            projects = load_projects(cfg.releases)
        if truth is None and cfg.truth:
            truth = load_truth(cfg.truth)
        kept, rejected = screen_projects(projects, cfg.screening)
    except (OSError, ValueError) as exc:
        raise PipelineError(stage, exc) from exc
    res = RunResult(cfg, kept, rejected)
    if not kept:
        res.notices.append("no projects passed screening")
        return res

    stage = "preprocess"
    try:
        res.projects = _map(lambda s: _prepare(s, cfg.standardize_mode), kept, cfg.jobs)
        for p in res.projects:
            if math.isnan(p.percent_change):
                res.notices.append(f"percent change undefined for {p.series.project_id} (first CplXLCoh is 0)")
        res.description = describe_sample([p.window for p in res.projects])
    except ValueError as exc:
        raise PipelineError(stage, exc) from exc

    stage = "splines"
    try:
        res.knots = splines.make_knot_grid(cfg.knots)
        grid = _fit_grid(cfg, res.knots)
        res.lam = _resolve_lambda(cfg, res.knots, grid)
        res.edf = splines.smoother_for(res.knots, grid).edf(res.lam)
        res.fits_raw = _fit_all([p.raw for p in res.projects], res.knots, res.lam, grid, cfg.jobs)
        res.fits_std = _fit_all([p.standardized for p in res.projects], res.knots, res.lam, grid, cfg.jobs)
    except (ValueError, splines.SplineFitError) as exc:
        raise PipelineError(stage, exc) from exc

    n = len(res.projects)
    if n < 2:
        res.notices.append("n < 2: stopping before mean band and clustering")
        return res

    stage = "mean_band"
    try:
        res.band_raw = _band(res.fits_raw)
        res.band_std = _band(res.fits_std)
    except ValueError as exc:
        raise PipelineError(stage, exc) from exc

    stage = "clustering"
    try:
        ks = [k for k in range(cfg.k_min, cfg.k_max + 1) if k <= n]
        if len(ks) < cfg.k_max - cfg.k_min + 1:
            res.notices.append(f"k limited to <= {n} (number of projects)")
        ids = res.project_ids
        for fits, out in ((res.fits_std, res.solutions), (res.fits_raw, res.solutions_abs)):
            feats = _features(fits, cfg.features)
            dist = clustering.distance_matrix(feats)
            out.extend(clustering.sweep_k(dist, ks, cfg.seed, cfg.restarts, project_ids=ids))
        if any(s.degenerate for s in res.solutions):
            res.notices.append("clustering degenerate: fewer distinct curves than clusters")
        if truth is not None:
            labels = [truth.get(pid) for pid in ids]
            if None in labels:
                res.notices.append("truth file does not cover every kept project; ARI skipped")
            else:
                res.ari = {s.k: clustering.adjusted_rand_index(labels, s.labels) for s in res.solutions}
    except ValueError as exc:
        raise PipelineError(stage, exc) from exc

    stage = "inference"
    try:
        for sol in res.solutions:
            res.inference[sol.k] = _inference_for(res, sol)
    except ValueError as exc:
        raise PipelineError(stage, exc) from exc
    return res


def _band(fits):
    if fits[0].grid.size == N_DAYS:
        return splines.mean_curve_with_ci(fits)
    Y = np.vstack([_full_fitted(f) for f in fits])
    mean = Y.mean(axis=0)
    half = 1.96 * Y.std(axis=0, ddof=1) / math.sqrt(Y.shape[0])
    return splines.MeanBand(np.arange(N_DAYS, dtype=float), mean, mean - half, mean + half, n=Y.shape[0])


def _features(fits, kind):
    if kind == "coefficients":
        return clustering.FeatureMatrix.from_fits(fits, kind)
    return clustering.FeatureMatrix(
        tuple(f.project_id for f in fits), np.vstack([_full_fitted(f) for f in fits]), kind
    )


OUTCOME_VARS = ("percent_change", "active_life")
DESCRIPTOR_VARS = ("first_release_loc", "number_of_releases", "release_frequency_days", "loc_percent_increase")


def _guarded(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ValueError as exc:
        return {"error": str(exc)}


def _test_block(table: dict, labels, names) -> dict:
    Y = np.column_stack([table[v] for v in names])
    ok = ~np.isnan(Y).any(axis=1)
    Y, lab = Y[ok], np.asarray(labels)[ok]
    out = {"n": int(ok.sum()), "univariate": {}, "pairwise": {}}
    mres = _guarded(inference.manova, Y, lab, names=names)
    out["multivariate"] = mres if isinstance(mres, dict) else {**mres.to_dict(), "text": inference.format_f(mres)}
    for j, v in enumerate(names):
        a = _guarded(inference.one_way_anova, Y[:, j], lab)
        out["univariate"][v] = a if isinstance(a, dict) else {**a.to_dict(), "text": inference.format_f(a)}
        pw = _guarded(inference.pairwise_comparisons, Y[:, j], lab)
        out["pairwise"][v] = pw if isinstance(pw, dict) else pw.to_list()
    return out


def _inference_for(res: RunResult, sol) -> dict:
    labels = sol.labels
    table = {
        "percent_change": np.array([p.percent_change for p in res.projects]),
        "active_life": np.array([p.active_life for p in res.projects], dtype=float),
        "first_release_loc": np.array([p.window.first.loc for p in res.projects], dtype=float),
        "number_of_releases": np.array([len(p.window) for p in res.projects], dtype=float),
        "release_frequency_days": np.array(
            [describe_sample([p.window]).measures["release_frequency_days"].mean for p in res.projects]
        ),
        "loc_percent_increase": np.array([p.window.loc_growth for p in res.projects]),
    }
    r, p = inference.loc_complexity_correlation([pp.window for pp in res.projects])
    return {
        "k": sol.k,
        "outcomes": _test_block(table, labels, OUTCOME_VARS),
        "descriptors": _test_block(table, labels, DESCRIPTOR_VARS),
        "profile": inference.cluster_profile([pp.window for pp in res.projects], labels),
        "loc_cplxlcoh_correlation": {"r": _num(r), "p_value": _num(p)},
    }


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def cluster_mean_curves(fits, labels, k: int) -> dict[int, np.ndarray]:
    Y = np.vstack([_full_fitted(f) for f in fits])
    lab = np.asarray(labels)
    return {c: Y[lab == c].mean(axis=0) for c in range(1, k + 1) if (lab == c).any()}


def shape_signature(fits, labels, k: int) -> dict:
    """Direction of net change (day 730 minus day 0) of each cluster mean."""
    means = cluster_mean_curves(fits, labels, k)
    dirs = {c: int(np.sign(m[-1] - m[0])) for c, m in means.items()}
    return {
        "net_change": {c: float(m[-1] - m[0]) for c, m in means.items()},
        "direction": dirs,
        "n_increasing": sum(d > 0 for d in dirs.values()),
        "n_decreasing": sum(d < 0 for d in dirs.values()),
    }


# ---------------------------------------------------------------- output


class _Writer:
    def __init__(self, root: Path, provenance: dict):
        self.root = root
        self.prov = provenance
        self.prov_line = json.dumps(provenance, sort_keys=True, separators=(",", ":"))

    def _path(self, name):
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def csv(self, name, text):
        self._path(name).write_text(f"# config: {self.prov_line}\n{text}", encoding="utf-8")

    def text(self, name, text):
        self.csv(name, text)

    def json(self, name, data):
        body = {"config": self.prov, "data": data}
        self._path(name).write_text(json.dumps(body, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")

    def svg(self, name, text):
        self._path(name).write_text(text, encoding="utf-8")


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _r(x) -> str:
    return repr(float(x))


def write_bundle(res: RunResult, root) -> list[str]:
    """Write all run artifacts under ``root``; returns relative file names."""
    root = Path(root)
    w = _Writer(root, res.config.provenance())
    w.csv("screening_log.csv", screening_log_csv(res.kept, res.rejected))

    summary = {
        "n_input": len(res.kept) + len(res.rejected),
        "n_kept": len(res.kept),
        "notices": res.notices,
        "lambda": res.lam,
        "effective_df": res.edf,
        "knots": res.knots.to_dict() if res.knots else None,
        "k_values": [s.k for s in res.solutions],
        "ari_vs_truth": {str(k): v for k, v in res.ari.items()},
        "degenerate_clustering": any(s.degenerate for s in res.solutions),
    }
    w.json("summary.json", summary)
    if not res.projects:
        return _listing(root)

    w.json("descriptive_stats.json", res.description.to_dict())
    w.text("descriptive_stats.txt", res.description.format_table())
    w.csv("curves_raw.csv", curves_to_csv([p.raw for p in res.projects]))
    w.csv("curves_standardized.csv", curves_to_csv([p.standardized for p in res.projects]))
    w.csv("outcomes.csv", _table_csv(
        ["project_id", "percent_change", "active_life"],
        [[p.series.project_id, _r(p.percent_change), p.active_life] for p in res.projects],
    ))
    w.json("fits_raw.json", [f.to_dict() for f in res.fits_raw])
    w.json("fits_standardized.json", [f.to_dict() for f in res.fits_std])

    if res.band_raw is None:
        return _listing(root)
    for tag, band, ylab in (("raw", res.band_raw, "CplXLCoh"), ("standardized", res.band_std, "standardized CplXLCoh")):
        w.csv(f"mean_band_{tag}.csv", band.to_csv())
        w.svg(f"mean_band_{tag}.svg", svgplot.band_chart(
            band, title=f"Mean curve, {tag} values (n = {band.n})", ylabel=ylab, comment=f"config: {w.prov_line}"
        ))

    if res.solutions:
        w.csv("cluster_membership.csv", clustering.membership_table_csv(res.solutions))
        w.csv("cluster_membership_absolute.csv", clustering.membership_table_csv(res.solutions_abs))
    grid = np.arange(N_DAYS)
    overall = res.band_std.mean
    for sol, sol_abs in zip(res.solutions, res.solutions_abs):
        k = sol.k
        w.json(f"clusters/standardized_k{k}.json", sol.to_dict())
        w.json(f"clusters/absolute_k{k}.json", sol_abs.to_dict())
        means = cluster_mean_curves(res.fits_std, sol.labels, k)
        w.csv(f"cluster_means_k{k}.csv", _table_csv(
            ["day", *(f"cluster_{c}" for c in means), "overall"],
            [[d, *(_r(m[d]) for m in means.values()), _r(overall[d])] for d in grid],
        ))
        w.svg(f"cluster_means_k{k}.svg", svgplot.cluster_means_chart(
            grid, means, overall, title=f"{k}-cluster mean functions", comment=f"config: {w.prov_line}"
        ))
        inf = res.inference[k]
        inf = {**inf, "shape_signature": _str_keys(shape_signature(res.fits_std, sol.labels, k))}
        w.json(f"inference_k{k}.json", _str_keys(inf))
        prof = inf["profile"]
        cl = list(prof["sizes"])
        w.csv(f"cluster_profile_k{k}.csv", _table_csv(
            ["measure", *(f"cluster_{c}" for c in cl)],
            [["size", *(prof["sizes"][c] for c in cl)]]
            + [[m, *(_r(prof["means"][m][c]) for c in cl)] for m in prof["means"]],
        ))
    w.text("report.txt", format_report(res))
    return _listing(root)


def _str_keys(obj):
    if isinstance(obj, dict):
        return {str(k): _str_keys(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_str_keys(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _listing(root: Path) -> list[str]:
    return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())


def format_report(res: RunResult) -> str:
    lines = [f"projects kept: {len(res.kept)} of {len(res.kept) + len(res.rejected)}"]
    if res.lam is not None:
        lines.append(f"knots: {res.knots.count} interior, lambda = {res.lam:.6g}, effective df = {res.edf:.3f}")
    for note in res.notices:
        lines.append(f"notice: {note}")
    if res.description is not None:
        lines += ["", "Descriptive statistics", res.description.format_table()]
    if res.solutions:
        lines.append("Cluster sizes (standardized curves)")
        for s in res.solutions:
            extra = f"  ARI vs truth {res.ari[s.k]:.3f}" if s.k in res.ari else ""
            within = "n/a" if s.avg_within is None else f"{s.avg_within:.2f}"
            between = "n/a" if s.avg_between is None else f"{s.avg_between:.2f}"
            lines.append(f"  k={s.k}: sizes {s.sizes}  within {within}  between {between}{extra}")
    for k, inf in res.inference.items():
        lines.append("")
        lines.append(f"k = {k}")
        for block in ("outcomes", "descriptors"):
            b = inf[block]
            mv = b["multivariate"]
            lines.append(f"  {block} MANOVA: {mv.get('text', mv.get('error'))}")
            for v, a in b["univariate"].items():
                eta = f", eta^2 = {a['eta_squared']:.3f}" if "eta_squared" in a else ""
                lines.append(f"    {v}: {a.get('text', a.get('error'))}{eta}")
    return "\n".join(lines) + "\n"


def _publish(build, target: Path):
    """Build into a temporary sibling directory and move it into place."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        out = build(tmp)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if target.exists():
        shutil.rmtree(target)
    os.replace(tmp, target)
    return out


def resolve_output_dir(cfg: PipelineConfig) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir)


def cmd_run(cfg: PipelineConfig, projects=None, truth=None) -> tuple[RunResult, list[str]]:
    def build(tmp):
        res = run_pipeline(cfg, projects, truth)
        try:
            files = write_bundle(res, tmp)
        except (OSError, ValueError) as exc:
            raise PipelineError("output", exc) from exc
        return res, files

    return _publish(build, resolve_output_dir(cfg))


# ----------------------------------------------------------- sensitivity

SCREENING_VARIANTS = {
    "default": None,  # the base config's criteria
    "min3": {"min_releases": 3},
    "anypos": {"any_positive_growth": True},
}
SMOOTHING_VARIANTS = ("low", "default", "high")


@dataclass
class Variant:
    knots: int
    smoothing: str
    features: str
    screening: str

    @property
    def name(self) -> str:
        return f"knots{self.knots}-{self.smoothing}-{self.features}-{self.screening}"


def sensitivity_variants(knots=(6, 13, 26), smoothing=SMOOTHING_VARIANTS,
                         features=clustering.FEATURE_KINDS, screening=tuple(SCREENING_VARIANTS)):
    return [Variant(*v) for v in product(knots, smoothing, features, screening)]


def _variant_lambda(cfg, knots, smoothing, grid) -> float:
    sm = splines.smoother_for(knots, grid)
    if smoothing == "low":
        return 0.0
    if smoothing == "high":
        return sm.lambda_for_edf(HIGH_SMOOTHING_EDF)
    if smoothing == "default":
        return _resolve_lambda(cfg, knots, grid)
    raise ValueError(f"unknown smoothing variant {smoothing!r}")


def run_sensitivity(cfg: PipelineConfig, variants=None, projects=None, truth=None) -> dict:
    """Cluster at ``cfg.sensitivity_k`` under each variant and compare.

    Returns a dict with per-variant signatures and the pairwise ARI matrix
    (computed on the projects every variant kept).
    """
    cfg.validate()
    variants = list(variants) if variants is not None else sensitivity_variants()
    if projects is None:
        projects = load_projects(cfg.releases)
    if truth is None and cfg.truth:
        truth = load_truth(cfg.truth)
    k = cfg.sensitivity_k

    prepared = {}
    for scr in sorted({v.screening for v in variants}):
        if scr not in SCREENING_VARIANTS:
            raise ValueError(f"unknown screening variant {scr!r}")
        sub = dataclasses.replace(cfg, **(SCREENING_VARIANTS[scr] or {}))
        kept, _ = screen_projects(projects, sub.screening)
        prepared[scr] = _map(lambda s: _prepare(s, cfg.standardize_mode), kept, cfg.jobs)

    results = []
    for v in variants:
        pdata = prepared[v.screening]
        ids = [p.series.project_id for p in pdata]
        if len(pdata) < k:
            results.append({"variant": dataclasses.asdict(v), "name": v.name, "error": f"only {len(pdata)} projects for k={k}"})
            continue
        knots = splines.make_knot_grid(v.knots)
        grid = _fit_grid(cfg, knots)
        lam = _variant_lambda(cfg, knots, v.smoothing, grid)
        fits = _fit_all([p.standardized for p in pdata], knots, lam, grid, cfg.jobs)
        dist = clustering.distance_matrix(_features(fits, v.features))
        sol = clustering.kmedoids(dist, k, cfg.seed, cfg.restarts, project_ids=ids)
        entry = {
            "variant": dataclasses.asdict(v),
            "name": v.name,
            "n": len(ids),
            "lambda": lam,
            "effective_df": splines.smoother_for(knots, grid).edf(lam),
            "sizes": sol.sizes,
            "objective": sol.total_dissimilarity,
            "signature": shape_signature(fits, sol.labels, k),
            "assignment": sol.assignment(),
        }
        if truth is not None and all(i in truth for i in ids):
            entry["ari_vs_truth"] = clustering.adjusted_rand_index([truth[i] for i in ids], sol.labels)
        results.append(entry)

    ok = [r for r in results if "error" not in r]
    common = set.intersection(*(set(r["assignment"]) for r in ok)) if ok else set()
    common = sorted(common)
    ari = [
        [clustering.adjusted_rand_index([a["assignment"][i] for i in common], [b["assignment"][i] for i in common])
         if common else None for b in ok]
        for a in ok
    ]
    return {
        "k": k,
        "variants": results,
        "ari_matrix": {"names": [r["name"] for r in ok], "values": ari, "n_common": len(common)},
        "all_two_up_two_down": bool(ok) and len(ok) == len(results) and all(
            r["signature"]["n_increasing"] == 2 and r["signature"]["n_decreasing"] == 2 for r in ok
        ),
    }


def format_sensitivity(rep: dict) -> str:
    lines = [f"sensitivity sweep at k = {rep['k']}"]
    for r in rep["variants"]:
        if "error" in r:
            lines.append(f"  {r['name']}: {r['error']}")
            continue
        sig = r["signature"]
        ari = f"  ARI vs truth {r['ari_vs_truth']:.3f}" if "ari_vs_truth" in r else ""
        lines.append(
            f"  {r['name']}: up {sig['n_increasing']} / down {sig['n_decreasing']}  sizes {r['sizes']}{ari}"
        )
    vals = [v for row in rep["ari_matrix"]["values"] for v in row if v is not None]
    if vals:
        lines.append(f"cross-variant ARI: min {min(vals):.3f}, mean {float(np.mean(vals)):.3f}")
    lines.append(f"every variant 2 up / 2 down: {rep['all_two_up_two_down']}")
    return "\n".join(lines) + "\n"


def cmd_sensitivity(cfg: PipelineConfig, variants=None, projects=None, truth=None):
    def build(tmp):
        rep = run_sensitivity(cfg, variants, projects, truth)
        w = _Writer(Path(tmp), cfg.provenance())
        w.json("sensitivity.json", _str_keys({k: v for k, v in rep.items()}))
        names = rep["ari_matrix"]["names"]
        w.csv("sensitivity_ari.csv", _table_csv(
            ["variant", *names],
            [[n, *("" if v is None else _r(v) for v in row)] for n, row in zip(names, rep["ari_matrix"]["values"])],
        ))
        w.text("sensitivity.txt", format_sensitivity(rep))
        return rep

    return _publish(build, resolve_output_dir(cfg))


def cmd_ingest(cfg: PipelineConfig, projects=None) -> tuple[list, list]:
    """Screen the release file and write the screening log and sample statistics."""
    cfg.validate()

    def build(tmp):
        try:
            projs = projects if projects is not None else load_projects(cfg.releases)
            kept, rejected = screen_projects(projs, cfg.screening)
        except (OSError, ValueError) as exc:
            raise PipelineError("ingest", exc) from exc
        w = _Writer(Path(tmp), cfg.provenance())
        w.csv("screening_log.csv", screening_log_csv(kept, rejected))
        if kept:
            stats = describe_sample(kept)
            w.json("descriptive_stats.json", stats.to_dict())
            w.text("descriptive_stats.txt", stats.format_table())
        return kept, rejected

    return _publish(build, resolve_output_dir(cfg))
