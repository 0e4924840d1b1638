"""Functional data analysis of software complexity evolution.

Modules
-------
metrics
    Coupling, lack of cohesion and LOC from code-model fact files.
ingest
    Release CSV loading, screening and descriptive statistics.
preprocess
    Alignment, 730-day truncation, daily step curves, standardization.
splines
    Penalized cubic B-spline smoothing and mean curve bands.
clustering
    K-medoids on spline features, adjusted Rand index.
inference
    ANOVA, MANOVA and pairwise comparisons between clusters.
synth
    Seeded synthetic corpora with known evolution shapes.
pipeline
    End-to-end runs, output bundles and the sensitivity sweep.
"""

from .clustering import adjusted_rand_index, distance_matrix, kmedoids
from .ingest import describe_sample, load_releases, screen_projects, ScreeningCriteria
from .pipeline import PipelineConfig, cmd_run, cmd_sensitivity, run_pipeline, run_sensitivity
from .preprocess import align_and_truncate, standardize, to_daily_step
from .splines import SplineSmoother, default_knot_count, fit_smoothing_spline, make_knot_grid, mean_curve_with_ci

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "ScreeningCriteria",
    "SplineSmoother",
    "adjusted_rand_index",
    "align_and_truncate",
    "cmd_run",
    "cmd_sensitivity",
    "default_knot_count",
    "describe_sample",
    "distance_matrix",
    "fit_smoothing_spline",
    "kmedoids",
    "load_releases",
    "make_knot_grid",
    "mean_curve_with_ci",
    "run_pipeline",
    "run_sensitivity",
    "screen_projects",
    "standardize",
    "to_daily_step",
]
