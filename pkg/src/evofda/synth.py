"""Seeded synthetic release histories from four complexity-evolution shapes.

The shapes are invented templates built from logistic ramps:

early_increase
    rises over roughly the first 150 days, flat afterwards
midterm_increase
    rises mostly between days 200 and 400
early_decrease
    falls over the first months, flat, then drifts back up in the last
    150 days (net change stays negative)
midterm_decrease
    falls steadily until about day 400, flat afterwards

Release days follow gamma-distributed gaps (mean and coefficient of
variation configurable); release values are the template at the release day
plus Gaussian noise.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .ingest import ProjectSeries, ReleaseRecord
from .preprocess import HORIZON_DAYS

__all__ = [
    "FAMILIES",
    "ShapeFamily",
    "CorpusSpec",
    "family",
    "generate_project",
    "generate_corpus",
    "truth_csv",
]

FAMILIES = ("early_decrease", "early_increase", "midterm_increase", "midterm_decrease")

_EPOCH = date(2000, 1, 1)
_MIN_VALUE = 0.01


def _ramp(t, center, width):
    return 1.0 / (1.0 + np.exp(-(np.asarray(t, dtype=float) - center) / width))


@dataclass(frozen=True)
class ShapeFamily:
    """A template ``amplitude * (direction * ramp(main) + drift * ramp(tail))``.

    ``main_window`` and ``drift_window`` are (start, end) days over which the
    corresponding ramp does most of its change (about 5% to 95%).
    """

    name: str
    direction: int
    main_window: tuple[float, float]
    terminal_drift: float = 0.0
    drift_window: tuple[float, float] = (580.0, 730.0)
    amplitude: float = 40.0

    def template(self, days) -> np.ndarray:
        c, w = _window(self.main_window)
        shape = self.direction * _ramp(days, c, w)
        if self.terminal_drift:
            dc, dw = _window(self.drift_window)
            shape = shape + self.terminal_drift * _ramp(days, dc, dw)
        return self.amplitude * shape

    @property
    def net_direction(self) -> int:
        net = self.template(HORIZON_DAYS) - self.template(0)
        return int(np.sign(net))


def _window(win):
    start, end = win
    # logistic goes 5% -> 95% over 2 * ln(19) widths
    return (start + end) / 2, (end - start) / (2 * np.log(19))


_TEMPLATES = {
    "early_decrease": ShapeFamily("early_decrease", -1, (0.0, 150.0), 0.35, (580.0, 730.0)),
    "early_increase": ShapeFamily("early_increase", +1, (0.0, 150.0)),
    "midterm_increase": ShapeFamily("midterm_increase", +1, (200.0, 400.0)),
    "midterm_decrease": ShapeFamily("midterm_decrease", -1, (0.0, 400.0)),
}


def family(name: str, amplitude: float | None = None) -> ShapeFamily:
    try:
        fam = _TEMPLATES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {FAMILIES}") from None
    if amplitude is not None:
        fam = ShapeFamily(fam.name, fam.direction, fam.main_window, fam.terminal_drift,
                          fam.drift_window, float(amplitude))
    return fam


@dataclass(frozen=True)
class CorpusSpec:
    counts: dict = field(default_factory=lambda: {f: 15 for f in FAMILIES})
    amplitude: float = 40.0
    noise_sd: float = 2.0
    gap_mean_days: float = 56.0
    gap_cv: float = 0.5
    base_range: tuple[float, float] = (60.0, 160.0)
    loc_start_range: tuple[int, int] = (400, 20000)
    loc_growth_range: tuple[float, float] = (0.10, 2.0)
    start_spread_days: int = 1000
    seed: int = 0

    def __post_init__(self):
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("family counts must be >= 0")
        if set(self.counts) - set(FAMILIES):
            raise ValueError(f"unknown families {set(self.counts) - set(FAMILIES)}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if not self.gap_mean_days >= 1:
            raise ValueError("gap_mean_days must be >= 1")
        if not self.gap_cv > 0:
            raise ValueError("gap_cv must be > 0")
        if self.loc_growth_range[0] < 0.05:
            raise ValueError("LOC growth below 5% would fail default screening")


def _draw_gap(rng, mean: float, cv: float) -> int:
    """Whole-day gap >= 1 from a gamma law; ``cv=1`` is the memoryless case."""
    shape = 1.0 / cv**2
    return max(1, int(round(rng.gamma(shape, mean / shape))))


def generate_project(family_name: str, spec: CorpusSpec, seed, project_id: str | None = None) -> ProjectSeries:
    """One synthetic project; deterministic in ``(family_name, spec, seed)``.

    ``seed`` may be an int or a sequence of ints (as accepted by
    :func:`numpy.random.default_rng`).
    """
    fam = family(family_name, spec.amplitude)
    if spec.gap_mean_days > HORIZON_DAYS:
        warnings.warn("mean release gap exceeds the window; expect fewer than 2 releases", stacklevel=2)
    rng = np.random.default_rng(seed)

    days = [0]
    while True:
        nxt = days[-1] + _draw_gap(rng, spec.gap_mean_days, spec.gap_cv)
        if nxt > HORIZON_DAYS:
            break
        days.append(nxt)
    days = np.array(days)

    base = rng.uniform(*spec.base_range)
    values = base + fam.template(days) + rng.normal(0.0, spec.noise_sd, days.size)
    values = np.maximum(values, _MIN_VALUE)

    loc0 = int(rng.integers(spec.loc_start_range[0], spec.loc_start_range[1] + 1))
    growth = rng.uniform(*spec.loc_growth_range)
    loc_last = int(np.ceil(loc0 * (1 + growth)))
    steps = rng.uniform(0.05, 1.0, days.size - 1)
    cum = np.concatenate([[0.0], np.cumsum(steps) / max(steps.sum(), 1.0)])
    locs = np.round(loc0 + (loc_last - loc0) * cum).astype(int)
    for i in range(1, locs.size):
        locs[i] = max(locs[i], locs[i - 1] + 1)

    start = _EPOCH + timedelta(days=int(rng.integers(0, spec.start_spread_days + 1)))
    pid = project_id or f"{family_name}-{rng.integers(0, 10**6):06d}"
    releases = tuple(
        ReleaseRecord(pid, start + timedelta(days=int(d)), int(l), float(v))
        for d, l, v in zip(days, locs, values)
    )
    return ProjectSeries(pid, releases)


def generate_corpus(spec: CorpusSpec):
    """Labelled corpus: ``(projects, labels)`` with labels the family names.

    Project ``i`` is drawn with seed ``[spec.seed, i]`` so projects do not
    depend on each other or on generation order.
    """
    total = sum(spec.counts.get(f, 0) for f in FAMILIES)
    if total < 8:
        raise ValueError(f"corpus needs at least 8 projects, got {total}")
    projects, labels = [], []
    i = 0
    for fam in FAMILIES:
        for _ in range(spec.counts.get(fam, 0)):
            pid = f"P{i + 1:03d}"
            projects.append(generate_project(fam, spec, [spec.seed, i], project_id=pid))
            labels.append(fam)
            i += 1
    return projects, labels


def truth_csv(projects, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["project_id", "family"])
    for p, lab in zip(projects, labels):
        w.writerow([p.project_id, lab])
    return buf.getvalue()


def read_truth_csv(content: str) -> dict[str, str]:
    reader = csv.DictReader(io.StringIO(content))
    if reader.fieldnames != ["project_id", "family"]:
        raise ValueError(f"unexpected truth header {reader.fieldnames}")
    return {row["project_id"]: row["family"] for row in reader}
