"""Release-history loading, project screening and sample description."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

__all__ = [
    "HEADER_COMPLEXITY",
    "HEADER_COMPONENTS",
    "HEADER_FULL",
    "ReleaseFormatError",
    "ReleaseRecord",
    "ProjectSeries",
    "ScreeningCriteria",
    "Rejection",
    "MeasureStats",
    "DescriptiveStats",
    "load_releases",
    "dump_releases",
    "screen_projects",
    "screening_log_csv",
    "release_frequency",
    "describe_sample",
]

HEADER_COMPLEXITY = ("project_id", "release_date", "loc", "cplxlcoh")
HEADER_COMPONENTS = ("project_id", "release_date", "loc", "cpl", "lcoh")
HEADER_FULL = ("project_id", "release_date", "loc", "cplxlcoh", "cpl", "lcoh")

# Relative slack allowed between a stored cross-term and cpl * lcoh, since
# the CSV carries decimal renderings of all three.
_PRODUCT_RTOL = 1e-6


class ReleaseFormatError(ValueError):
    """Bad release CSV content. ``lineno`` is the 1-based CSV line."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ReleaseRecord:
    project_id: str
    release_date: date
    loc: int
    cplxlcoh: float
    cpl: float | None = None
    lcoh: float | None = None

    def __post_init__(self):
        if self.loc < 1:
            raise ValueError(f"LOC must be positive, got {self.loc}")
        if not self.cplxlcoh >= 0:
            raise ValueError(f"CplXLCoh must be non-negative, got {self.cplxlcoh}")
        if (self.cpl is None) != (self.lcoh is None):
            raise ValueError("cpl and lcoh must be given together")
        if self.cpl is not None:
            prod = self.cpl * self.lcoh
            if not math.isclose(prod, self.cplxlcoh, rel_tol=_PRODUCT_RTOL, abs_tol=1e-12):
                raise ValueError(
                    f"cplxlcoh {self.cplxlcoh} != cpl*lcoh {prod}"
                )


@dataclass(frozen=True)
class ProjectSeries:
    project_id: str
    releases: tuple[ReleaseRecord, ...]

    def __post_init__(self):
        if not self.releases:
            raise ValueError(f"project {self.project_id!r} has no releases")
        for r in self.releases:
            if r.project_id != self.project_id:
                raise ValueError(f"release of {r.project_id!r} in series {self.project_id!r}")
        for a, b in zip(self.releases, self.releases[1:]):
            if b.release_date == a.release_date:
                raise ValueError(
                    f"duplicate release date {a.release_date} in project {self.project_id!r}"
                )
            if b.release_date < a.release_date:
                raise ValueError(f"releases of {self.project_id!r} not in date order")

    @property
    def first(self) -> ReleaseRecord:
        return self.releases[0]

    @property
    def last(self) -> ReleaseRecord:
        return self.releases[-1]

    def __len__(self):
        return len(self.releases)

    @property
    def loc_growth(self) -> float:
        return (self.last.loc - self.first.loc) / self.first.loc


def _parse_row(row: list[str], header: tuple[str, ...], lineno: int) -> ReleaseRecord:
    if len(row) != len(header):
        raise ReleaseFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
    rec = dict(zip(header, (v.strip() for v in row)))
    if not rec["project_id"]:
        raise ReleaseFormatError("empty project_id", lineno)
    try:
        day = date.fromisoformat(rec["release_date"])
    except ValueError:
        raise ReleaseFormatError(f"bad ISO date {rec['release_date']!r}", lineno) from None
    try:
        loc = int(rec["loc"])
    except ValueError:
        raise ReleaseFormatError(f"bad LOC {rec['loc']!r}", lineno) from None
    if loc < 1:
        raise ReleaseFormatError(f"non-positive LOC {loc}", lineno)
    try:
        cpl = float(rec["cpl"]) if "cpl" in rec else None
        lcoh = float(rec["lcoh"]) if "lcoh" in rec else None
        if "cplxlcoh" in rec:
            cross = float(rec["cplxlcoh"])
        else:
            cross = cpl * lcoh
    except ValueError as exc:
        raise ReleaseFormatError(f"bad number: {exc}", lineno) from None
    try:
        return ReleaseRecord(rec["project_id"], day, loc, cross, cpl, lcoh)
    except ValueError as exc:
        raise ReleaseFormatError(str(exc), lineno) from None


def load_releases(content: str) -> list[ProjectSeries]:
    """Parse release CSV text into date-sorted per-project series.

    The header must be exactly one of ``HEADER_COMPLEXITY``,
    ``HEADER_COMPONENTS`` or ``HEADER_FULL``. Projects come back in order of
    first appearance in the file.
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise ReleaseFormatError("missing header", 1) from None
    if header not in (HEADER_COMPLEXITY, HEADER_COMPONENTS, HEADER_FULL):
        raise ReleaseFormatError(f"unexpected header {','.join(header)!r}", 1)

    by_project: dict[str, list[tuple[ReleaseRecord, int]]] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or all(not v.strip() for v in row):
            continue
        rec = _parse_row(row, header, lineno)
        by_project.setdefault(rec.project_id, []).append((rec, lineno))

    out = []
    for pid, recs in by_project.items():
        recs.sort(key=lambda t: t[0].release_date)
        for (a, _), (b, line_b) in zip(recs, recs[1:]):
            if a.release_date == b.release_date:
                raise ReleaseFormatError(
                    f"duplicate release date {b.release_date} for project {pid!r}", line_b
                )
        out.append(ProjectSeries(pid, tuple(r for r, _ in recs)))
    return out


def dump_releases(projects) -> str:
    """Serialize series back to CSV; floats use ``repr`` so reloading is exact."""
    projects = list(projects)
    with_parts = [p for p in projects if p.first.cpl is not None]
    if with_parts and len(with_parts) != len(projects):
        raise ValueError("cannot mix records with and without cpl/lcoh in one file")
    header = HEADER_FULL if with_parts else HEADER_COMPLEXITY
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for p in projects:
        for r in p.releases:
            row = [r.project_id, r.release_date.isoformat(), r.loc, repr(float(r.cplxlcoh))]
            if header is HEADER_FULL:
                row += [repr(float(r.cpl)), repr(float(r.lcoh))]
            w.writerow(row)
    return buf.getvalue()


@dataclass(frozen=True)
class ScreeningCriteria:
    min_loc_growth_fraction: float = 0.05
    min_release_count: int = 1
    require_any_positive_growth: bool = False

    def __post_init__(self):
        if self.min_loc_growth_fraction < 0:
            raise ValueError("min_loc_growth_fraction must be >= 0")
        if self.min_release_count < 1:
            raise ValueError("min_release_count must be >= 1")


@dataclass(frozen=True)
class Rejection:
    project: ProjectSeries
    reason: str


def screen_projects(projects, criteria: ScreeningCriteria = ScreeningCriteria()):
    """Split projects into ``(kept, rejected)``.

    Rejections carry one of the reasons ``too_few_releases`` or
    ``insufficient_loc_growth``. The release-count test is applied first.
    """
    kept, rejected = [], []
    for p in projects:
        growth = p.loc_growth
        if len(p) < criteria.min_release_count:
            rejected.append(Rejection(p, "too_few_releases"))
        elif criteria.require_any_positive_growth and not growth > 0:
            rejected.append(Rejection(p, "insufficient_loc_growth"))
        elif not criteria.require_any_positive_growth and growth < criteria.min_loc_growth_fraction:
            rejected.append(Rejection(p, "insufficient_loc_growth"))
        else:
            kept.append(p)
    return kept, rejected


def screening_log_csv(kept, rejected) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["project_id", "kept", "reason"])
    for p in kept:
        w.writerow([p.project_id, "true", ""])
    for r in rejected:
        w.writerow([r.project.project_id, "false", r.reason])
    return buf.getvalue()


def release_frequency(series: ProjectSeries) -> float:
    """Mean days between consecutive releases; 0 for a single release."""
    if len(series) < 2:
        return 0.0
    span = (series.last.release_date - series.first.release_date).days
    return span / (len(series) - 1)


@dataclass(frozen=True)
class MeasureStats:
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values) -> "MeasureStats":
        v = np.asarray(values, dtype=float)
        std = float(v.std(ddof=1)) if v.size > 1 else 0.0
        # clip guards against mean drifting a ulp outside [min, max]
        mean = float(np.clip(v.mean(), v.min(), v.max()))
        return cls(mean, std, float(v.min()), float(v.max()))


MEASURES = (
    "number_of_releases",
    "release_frequency_days",
    "first_release_loc",
    "last_release_loc",
    "first_release_cplxlcoh",
    "last_release_cplxlcoh",
)


def project_measures(series: ProjectSeries) -> dict[str, float]:
    return {
        "number_of_releases": float(len(series)),
        "release_frequency_days": release_frequency(series),
        "first_release_loc": float(series.first.loc),
        "last_release_loc": float(series.last.loc),
        "first_release_cplxlcoh": series.first.cplxlcoh,
        "last_release_cplxlcoh": series.last.cplxlcoh,
    }


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    measures: dict[str, MeasureStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "measures": {
                k: {"mean": s.mean, "std": s.std, "min": s.min, "max": s.max}
                for k, s in self.measures.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        lines = [f"{'Measure':<28}{'Mean':>12}{'Std dev':>12}{'Min':>12}{'Max':>12}"]
        for k, s in self.measures.items():
            lines.append(f"{k:<28}{s.mean:>12.2f}{s.std:>12.2f}{s.min:>12.2f}{s.max:>12.2f}")
        return "\n".join(lines) + "\n"


def describe_sample(projects) -> DescriptiveStats:
    """Sample statistics over projects (sample std, ``ddof=1``)."""
    projects = list(projects)
    if not projects:
        raise ValueError("describe_sample needs at least one project")
    rows = [project_measures(p) for p in projects]
    return DescriptiveStats(
        n=len(projects),
        measures={m: MeasureStats.of([r[m] for r in rows]) for m in MEASURES},
    )
