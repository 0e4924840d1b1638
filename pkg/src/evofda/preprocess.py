"""Turn irregular release histories into aligned daily complexity curves.

Every project is aligned on its first release (day 0), cut to a two-year
window and expanded to one value per day with a right-continuous step
function: a release's value holds until the next release and the last
release's value holds to the end of the window.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .ingest import ReleaseRecord

__all__ = [
    "HORIZON_DAYS",
    "N_DAYS",
    "AlignedSeries",
    "DailyCurve",
    "OutcomeScalars",
    "align_and_truncate",
    "to_daily_step",
    "standardize",
    "outcome_scalars",
    "curves_to_csv",
    "curves_from_csv",
]

HORIZON_DAYS = 730
N_DAYS = HORIZON_DAYS + 1


@dataclass(frozen=True)
class AlignedSeries:
    """Releases of one project with day offsets from the first release."""

    project_id: str
    releases: tuple[ReleaseRecord, ...]
    days: tuple[int, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.cplxlcoh for r in self.releases], dtype=float)

    def __len__(self):
        return len(self.releases)


@dataclass(frozen=True, eq=False)
class DailyCurve:
    project_id: str
    values: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (N_DAYS,):
            raise ValueError(f"daily curve needs {N_DAYS} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, DailyCurve):
            return NotImplemented
        return (
            self.project_id == other.project_id
            and self.standardized == other.standardized
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class OutcomeScalars:
    percent_change: float
    active_life: int


def align_and_truncate(series, horizon: int = HORIZON_DAYS) -> AlignedSeries:
    """Offset release dates from the first release and drop those past ``horizon``.

    Accepts a :class:`ProjectSeries` or an already aligned series, in which
    case the result is the same series (the operation is idempotent).
    """
    releases = series.releases
    if not releases:
        raise ValueError("series has no releases")
    start = releases[0].release_date
    kept = [r for r in releases if (r.release_date - start).days <= horizon]
    days = tuple((r.release_date - start).days for r in kept)
    return AlignedSeries(series.project_id, tuple(kept), days)


def to_daily_step(aligned: AlignedSeries) -> DailyCurve:
    if not aligned.days or aligned.days[0] != 0:
        raise ValueError("aligned series must start at day 0")
    if aligned.days[-1] > HORIZON_DAYS:
        raise ValueError("aligned series extends past the window; truncate first")
    grid = np.arange(N_DAYS)
    # index of latest release with day <= d
    idx = np.searchsorted(np.asarray(aligned.days), grid, side="right") - 1
    return DailyCurve(aligned.project_id, aligned.values[idx], standardized=False)


def standardize(curve: DailyCurve, mode: str = "center", allow_repeat: bool = False) -> DailyCurve:
    """Remove the project's mean level.

    ``mode="center"`` subtracts the mean. ``mode="zscore"`` also divides by
    the population standard deviation (a constant curve becomes all zeros).
    Standardizing an already standardized curve raises unless
    ``allow_repeat`` is set, in which case the curve is returned unchanged.
    """
    if curve.standardized:
        if allow_repeat:
            return curve
        raise ValueError(f"curve {curve.project_id!r} is already standardized")
    v = curve.values - curve.values.mean()
    # second pass removes the rounding residue of the first
    v = v - v.mean()
    if mode == "zscore":
        sd = v.std()
        if sd > 0:
            v = v / sd
            v = v - v.mean()
    elif mode != "center":
        raise ValueError(f"unknown standardization mode {mode!r}")
    return DailyCurve(curve.project_id, v, standardized=True)


def outcome_scalars(aligned: AlignedSeries) -> OutcomeScalars:
    """Relative change first-to-last release and days of active life, in-window."""
    first = aligned.releases[0].cplxlcoh
    last = aligned.releases[-1].cplxlcoh
    if first == 0:
        raise ValueError(
            f"percent change undefined for {aligned.project_id!r}: first CplXLCoh is 0"
        )
    return OutcomeScalars((last - first) / first, int(aligned.days[-1]))


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["project_id", "day", "value", "standardized"])
    for c in curves:
        flag = "true" if c.standardized else "false"
        for day, value in enumerate(c.values):
            w.writerow([c.project_id, day, repr(float(value)), flag])
    return buf.getvalue()


def curves_from_csv(content: str) -> list[DailyCurve]:
    lines = [ln for ln in content.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames != ["project_id", "day", "value", "standardized"]:
        raise ValueError(f"unexpected curve header {reader.fieldnames}")
    acc: dict[str, tuple[list, bool]] = {}
    for row in reader:
        vals, flag = acc.setdefault(row["project_id"], ([], row["standardized"] == "true"))
        if int(row["day"]) != len(vals):
            raise ValueError(f"days out of order for {row['project_id']!r}")
        vals.append(float(row["value"]))
    return [DailyCurve(pid, np.array(v), flag) for pid, (v, flag) in acc.items()]
