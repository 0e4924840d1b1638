"""
From a release history to a daily complexity curve
===================================================

One project, seven releases. Dates become day offsets from the first
release, the history is cut at two years and turned into a step function
sampled once a day.
"""

import numpy as np

from evofda.ingest import ScreeningCriteria, describe_sample, load_releases, screen_projects
from evofda.preprocess import align_and_truncate, outcome_scalars, standardize, to_daily_step

csv_text = """project_id,release_date,loc,cplxlcoh
3064,2003-01-17,4901,45.71
3064,2003-03-02,5449,79.31
3064,2003-07-16,6775,113.83
3064,2003-08-16,10915,135.98
3064,2003-10-25,13516,149.15
3064,2004-01-04,13991,148.65
3064,2004-02-07,14892,162.30
"""
projects = load_releases(csv_text)

# projects whose code did not grow by at least 5% are dropped
kept, rejected = screen_projects(projects, ScreeningCriteria(min_loc_growth_fraction=0.05))
print("kept:", [p.project_id for p in kept], "rejected:", [(r.project.project_id, r.reason) for r in rejected])

aligned = align_and_truncate(kept[0])
print("day offsets:", aligned.days)

out = outcome_scalars(aligned)
print(f"percent change {out.percent_change:.4f}, active life {out.active_life} days")

# right-continuous: the value of a release holds until the next one
curve = to_daily_step(aligned)
print("days 43, 44, 45:", curve.values[43:46])
print("after the last release:", curve.values[386], curve.values[730])

# clustering works on shapes, so each curve loses its own mean level
centred = standardize(curve)
print(f"standardized mean {np.mean(centred.values):.2e}")

print(describe_sample(kept).format_table())
