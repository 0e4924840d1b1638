"""
The whole analysis in one call, plus a robustness sweep
=======================================================

``cmd_run`` writes a complete output bundle (screening log, curves, fits,
mean bands, clusterings, inference and a text report) atomically into one
directory. ``cmd_sensitivity`` repeats the clustering under other knot
counts, smoothing levels and feature choices. The same steps are available
as ``evofda run`` and ``evofda sensitivity``.
"""

import sys
from pathlib import Path

from evofda import synth
from evofda.pipeline import PipelineConfig, cmd_run, cmd_sensitivity, format_sensitivity

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")

projects, labels = synth.generate_corpus(synth.CorpusSpec(seed=6))
truth = {p.project_id: lab for p, lab in zip(projects, labels)}

cfg = PipelineConfig(output_dir=str(out / "run"), seed=6, jobs=4)
res, files = cmd_run(cfg, projects, truth)
print(f"{len(files)} files in {out / 'run'}")
print((out / "run" / "report.txt").read_text())

rep = cmd_sensitivity(PipelineConfig(output_dir=str(out / "sensitivity")), None, projects, truth)
print(format_sensitivity(rep))
