"""
Do the clusters differ in outcome?
==================================

After clustering, cluster membership is the grouping factor for a one-way
ANOVA per variable, a joint MANOVA and pairwise least-significant-difference
tests.
"""

import numpy as np

from evofda import synth
from evofda.inference import cluster_profile, format_f, manova, one_way_anova, pairwise_comparisons
from evofda.pipeline import PipelineConfig, run_pipeline

projects, labels = synth.generate_corpus(synth.CorpusSpec(seed=5))
truth = {p.project_id: lab for p, lab in zip(projects, labels)}
res = run_pipeline(PipelineConfig(k_min=4, k_max=4), projects, truth)
sol = res.solutions[0]
print("ARI against the generator:", round(res.ari[4], 3))

change = np.array([p.percent_change for p in res.projects])
life = np.array([p.active_life for p in res.projects])

a = one_way_anova(change, sol.labels)
print("percent change:", format_f(a), f"eta^2={a.eta_squared:.2f}")
print("active life:   ", format_f(one_way_anova(life, sol.labels)))

m = manova(np.column_stack([change, life]), sol.labels, names=["percent_change", "active_life"])
print(f"MANOVA: Wilks lambda {m.wilks_lambda:.3f}, F({m.df1:g}, {m.df2:g}) = {m.f_approx:.2f}, p = {m.p_value:.3g}")

table = pairwise_comparisons(change, sol.labels, correction="bonferroni")
for r in table.rows:
    flag = "*" if r.significant else " "
    print(f"  {r.group_a} vs {r.group_b}: diff {r.difference:+7.3f}  p={r.p_value:.3f} {flag}")

prof = cluster_profile([p.series for p in res.projects], sol.labels)
print("cluster sizes:", prof["sizes"])
for measure, by_cluster in prof["means"].items():
    print(f"  {measure:<26}", "  ".join(f"{v:10.1f}" for v in by_cluster.values()))

# a textbook case to check against by hand: F = 13.5 on (1, 4) df
print(format_f(one_way_anova([1, 2, 3, 4, 5, 6], [1, 1, 1, 2, 2, 2])))
