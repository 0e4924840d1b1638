"""K-medoids clustering of spline representations.

The iteration alternates two steps until the assignment stops changing:

1. within each cluster pick as medoid the member with the smallest total
   distance to the other members;
2. reassign every observation to its nearest medoid.

Restart 0 starts from a greedy BUILD initialization; later restarts rerun
BUILD from other (seeded) first medoids and then fall back to seeded random
medoid sets. The best objective wins. All ties break toward
the lowest index so results are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.special import comb

__all__ = [
    "FeatureMatrix",
    "ClusterSolution",
    "distance_matrix",
    "kmedoids",
    "within_between",
    "sweep_k",
    "adjusted_rand_index",
    "membership_table_csv",
]

FEATURE_KINDS = ("coefficients", "fitted_values")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    project_ids: tuple[str, ...]
    rows: np.ndarray
    feature_kind: str = "coefficients"

    def __post_init__(self):
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"feature_kind must be one of {FEATURE_KINDS}")
        rows = self.rows
        if not isinstance(rows, np.ndarray):
            lengths = {len(r) for r in rows}
            if len(lengths) > 1:
                raise ValueError("feature rows have different lengths")
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError("feature rows must form a 2-d array")
        if rows.shape[0] != len(self.project_ids):
            raise ValueError("one feature row per project id required")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "project_ids", tuple(self.project_ids))

    @classmethod
    def from_fits(cls, fits, feature_kind: str = "coefficients") -> "FeatureMatrix":
        fits = list(fits)
        attr = "coefficients" if feature_kind == "coefficients" else "fitted_values"
        return cls(
            tuple(f.project_id for f in fits),
            np.vstack([getattr(f, attr) for f in fits]),
            feature_kind,
        )


def distance_matrix(features) -> np.ndarray:
    """Euclidean distances between feature rows."""
    rows = features.rows if isinstance(features, FeatureMatrix) else features
    if not isinstance(rows, np.ndarray) and len({len(r) for r in rows}) > 1:
        raise ValueError("feature rows have different lengths")
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be 2-d")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    return squareform(pdist(X, metric="euclidean"))


@dataclass(frozen=True, eq=False)
class ClusterSolution:
    """One K-medoids partition.

    ``labels`` holds cluster numbers ``1..k`` per observation and
    ``medoids[j]`` is the row index of the medoid of cluster ``j + 1``.
    Clusters are numbered by their smallest member index.
    """

    k: int
    medoids: tuple[int, ...]
    labels: np.ndarray
    total_dissimilarity: float
    avg_within: float | None
    avg_between: float | None
    iterations: int
    seed: int
    restart: int = 0
    objective_trace: tuple[float, ...] = ()
    degenerate: bool = False
    project_ids: tuple[str, ...] | None = None

    @property
    def sizes(self) -> list[int]:
        counts = Counter(int(v) for v in self.labels)
        return [counts.get(j, 0) for j in range(1, self.k + 1)]

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster)

    def assignment(self) -> dict[str, int]:
        ids = self.project_ids or tuple(str(i) for i in range(len(self.labels)))
        return {pid: int(c) for pid, c in zip(ids, self.labels)}

    def to_dict(self) -> dict:
        ids = self.project_ids or tuple(str(i) for i in range(len(self.labels)))
        return {
            "k": self.k,
            "seed": self.seed,
            "restart": self.restart,
            "medoids": [ids[m] for m in self.medoids],
            "assignment": self.assignment(),
            "sizes": self.sizes,
            "objective": self.total_dissimilarity,
            "avg_within": self.avg_within,
            "avg_between": self.avg_between,
            "iterations": self.iterations,
            "degenerate": self.degenerate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _assign(dist: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    """Nearest medoid position per row; medoids always keep their own cluster."""
    lab = np.argmin(dist[:, medoids], axis=1)  # argmin returns the first minimum
    lab[medoids] = np.arange(medoids.size)
    return lab


def _objective(dist, medoids, lab) -> float:
    return float(dist[np.arange(lab.size), medoids[lab]].sum())


def _update_medoids(dist, medoids, lab) -> np.ndarray:
    new = medoids.copy()
    for j in range(medoids.size):
        members = np.flatnonzero(lab == j)
        cost = dist[np.ix_(members, members)].sum(axis=1)
        best = members[cost == cost.min()]
        # keep the current medoid on ties so the iteration cannot cycle
        new[j] = medoids[j] if medoids[j] in best else best[0]
    return new


def _alternate(dist, medoids, max_iter):
    medoids = np.asarray(medoids, dtype=int)
    lab = _assign(dist, medoids)
    trace = [_objective(dist, medoids, lab)]
    it = 0
    for it in range(1, max_iter + 1):
        medoids = _update_medoids(dist, medoids, lab)
        new_lab = _assign(dist, medoids)
        trace.append(_objective(dist, medoids, new_lab))
        if np.array_equal(new_lab, lab):
            break
        lab = new_lab
    return medoids, lab, it, trace


def _build(dist: np.ndarray, k: int, first: int | None = None) -> np.ndarray:
    """Greedy BUILD: best single medoid, then the largest objective decrease.

    ``first`` forces the initial medoid; the greedy steps are unchanged.
    """
    if first is None:
        first = int(np.argmin(dist.sum(axis=1)))
    chosen = [first]
    nearest = dist[:, first].copy()
    for _ in range(1, k):
        gain = np.maximum(nearest[:, None] - dist, 0).sum(axis=0)
        gain[chosen] = -np.inf
        nxt = int(np.argmax(gain))
        chosen.append(nxt)
        nearest = np.minimum(nearest, dist[:, nxt])
    return np.array(chosen)


def _starts(dist: np.ndarray, k: int, seed: int, n_restarts: int) -> list[np.ndarray]:
    """Distinct initial medoid sets.

    BUILD first, then BUILD forced to start from each other observation in a
    seeded order, then seeded random sets once those run out.
    """
    n = dist.shape[0]
    base = _build(dist, k)
    out, seen = [base], {tuple(sorted(base))}
    limit = min(n_restarts, int(comb(n, k, exact=True)))
    order = np.random.default_rng(seed).permutation(n)
    for i in order:
        if len(out) >= limit:
            return out
        if i == base[0]:
            continue
        st = _build(dist, k, int(i))
        key = tuple(sorted(st))
        if key not in seen:
            seen.add(key)
            out.append(st)
    r = 0
    while len(out) < limit:
        r += 1
        st = np.sort(np.random.default_rng([seed, r]).choice(n, size=k, replace=False))
        key = tuple(st)
        if key not in seen:
            seen.add(key)
            out.append(st)
    return out


def _canonical(medoids, lab):
    """Renumber clusters by smallest member index."""
    order = sorted(range(medoids.size), key=lambda j: int(np.flatnonzero(lab == j)[0]))
    remap = np.empty(medoids.size, dtype=int)
    remap[order] = np.arange(medoids.size)
    return tuple(int(medoids[j]) for j in order), remap[lab] + 1


def kmedoids(
    dist,
    k: int,
    seed: int = 0,
    n_restarts: int = 10,
    max_iter: int = 100,
    project_ids=None,
) -> ClusterSolution:
    """Best-of-restarts alternating K-medoids on a distance matrix.

    Parameters
    ----------
    dist : (n, n) array
        Symmetric dissimilarities with zero diagonal.
    k : int
        Number of clusters, ``1 <= k <= n``. With ``k = 1`` there is no
        medoid pair and ``avg_between`` is ``None``.
    seed : int
        Seeds the order and random fill of the restart starts.
    n_restarts : int
        Number of distinct starts (fewer if there are fewer medoid sets).
        The lowest objective over all restarts wins, earliest restart on ties.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")

    best = None
    for r, start in enumerate(_starts(dist, k, seed, n_restarts)):
        medoids, lab, iters, trace = _alternate(dist, start, max_iter)
        obj = trace[-1]
        if best is None or obj < best[0]:
            best = (obj, r, medoids, lab, iters, trace)

    obj, r, medoids, lab, iters, trace = best
    meds, labels = _canonical(medoids, lab)
    within, between = _within_between(dist, labels, meds)
    distinct_rows = len({tuple(row) for row in np.round(dist, 12)})
    return ClusterSolution(
        k=k,
        medoids=meds,
        labels=labels,
        total_dissimilarity=obj,
        avg_within=within,
        avg_between=between,
        iterations=iters,
        seed=seed,
        restart=r,
        objective_trace=tuple(trace),
        degenerate=bool(distinct_rows < k),
        project_ids=tuple(project_ids) if project_ids is not None else None,
    )


def _within_between(dist, labels, medoids):
    labels = np.asarray(labels)
    same = [dist[i, j] for i, j in combinations(range(labels.size), 2) if labels[i] == labels[j]]
    pairs = [dist[a, b] for a, b in combinations(medoids, 2)]
    within = float(np.mean(same)) if same else None
    between = float(np.mean(pairs)) if pairs else None
    return within, between


def within_between(solution: ClusterSolution, dist) -> tuple[float | None, float | None]:
    """Mean distance over same-cluster pairs and over medoid pairs.

    Either value is ``None`` when there is no pair to average (all clusters
    singletons, or a single cluster).
    """
    return _within_between(np.asarray(dist, dtype=float), solution.labels, solution.medoids)


def sweep_k(dist, k_range=range(2, 6), seed: int = 0, n_restarts: int = 10, project_ids=None):
    """One solution per ``k``, all seeded identically."""
    n = np.asarray(dist).shape[0]
    ks = list(k_range)
    if ks and max(ks) > n:
        raise ValueError(f"max k {max(ks)} exceeds number of observations {n}")
    return [kmedoids(dist, k, seed, n_restarts, project_ids=project_ids) for k in ks]


def membership_table_csv(solutions) -> str:
    """Cluster sizes per solution: one row per cluster number, one column per k."""
    solutions = list(solutions)
    kmax = max(s.k for s in solutions)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cluster", *(f"k{s.k}" for s in solutions)])
    for j in range(kmax):
        w.writerow([j + 1, *(s.sizes[j] if j < s.k else "" for s in solutions)])
    return buf.getvalue()


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected Rand index of two partitions (Hubert and Arabie)."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_ij = comb(table, 2).sum()
    sum_a = comb(table.sum(axis=1), 2).sum()
    sum_b = comb(table.sum(axis=0), 2).sum()
    total = comb(a.size, 2)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))
