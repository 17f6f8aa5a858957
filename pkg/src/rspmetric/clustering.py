"""Partition of a shortest path metric into clusters of diameter at most 6*delta.

Dense centers (ball of radius delta holding at least s_delta vertices) are
clustered around a greedy maximal family of pairwise disjoint balls; vertices
outside every dense ball are sparse centers and become singletons.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .analytics import s_delta
from .errors import InvalidParameterError
from .metric import RandomMetric, random_metric
from .seeding import derive_seed


@dataclass(frozen=True)
class ClusteringResult:
    delta: float
    s_delta: float
    clusters: list[np.ndarray]
    dense_centers: np.ndarray
    sparse_centers: np.ndarray
    independent_set: list[int]

    @property
    def t(self) -> int:
        return len(self.independent_set)

    def labels(self, n: int) -> np.ndarray:
        lab = np.full(n, -1, dtype=int)
        for i, c in enumerate(self.clusters):
            lab[c] = i
        return lab

    def to_json(self) -> str:
        return json.dumps({
            "delta": self.delta,
            "s_delta": self.s_delta,
            "t": self.t,
            "n_clusters": len(self.clusters),
            "n_dense": int(len(self.dense_centers)),
            "n_sparse": int(len(self.sparse_centers)),
            "independent_set": [int(v) for v in self.independent_set],
            "clusters": [sorted(int(v) for v in c) for c in self.clusters],
        })


def _balls(m: RandomMetric, delta: float) -> np.ndarray:
    return m.dist <= delta


def classify_centers(m: RandomMetric, delta: float) -> tuple[np.ndarray, np.ndarray]:
    if delta < 0:
        raise InvalidParameterError("delta must be >= 0")
    inside = _balls(m, delta)
    dense = inside.sum(axis=1) >= s_delta(m.n, delta)
    covered = inside[dense].any(axis=0)
    return np.flatnonzero(dense), np.flatnonzero(~dense & ~covered)


def build_clusters(m: RandomMetric, delta: float) -> ClusteringResult:
    if delta < 0:
        raise InvalidParameterError("delta must be >= 0")
    n = m.n
    inside = _balls(m, delta)
    threshold = s_delta(n, delta)
    dense_mask = inside.sum(axis=1) >= threshold
    dense = np.flatnonzero(dense_mask)

    # greedy maximal independent set in ascending index order: a ball
    # conflicts with the chosen ones iff it meets their union
    chosen: list[int] = []
    taken = np.zeros(n, dtype=bool)
    for v in dense:
        if not (inside[v] & taken).any():
            chosen.append(int(v))
            taken |= inside[v]

    # owner[x] = index of the initial ball containing x (balls are disjoint)
    owner = np.full(n, -1, dtype=int)
    for i, v in enumerate(chosen):
        owner[inside[v]] = i
    label = owner.copy()

    chosen_set = set(chosen)
    for v in dense:
        if int(v) in chosen_set:
            continue
        hit = owner[inside[v]]
        target = hit[hit >= 0].min()  # non-empty by maximality
        members = inside[v] & (label < 0)
        label[members] = target

    sparse = np.flatnonzero(label < 0)
    clusters = [np.flatnonzero(label == i) for i in range(len(chosen))]
    clusters.extend(np.array([v]) for v in sparse)
    return ClusteringResult(float(delta), threshold, clusters, dense, sparse, chosen)


def cluster_diameter(m: RandomMetric, cluster: np.ndarray) -> float:
    if len(cluster) < 2:
        return 0.0
    return float(m.dist[np.ix_(cluster, cluster)].max())


def check_clustering(m: RandomMetric, res: ClusteringResult, tol: float = 0.0) -> list[str]:
    """Hard invariants of a clustering; returns the list of violations."""
    problems = []
    n = m.n
    counts = np.zeros(n, dtype=int)
    for c in res.clusters:
        counts[c] += 1
    if not np.all(counts == 1):
        problems.append("clusters do not partition V")
    for i, c in enumerate(res.clusters):
        if cluster_diameter(m, c) > 6 * res.delta + tol:
            problems.append(f"cluster {i} exceeds diameter 6*delta")
    inside = _balls(m, res.delta)
    seen = np.zeros(n, dtype=bool)
    for v in res.independent_set:
        if (inside[v] & seen).any():
            problems.append("independent-set balls intersect")
        seen |= inside[v]
    if res.s_delta > 1 and res.t > n / res.s_delta:
        problems.append("too many independent centers")
    singletons = {int(c[0]) for c in res.clusters if len(c) == 1}
    if not set(res.sparse_centers.tolist()) <= singletons:
        problems.append("sparse center not a singleton")
    return problems


def cluster_count_envelope(n: int, delta: float) -> float:
    return 1.0 + n * np.exp(-delta * n / 5.0)


def cluster_count_curve(n: int, deltas, trials: int, seed: int) -> list[dict]:
    """Mean and max cluster counts per delta over independent instances."""
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    deltas = [float(d) for d in deltas]
    counts = np.zeros((trials, len(deltas)), dtype=int)
    for t in range(trials):
        m = random_metric(n, derive_seed(seed, "cluster-curve", n, t))
        for j, d in enumerate(deltas):
            counts[t, j] = len(build_clusters(m, d).clusters)
    return [
        {"delta": d, "mean_count": float(counts[:, j].mean()),
         "max_count": int(counts[:, j].max()), "envelope": cluster_count_envelope(n, d)}
        for j, d in enumerate(deltas)
    ]
