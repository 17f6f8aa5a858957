"""Random edge weights on the complete graph and the induced shortest path metric."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidParameterError
from .seeding import stream


class Distribution(str, enum.Enum):
    EXPONENTIAL = "exp1"
    UNIFORM = "uniform01"


def n_edges(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(n: int, u: int, v: int) -> int:
    """Position of edge {u, v} in the condensed (row-major upper triangle) layout."""
    if u == v:
        raise InvalidParameterError("no self loops")
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    weights: np.ndarray  # condensed, ordered (0,1), (0,2), ..., (n-2,n-1)
    distribution: Distribution = Distribution.EXPONENTIAL
    seed: int | None = None

    def weight(self, u: int, v: int) -> float:
        return float(self.weights[edge_index(self.n, u, v)])

    def matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix with a zero diagonal."""
        w = np.zeros((self.n, self.n))
        iu, ju = np.triu_indices(self.n, 1)
        w[iu, ju] = self.weights
        w[ju, iu] = self.weights
        return w

    @classmethod
    def from_edges(cls, n: int, edges: dict) -> "WeightedGraph":
        """Build from ``{(u, v): w}``; every pair must be present."""
        w = np.empty(n_edges(n))
        seen = np.zeros(n_edges(n), dtype=bool)
        for (u, v), x in edges.items():
            i = edge_index(n, u, v)
            w[i] = x
            seen[i] = True
        if not seen.all():
            raise InvalidParameterError("complete graph needs a weight for every pair")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidParameterError("weights must be finite and non-negative")
        w.setflags(write=False)
        return cls(n, w)


def generate_weights(
    n: int, dist: Distribution | str = Distribution.EXPONENTIAL, seed: int = 0
) -> WeightedGraph:
    """i.i.d. edge weights drawn from the stream seeded by ``seed``.

    Exponential weights use the inverse transform ``-log(1 - u)`` on the
    stream's uniforms, so the first weight is a function of the first uniform.
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got {n}")
    dist = Distribution(dist)
    u = stream(seed).random(n_edges(n))
    if dist is Distribution.EXPONENTIAL:
        w = -np.log1p(-u)
    else:
        w = u
    w.setflags(write=False)
    return WeightedGraph(n, w, dist, seed)


@dataclass(frozen=True)
class RandomMetric:
    dist: np.ndarray
    source: WeightedGraph | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_matrix(cls, d) -> "RandomMetric":
        """Wrap an explicit symmetric distance matrix (used for hand-built fixtures)."""
        d = np.array(d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidParameterError("distance matrix must be square")
        if not np.allclose(d, d.T) or np.any(np.diag(d) != 0):
            raise InvalidParameterError("distance matrix must be symmetric with zero diagonal")
        d.setflags(write=False)
        return cls(d)


def _initial_cutoff(n: int) -> float:
    # Shortest-path edges are shorter than the diameter, which concentrates
    # around 3 ln n / n; a slightly larger cutoff almost never needs a retry.
    return 4.0 * math.log(max(n, 3)) / n


def _pruned_dijkstra(g: WeightedGraph, indices=None, min_only=False) -> np.ndarray:
    """Dijkstra restricted to edges of weight <= L, with an exactness check.

    A path using an edge heavier than L is longer than L, so if every pruned
    distance is at most L the pruned distances are the true ones. Otherwise
    L is doubled; once every edge is kept the result is exact by definition.
    """
    n = g.n
    iu, ju = np.triu_indices(n, 1)
    w = g.weights
    cutoff = _initial_cutoff(n)
    while True:
        keep = w <= cutoff
        full = bool(keep.all())
        a, b, x = iu[keep], ju[keep], w[keep]
        # zero weights would vanish from the sparse structure; they are
        # measure-zero under both distributions but keep them representable
        x = np.where(x == 0.0, np.finfo(float).tiny, x)
        graph = csr_matrix((np.r_[x, x], (np.r_[a, b], np.r_[b, a])), shape=(n, n))
        d = dijkstra(graph, directed=True, indices=indices, min_only=min_only)
        if full or (np.all(np.isfinite(d)) and d.max() <= cutoff):
            return d
        cutoff *= 2.0


def all_pairs_shortest_paths(g: WeightedGraph) -> RandomMetric:
    d = _pruned_dijkstra(g)
    d = np.minimum(d, d.T)  # enforce exact symmetry against roundoff
    np.fill_diagonal(d, 0.0)
    d.setflags(write=False)
    return RandomMetric(d, g)


def distances_from(g: WeightedGraph, sources: int | Iterable[int]) -> np.ndarray:
    """Distances from one vertex, or from the nearest of several vertices.

    Cheaper than the full metric when only a row (or a set distance
    ``d(v, U)``) is needed.
    """
    if np.isscalar(sources):
        src = int(sources)
        _check_vertex(g.n, src)
        return _pruned_dijkstra(g, indices=src)
    src = np.asarray(list(sources), dtype=int)
    if src.size == 0:
        raise InvalidParameterError("need at least one source")
    for s in src:
        _check_vertex(g.n, int(s))
    return _pruned_dijkstra(g, indices=src, min_only=True)


def tour_length(d: np.ndarray, order) -> float:
    """Length of the closed tour visiting ``order`` under distance matrix d.

    Summed with correct rounding, so the same cycle gives the same float no
    matter where it starts or which way it runs.
    """
    order = np.asarray(order)
    if len(order) < 2:
        return 0.0
    return math.fsum(d[order, np.roll(order, -1)].tolist())


def random_metric(n: int, seed: int, dist: Distribution | str = Distribution.EXPONENTIAL) -> RandomMetric:
    return all_pairs_shortest_paths(generate_weights(n, dist, seed))


def _check_vertex(n: int, v: int) -> None:
    if not 0 <= v < n:
        raise InvalidParameterError(f"vertex {v} out of range for n={n}")


@dataclass(frozen=True)
class BallProfile:
    center: int
    sorted_dists: np.ndarray

    def tau(self, k: int) -> float:
        """Smallest radius whose ball holds at least k vertices (1-based k)."""
        if not 1 <= k <= len(self.sorted_dists):
            raise InvalidParameterError(f"k={k} out of range")
        return float(self.sorted_dists[k - 1])

    def ball_size(self, delta: float) -> int:
        return int(np.searchsorted(self.sorted_dists, delta, side="right"))


def ball_profile(m: RandomMetric | np.ndarray, v: int = 0) -> BallProfile:
    """Sorted distances from ``v``. Accepts a metric or a single distance row."""
    if isinstance(m, RandomMetric):
        _check_vertex(m.n, v)
        row = m.dist[v]
    else:
        row = np.asarray(m, dtype=float)
        _check_vertex(len(row), v)
    return BallProfile(v, np.sort(row))


def ball(m: RandomMetric, v: int, delta: float) -> np.ndarray:
    _check_vertex(m.n, v)
    return np.flatnonzero(m.dist[v] <= delta)


def diameter(m: RandomMetric) -> float:
    return float(m.dist.max())


def dump_instance(g: WeightedGraph, fh: TextIO) -> None:
    fh.write(f"{g.n} {g.seed if g.seed is not None else -1} {g.distribution.value}\n")
    iu, ju = np.triu_indices(g.n, 1)
    for u, v, w in zip(iu.tolist(), ju.tolist(), g.weights.tolist()):
        fh.write(f"{u} {v} {w:.17g}\n")


def load_instance(fh: TextIO) -> WeightedGraph:
    n_s, seed_s, dist_s = fh.readline().split()
    n, seed = int(n_s), int(seed_s)
    edges = {}
    for line in fh:
        if line.strip():
            u, v, w = line.split()
            edges[int(u), int(v)] = float(w)
    g = WeightedGraph.from_edges(n, edges)
    return WeightedGraph(n, g.weights, Distribution(dist_s), None if seed < 0 else seed)
