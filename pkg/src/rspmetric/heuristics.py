"""Greedy matching, nearest neighbor, insertion heuristics and 2-opt.

All tie-breaks are deterministic: lexicographic on vertex pairs, lowest
vertex index on selections, earliest tour position on insertions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError
from .metric import RandomMetric, tour_length


class InsertionRule(str, enum.Enum):
    NEAREST = "nearest"
    FARTHEST = "farthest"
    CHEAPEST = "cheapest"
    RANDOM = "random"
    FIXED = "fixed"


class Pivot(str, enum.Enum):
    FIRST = "first"
    BEST = "best"


@dataclass(frozen=True)
class MatchingResult:
    edges: list[tuple[int, int]]
    total_length: float
    pick_order: list[tuple[int, int]]


@dataclass(frozen=True)
class TourResult:
    order: np.ndarray
    total_length: float
    algorithm: str
    rule: str | None = None
    pivot: str | None = None
    iterations: int = 0
    min_improvement: float | None = None
    locally_optimal: bool | None = None
    extra: dict = field(default_factory=dict)

    def record(self, n: int, seed=None) -> dict:
        return {
            "algorithm": self.algorithm, "rule": self.rule, "pivot": self.pivot,
            "n": n, "seed": seed, "length": self.total_length, "T": self.iterations,
            "delta_min": self.min_improvement, "locally_optimal": self.locally_optimal,
        }


def greedy_matching(m: RandomMetric) -> MatchingResult:
    n = m.n
    if n % 2:
        raise InvalidParameterError(f"perfect matching needs even n, got {n}")
    iu, ju = np.triu_indices(n, 1)
    vals = m.dist[iu, ju]
    # triu_indices is already lexicographic in (u, v), so a stable sort on
    # length breaks ties the same way a lexsort on (d, u, v) would
    order = np.argsort(vals, kind="stable")
    matched = np.zeros(n, dtype=bool)
    picks = []
    need = n // 2
    for e in order.tolist():
        u, v = int(iu[e]), int(ju[e])
        if matched[u] or matched[v]:
            continue
        matched[u] = matched[v] = True
        picks.append((u, v))
        if len(picks) == need:
            break
    return MatchingResult(sorted(picks), math.fsum(float(m.dist[u, v]) for u, v in picks), picks)


def nearest_neighbor_tour(m: RandomMetric, start: int = 0) -> TourResult:
    n = m.n
    if not 0 <= start < n:
        raise InvalidParameterError(f"start vertex {start} out of range")
    d = m.dist
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=int)
    cur = start
    visited[cur] = True
    order[0] = cur
    for step in range(1, n):
        row = np.where(visited, np.inf, d[cur])
        cur = int(row.argmin())
        visited[cur] = True
        order[step] = cur
    return TourResult(order, tour_length(d, order), "nn")


def _best_position(d: np.ndarray, tour: np.ndarray, v: int) -> tuple[int, float]:
    nxt = np.roll(tour, -1)
    costs = d[tour, v] + d[v, nxt] - d[tour, nxt]
    p = int(costs.argmin())
    return p, float(costs[p])


def insertion_tour(m: RandomMetric, rule: InsertionRule | str = InsertionRule.NEAREST,
                   rng: np.random.Generator | None = None) -> TourResult:
    """Grow a tour from three vertices, inserting each chosen vertex where it
    adds the least length."""
    rule = InsertionRule(rule)
    n = m.n
    d = m.dist
    if rule is InsertionRule.RANDOM and rng is None:
        raise InvalidParameterError("random insertion needs a generator")
    if n <= 3:
        order = np.arange(n)
        if rule is InsertionRule.RANDOM and n == 3:
            order = rng.permutation(3)
        return TourResult(order, tour_length(d, order), "insertion", rule.value)

    if rule is InsertionRule.RANDOM:
        start = [int(v) for v in rng.choice(n, 3, replace=False)]
    else:
        start = [0, 1, 2]
    tour = list(start)
    remaining = np.ones(n, dtype=bool)
    remaining[start] = False

    if rule is InsertionRule.RANDOM:
        queue = iter(rng.permutation(np.flatnonzero(remaining)).tolist())
    elif rule is InsertionRule.FIXED:
        queue = iter(np.flatnonzero(remaining).tolist())
    else:
        queue = None

    if rule in (InsertionRule.NEAREST, InsertionRule.FARTHEST):
        to_tour = d[start].min(axis=0)
    if rule is InsertionRule.CHEAPEST:
        cheap = _CheapestState(d, np.array(tour), remaining)

    for _ in range(n - 3):
        if queue is not None:
            v = next(queue)
        elif rule is InsertionRule.NEAREST:
            v = int(np.where(remaining, to_tour, np.inf).argmin())
        elif rule is InsertionRule.FARTHEST:
            v = int(np.where(remaining, to_tour, -np.inf).argmax())
        else:
            v = cheap.select()
        arr = np.array(tour)
        p, _ = _best_position(d, arr, v)
        a, b = tour[p], tour[(p + 1) % len(tour)]
        tour.insert(p + 1, v)
        remaining[v] = False
        if rule in (InsertionRule.NEAREST, InsertionRule.FARTHEST):
            np.minimum(to_tour, d[v], out=to_tour)
        elif rule is InsertionRule.CHEAPEST:
            cheap.update(np.array(tour), a, v, b)
    order = np.array(tour)
    return TourResult(order, tour_length(d, order), "insertion", rule.value)


class _CheapestState:
    """Per-vertex cheapest insertion cost, maintained incrementally.

    Inserting v between a and b removes edge (a, b) and adds (a, v), (v, b).
    Only vertices whose best edge was (a, b) need a full rescan.
    """

    def __init__(self, d, tour, remaining):
        self.d = d
        self.remaining = remaining
        n = len(d)
        self.cost = np.full(n, np.inf)
        self.edge_a = np.full(n, -1)
        self.edge_b = np.full(n, -1)
        self._rescan(np.flatnonzero(remaining), tour)

    def _rescan(self, verts, tour):
        if len(verts) == 0:
            return
        d = self.d
        nxt = np.roll(tour, -1)
        c = d[np.ix_(verts, tour)] + d[np.ix_(verts, nxt)] - d[tour, nxt][None, :]
        p = c.argmin(axis=1)
        self.cost[verts] = c[np.arange(len(verts)), p]
        self.edge_a[verts] = tour[p]
        self.edge_b[verts] = nxt[p]

    def select(self) -> int:
        return int(np.where(self.remaining, self.cost, np.inf).argmin())

    def update(self, tour, a, v, b):
        d = self.d
        self.cost[v] = np.inf
        rem = np.flatnonzero(self.remaining)
        stale = rem[(self.edge_a[rem] == a) & (self.edge_b[rem] == b)]
        fresh = np.setdiff1d(rem, stale, assume_unique=True)
        for x, y in ((a, v), (v, b)):
            c = d[fresh, x] + d[fresh, y] - d[x, y]
            better = c < self.cost[fresh]
            idx = fresh[better]
            self.cost[idx] = c[better]
            self.edge_a[idx] = x
            self.edge_b[idx] = y
        self._rescan(stale, tour)


# Floating-point sums of four distances carry a relative error of a few ulps.
# Shortest path metrics have many exchanges whose exact gain is 0 (both edge
# pairs lie on the same shortest paths), and rounding makes some of them look
# like tiny improvements that 2-opt would cycle through forever. An exchange
# only counts as improving when its gain exceeds this error bound.
_ROUNDOFF = 4 * np.finfo(float).eps


def _exchange_gains(d: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Matrix of 2-exchange improvements; entry (i, j) removes the tour edges
    leaving positions i and j. Pairs that are invalid or within roundoff of
    zero hold -inf."""
    n = len(order)
    nxt = np.roll(order, -1)
    edge = d[order, nxt]
    removed = edge[:, None] + edge[None, :]
    added = d[np.ix_(order, order)] + d[np.ix_(nxt, nxt)]
    gain = removed - added  # antisymmetric: undoing an exchange gives -gain
    valid = np.triu(np.ones((n, n), dtype=bool), 2)
    valid[0, n - 1] = False
    valid &= gain > _ROUNDOFF * (removed + added)
    return np.where(valid, gain, -np.inf)


def improving_exchange_exists(m: RandomMetric, order, eps: float = 1e-12) -> bool:
    """Exhaustive scan for any 2-exchange improving by more than ``eps``."""
    order = np.asarray(order)
    n = len(order)
    if n < 4:
        return False
    # computed independently of the search: delta for every pair of
    # non-adjacent tour edges (v1, v2), (v3, v4)
    d = m.dist
    i, j = np.triu_indices(n, 2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    v1, v2 = order[i], order[(i + 1) % n]
    v3, v4 = order[j], order[(j + 1) % n]
    delta = d[v1, v2] + d[v3, v4] - d[v1, v3] - d[v2, v4]
    return bool((delta > eps).any())


def random_tour(n: int, rng: np.random.Generator) -> TourResult:
    order = rng.permutation(n)
    return TourResult(order, float("nan"), "random")


def two_opt(m: RandomMetric, initial: TourResult | Sequence[int],
            pivot: Pivot | str = Pivot.FIRST, max_iters: int = 10**7,
            on_exchange: Callable[[np.ndarray, float], None] | None = None) -> TourResult:
    """Apply improving 2-exchanges until none is left or ``max_iters`` is hit.

    FIRST takes the lexicographically first improving position pair of the
    current tour (a scan restarted after every exchange); BEST takes the
    largest improvement.
    """
    pivot = Pivot(pivot)
    if max_iters < 0:
        raise InvalidParameterError("max_iters must be >= 0")
    d = m.dist
    order = np.array(initial.order if isinstance(initial, TourResult) else initial, dtype=int)
    n = len(order)
    if sorted(order.tolist()) != list(range(m.n)):
        raise InvalidParameterError("initial tour is not a permutation of the vertices")
    T = 0
    dmin = None
    converged = n < 4
    while not converged and T < max_iters:
        gains = _exchange_gains(d, order)
        if pivot is Pivot.FIRST:
            flat = np.flatnonzero(gains > -np.inf)
            if flat.size == 0:
                converged = True
                break
            k = int(flat[0])
        else:
            k = int(gains.argmax())
            if gains.flat[k] == -np.inf:
                converged = True
                break
        i, j = divmod(k, n)
        delta = float(gains[i, j])
        order[i + 1:j + 1] = order[i + 1:j + 1][::-1].copy()
        T += 1
        dmin = delta if dmin is None else min(dmin, delta)
        if on_exchange is not None:
            on_exchange(order.copy(), delta)
    if not converged and n >= 4:
        # cap reached: check whether the last exchange happened to finish the job
        converged = not (_exchange_gains(d, order) > -np.inf).any()
    certified = converged and not improving_exchange_exists(m, order)
    return TourResult(order, tour_length(d, order), "2opt", pivot=pivot.value,
                      iterations=T, min_improvement=dmin, locally_optimal=certified)
