"""Exact baselines for small instances: Held-Karp, matching DP, k-median
enumeration, the lightest-weights prefix sum and a cubic APSP."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InvalidParameterError
from .metric import RandomMetric, WeightedGraph, n_edges, tour_length


class Method(str, enum.Enum):
    HELD_KARP = "HeldKarp"
    MATCHING_DP = "MatchingDP"
    EXHAUSTIVE_PERM = "ExhaustivePerm"
    EXHAUSTIVE_SUBSET = "ExhaustiveSubset"
    FULL_RELAXATION_APSP = "FullRelaxationAPSP"
    SORTED_WEIGHT_PREFIX = "SortedWeightPrefix"


@dataclass(frozen=True)
class OracleResult:
    value: float
    witness: tuple
    method: Method


MAX_TSP_N = 18
MAX_MATCHING_N = 20
MAX_KMEDIAN_SUBSETS = 10**6


def _popcounts(bits: int) -> np.ndarray:
    pc = np.zeros(1 << bits, dtype=np.int8)
    for b in range(bits):
        pc[1 << b:2 << b] = pc[:1 << b] + 1
    return pc


def held_karp_tsp(m: RandomMetric) -> OracleResult:
    n = m.n
    if not 3 <= n <= MAX_TSP_N:
        raise CapabilityError(f"Held-Karp supports 3 <= n <= {MAX_TSP_N}, got {n}")
    d = m.dist
    N = n - 1  # vertex 0 is the fixed start; bit j stands for vertex j + 1
    sub = d[1:, 1:]
    full = (1 << N) - 1
    cost = np.full((1 << N, N), np.inf)
    parent = np.full((1 << N, N), -1, dtype=np.int8)
    for j in range(N):
        cost[1 << j, j] = d[0, j + 1]
    pc = _popcounts(N)
    masks_by_size = [np.flatnonzero(pc == s) for s in range(N + 1)]
    for size in range(2, N + 1):
        masks = masks_by_size[size]
        for j in range(N):
            sel = masks[(masks >> j) & 1 == 1]
            prev = sel ^ (1 << j)
            cand = cost[prev] + sub[:, j]  # inf where i is not in prev
            best = cand.argmin(axis=1)
            cost[sel, j] = cand[np.arange(len(sel)), best]
            parent[sel, j] = best
    closing = cost[full] + d[1:, 0]
    last = int(closing.argmin())
    order = []
    mask, j = full, last
    while j >= 0:
        order.append(j + 1)
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    order.append(0)
    order.reverse()
    # report the witness length with the same summation the heuristics use
    return OracleResult(tour_length(d, order), tuple(order), Method.HELD_KARP)


def exhaustive_tsp(m: RandomMetric) -> OracleResult:
    """Brute force over (n-1)! orderings with vertex 0 fixed; for cross-checks."""
    d = m.dist
    best, arg = math.inf, None
    for perm in itertools.permutations(range(1, m.n)):
        if perm[0] > perm[-1]:
            continue  # skip the reversed copy of each cycle
        order = (0,) + perm
        length = sum(d[order[i], order[(i + 1) % m.n]] for i in range(m.n))
        if length < best:
            best, arg = length, order
    return OracleResult(tour_length(d, arg), arg, Method.EXHAUSTIVE_PERM)


def exact_min_matching(m: RandomMetric) -> OracleResult:
    n = m.n
    if n % 2 or n > MAX_MATCHING_N or n < 2:
        raise CapabilityError(f"matching DP needs even 2 <= n <= {MAX_MATCHING_N}, got {n}")
    d = m.dist
    best = np.full(1 << n, np.inf)
    partner = np.full(1 << n, -1, dtype=np.int8)
    best[0] = 0.0
    pc = _popcounts(n)
    for size in range(2, n + 1, 2):
        masks = np.flatnonzero(pc == size)
        lowbit = masks & -masks
        low = np.log2(lowbit).astype(int)
        layer = np.full(len(masks), np.inf)
        arg = np.full(len(masks), -1, dtype=np.int8)
        for j in range(1, n):
            ok = ((masks >> j) & 1 == 1) & (low < j)
            if not ok.any():
                continue
            idx = np.flatnonzero(ok)
            cand = d[low[idx], j] + best[masks[idx] ^ lowbit[idx] ^ (1 << j)]
            better = cand < layer[idx]
            layer[idx[better]] = cand[better]
            arg[idx[better]] = j
        best[masks] = layer
        partner[masks] = arg
    mask = (1 << n) - 1
    edges = []
    while mask:
        low = (mask & -mask).bit_length() - 1
        j = int(partner[mask])
        edges.append((low, j))
        mask ^= (1 << low) | (1 << j)
    return OracleResult(matching_length(d, edges), tuple(edges), Method.MATCHING_DP)


def exhaustive_matching(m: RandomMetric) -> OracleResult:
    """Enumerate all (n-1)!! perfect matchings; for cross-checks."""
    d = m.dist

    def rec(rest):
        if not rest:
            yield ()
            return
        a = rest[0]
        for i in range(1, len(rest)):
            b = rest[i]
            for tail in rec(rest[1:i] + rest[i + 1:]):
                yield ((a, b),) + tail

    best, arg = math.inf, None
    for matching in rec(tuple(range(m.n))):
        total = sum(d[a, b] for a, b in matching)
        if total < best:
            best, arg = total, matching
    return OracleResult(matching_length(d, arg), arg, Method.EXHAUSTIVE_PERM)


def matching_length(d: np.ndarray, edges) -> float:
    return math.fsum(float(d[a, b]) for a, b in edges)


def kmedian_cost(d: np.ndarray, centers) -> float:
    return math.fsum(d[np.asarray(list(centers), dtype=int)].min(axis=0).tolist())


def exact_kmedian(m: RandomMetric, k: int) -> OracleResult:
    n = m.n
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}")
    if math.comb(n, k) > MAX_KMEDIAN_SUBSETS:
        raise CapabilityError(f"C({n},{k}) exceeds the enumeration budget")
    d = m.dist
    chunk = max(1, 2_000_000 // (k * n))
    combos = itertools.combinations(range(n), k)
    best, arg = math.inf, None
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        costs = d[block].min(axis=1).sum(axis=1)
        i = int(costs.argmin())
        if costs[i] < best:
            best, arg = float(costs[i]), tuple(int(v) for v in block[i])
    return OracleResult(kmedian_cost(d, arg), arg, Method.EXHAUSTIVE_SUBSET)


def sorted_weight_prefix(g: WeightedGraph, mm: int) -> float:
    """Sum of the ``mm`` lightest edge weights."""
    if not 1 <= mm <= n_edges(g.n):
        raise InvalidParameterError(f"need 1 <= mm <= {n_edges(g.n)}")
    # sort the selected prefix so the summation order matches a full sort
    return float(np.sort(np.partition(g.weights, mm - 1)[:mm]).sum())


def full_relaxation_apsp(g: WeightedGraph) -> RandomMetric:
    """Floyd-Warshall relaxation over every intermediate vertex."""
    if g.n > 256:
        raise CapabilityError("cubic APSP oracle is capped at n = 256")
    d = g.matrix()
    for k in range(g.n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    d.setflags(write=False)
    return RandomMetric(d, g)
