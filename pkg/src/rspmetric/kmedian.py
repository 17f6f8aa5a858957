"""k-median by picking centers without looking at the metric."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analytics import harmonic
from .errors import InvalidParameterError
from .metric import RandomMetric
from .oracles import exact_kmedian, kmedian_cost


class Variant(str, enum.Enum):
    FIXED = "TrivialFixed"
    RANDOM = "TrivialRandom"
    EXACT = "Exact"


@dataclass(frozen=True)
class KMedianResult:
    chosen: tuple[int, ...]
    cost: float
    method: Variant


def _check(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")


def trivial_centers(n: int, k: int, variant: Variant | str = Variant.FIXED,
                    rng: np.random.Generator | None = None) -> tuple[int, ...]:
    _check(n, k)
    variant = Variant(variant)
    if variant is Variant.FIXED:
        return tuple(range(k))
    if variant is Variant.RANDOM:
        if rng is None:
            raise InvalidParameterError("random centers need a generator")
        return tuple(sorted(int(v) for v in rng.choice(n, k, replace=False)))
    raise InvalidParameterError("the trivial algorithm has no exact variant")


def trivial_kmedian(m: RandomMetric, k: int, variant: Variant | str = Variant.FIXED,
                    rng: np.random.Generator | None = None) -> KMedianResult:
    chosen = trivial_centers(m.n, k, variant, rng)
    return KMedianResult(chosen, kmedian_cost(m.dist, chosen), Variant(variant))


def optimal_kmedian(m: RandomMetric, k: int) -> KMedianResult:
    res = exact_kmedian(m, k)
    return KMedianResult(res.witness, res.value, Variant.EXACT)


def expected_trivial(n: int, k: int) -> float:
    _check(n, k)
    return harmonic(n - 1) - harmonic(k - 1)


def sample_cost_direct(n: int, k: int, rng: np.random.Generator, size: int | None = None):
    """Draw from sum_{i=k}^{n-1} Exp(i), the law of the cost of any fixed k-set."""
    _check(n, k)
    rates = np.arange(k, n, dtype=float)
    x = rng.exponential(size=(1 if size is None else size, len(rates))) / rates
    out = x.sum(axis=1)
    return float(out[0]) if size is None else out
