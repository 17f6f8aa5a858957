"""Closed-form expectations, CDF bounds and tail bounds, plus direct samplers
and the empirical-CDF machinery used to compare them with simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InvalidParameterError


@lru_cache(maxsize=4096)
def harmonic(n: int) -> float:
    if n < 0:
        raise InvalidParameterError(f"harmonic number needs n >= 0, got {n}")
    return math.fsum(1.0 / i for i in range(1, n + 1))


def _check_k(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")


def expected_tau(n: int, k: int) -> float:
    """Mean radius of the smallest ball around a vertex holding k vertices."""
    _check_k(n, k)
    return (harmonic(k - 1) + harmonic(n - 1) - harmonic(n - k)) / n


def tau_rates(n: int, k: int) -> np.ndarray:
    """Rates of the independent exponential increments making up tau_k."""
    i = np.arange(1, k, dtype=float)
    return i * (n - i)


def sample_tau_direct(n: int, k: int, rng: np.random.Generator, size: int | None = None):
    """Draw tau_k from the birth process, without building a metric."""
    _check_k(n, k)
    rates = tau_rates(n, k)
    shape = (1 if size is None else size, len(rates))
    x = rng.exponential(size=shape) / rates
    out = x.sum(axis=1)
    return float(out[0]) if size is None else out


def _pow1m_exp(rate: float, power: float) -> float:
    """(1 - exp(-rate))**power evaluated in log space."""
    if power == 0:
        return 1.0
    if rate <= 0:
        return 0.0
    return math.exp(power * math.log(-math.expm1(-rate)))


def cdf_sum_exp_ci(n: int, c: float, alpha: float) -> float:
    """P(sum_{i=1..n} Exp(c*i) <= alpha)."""
    if n < 1 or c <= 0 or alpha < 0:
        raise InvalidParameterError("need n >= 1, c > 0, alpha >= 0")
    return _pow1m_exp(c * alpha, n)


def tau_cdf_bounds(n: int, k: int, delta: float) -> tuple[float, float]:
    """Lower and upper bounds on P(tau_k <= delta).

    The lower bound is the better of the (n-k)-rate bound and the
    (n-1)/4-rate bound with exponent 4(k-1)/3.
    """
    _check_k(n, k)
    if delta < 0:
        raise InvalidParameterError("delta must be >= 0")
    upper = _pow1m_exp(n * delta, k - 1)
    lower_a = _pow1m_exp((n - k) * delta, k - 1)
    lower_b = _pow1m_exp((n - 1) * delta / 4.0, 4.0 * (k - 1) / 3.0)
    lower = max(lower_a, lower_b)
    return min(lower, upper), upper


def s_delta(n: int, delta: float) -> float:
    """Ball-size threshold min(exp(delta*n/5), (n+1)/2)."""
    half = (n + 1) / 2.0
    x = delta * n / 5.0
    return half if x >= math.log(half) else math.exp(x)


def ball_tail_lower(n: int, delta: float) -> tuple[float, float]:
    """(threshold, bound) with P(|B_delta(v)| < threshold) <= bound."""
    if n < 5:
        raise InvalidParameterError("bound holds for n >= 5 only")
    if delta < 0:
        raise InvalidParameterError("delta must be >= 0")
    return s_delta(n, delta), math.exp(-delta * n / 5.0)


def _clamp(x: float, clamp: bool) -> float:
    return min(max(x, 0.0), 1.0) if clamp else x


def ball_upper_threshold(n: int, delta: float, c: float) -> float:
    x = c * delta * n
    return math.inf if x > 700 else math.exp(x)


def ball_tail_upper(n: int, delta: float, c: float, clamp: bool = True) -> float:
    """Bound on P(|B_delta(v)| >= exp(c*delta*n))."""
    if c <= 1:
        raise InvalidParameterError("need c > 1")
    if delta < 0:
        raise InvalidParameterError("delta must be >= 0")
    return _clamp(math.exp(-(c - 1) * delta * n), clamp)


def janson_diameter_bound(n: int, c: float, clamp: bool = True) -> float:
    """Reference envelope n**(3-c) * ln(n)**2 for P(diameter > c ln n / n).

    The underlying statement is a big-O; the constant is fixed to one here.
    """
    if c <= 3:
        raise InvalidParameterError("need c > 3")
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    return _clamp(n ** (3.0 - c) * math.log(n) ** 2, clamp)


def kmedian_cost_density(m: int, k: int, x: float) -> float:
    """Density at x of sum_{i=k..m} Exp(i)."""
    _check_k(m, k)
    if x < 0:
        raise InvalidParameterError("x must be >= 0")
    if m > k and x == 0:
        return 0.0
    log_binom = math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
    tail = (m - k) * math.log(-math.expm1(-x)) if m > k else 0.0
    return math.exp(math.log(k) + log_binom - k * x + tail)


def sm_tail_bound(n: int, alpha: float, c: float, clamp: bool = True) -> float:
    """Bound on P(S_m <= c) for the sum S_m of the m >= alpha*n lightest weights."""
    if not 0 < alpha <= 1 or not 0 <= c <= 1:
        raise InvalidParameterError("need alpha in (0, 1] and c in [0, 1]")
    if c == 0:
        return 0.0
    log_val = alpha * n * (2.0 + math.log(c) - math.log(2 * alpha * alpha))
    return _clamp(math.exp(min(log_val, 700.0)), clamp)


def dkw_band(M: int, confidence: float = 0.99) -> float:
    """Uniform half-width of a Dvoretzky-Kiefer-Wolfowitz band for M samples."""
    if M < 1 or not 0 < confidence < 1:
        raise InvalidParameterError("need M >= 1 and confidence in (0, 1)")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * M))


class EmpiricalCdf:
    def __init__(self, samples):
        self.values = np.sort(np.asarray(samples, dtype=float).ravel())
        if self.values.size == 0:
            raise InvalidParameterError("empty sample")

    @property
    def M(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.M

    def quantile_grid(self, points: int = 32) -> np.ndarray:
        return quantile_grid(self.values, points)


def quantile_grid(samples, points: int = 32) -> np.ndarray:
    """``points`` equally spaced interior quantiles of the data."""
    levels = np.arange(1, points + 1) / (points + 1)
    return np.quantile(np.asarray(samples, dtype=float), levels)


@dataclass
class CdfComparison:
    grid: np.ndarray
    empirical: np.ndarray
    reference_low: np.ndarray
    reference_high: np.ndarray
    band: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.empirical >= self.reference_low - self.band)
                    and np.all(self.empirical <= self.reference_high + self.band))

    @property
    def worst_excess(self) -> float:
        """Largest violation beyond the band (<= 0 means pass)."""
        below = self.reference_low - self.band - self.empirical
        above = self.empirical - self.reference_high - self.band
        return float(max(below.max(), above.max()))


def compare_to_bounds(samples, bounds: Callable[[float], tuple[float, float]],
                      confidence: float = 0.99, points: int = 32) -> CdfComparison:
    """ECDF of ``samples`` against a (lower, upper) envelope on a quantile grid."""
    ecdf = EmpiricalCdf(samples)
    grid = ecdf.quantile_grid(points)
    lo, hi = np.array([bounds(float(x)) for x in grid]).T
    return CdfComparison(grid, ecdf(grid), lo, hi, dkw_band(ecdf.M, confidence))


def compare_to_cdf(samples, cdf: Callable[[float], float],
                   confidence: float = 0.99, points: int = 32) -> CdfComparison:
    def both(x):
        f = cdf(x)
        return f, f
    return compare_to_bounds(samples, both, confidence, points)


def compare_samples(a, b, confidence: float = 0.99, points: int = 32) -> CdfComparison:
    """Two-sample check: ECDFs agree within the sum of their DKW bands."""
    fa, fb = EmpiricalCdf(a), EmpiricalCdf(b)
    grid = quantile_grid(np.concatenate([fa.values, fb.values]), points)
    ref = fb(grid)
    band = dkw_band(fa.M, confidence) + dkw_band(fb.M, confidence)
    return CdfComparison(grid, fa(grid), ref, ref, band)


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def within_se(x, expected: float, n_se: float = 4.0) -> bool:
    mean, se = mean_and_se(x)
    return abs(mean - expected) <= n_se * se
