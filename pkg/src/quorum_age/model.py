"""Write-delay distribution, quorum sizes and order-statistic moments."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class Regime(enum.Enum):
    STRICT = "strict"
    NON_STRICT = "non-strict"


@dataclass(frozen=True)
class ShiftedExponential:
    """Delay ``c + Exp(rate)``.

    ``shift`` may be zero (plain exponential); callers that need a strictly
    positive shift check it themselves.
    """

    rate: float
    shift: float = 0.0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate!r}")
        if not (self.shift >= 0 and math.isfinite(self.shift)):
            raise ValueError(f"shift must be non-negative and finite, got {self.shift!r}")

    @property
    def mean(self) -> float:
        return self.shift + 1.0 / self.rate

    @property
    def var(self) -> float:
        return 1.0 / self.rate**2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = -np.expm1(-self.rate * (x - self.shift))
        return np.where(x >= self.shift, out, 0.0)

    def ppf(self, u):
        """Inverse CDF on ``[0, 1)``."""
        u = np.asarray(u, dtype=float)
        return self.shift - np.log1p(-u) / self.rate


@dataclass(frozen=True)
class QuorumConfig:
    n: int
    w: int
    r: int

    def __post_init__(self):
        for name in ("n", "w", "r"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {v!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.w <= self.n:
            raise ValueError(f"w must lie in [1, {self.n}], got {self.w}")
        if not 1 <= self.r <= self.n:
            raise ValueError(f"r must lie in [1, {self.n}], got {self.r}")

    def regime(self) -> Regime:
        return Regime.STRICT if self.w + self.r > self.n else Regime.NON_STRICT

    @property
    def is_strict(self) -> bool:
        return self.regime() is Regime.STRICT

    @property
    def alpha(self) -> float:
        return self.w / self.n

    @property
    def beta(self) -> float:
        return 1.0 - self.w / self.n

    @property
    def omega(self) -> float:
        return self.beta**self.r


class HarmonicCache:
    """Prefix sums of ``1/i`` and ``1/i**2`` up to ``max_j``."""

    def __init__(self, max_j: int = 1024):
        if max_j < 0:
            raise ValueError("max_j must be non-negative")
        i = np.arange(1, max_j + 1, dtype=float)
        self.max_j = max_j
        self.h1 = np.concatenate(([0.0], np.cumsum(1.0 / i)))
        self.h2 = np.concatenate(([0.0], np.cumsum(1.0 / i**2)))

    def harmonic(self, j: int) -> float:
        return float(self.h1[j])

    def harmonic2(self, j: int) -> float:
        return float(self.h2[j])


@lru_cache(maxsize=None)
def _cache_for(max_j: int) -> HarmonicCache:
    return HarmonicCache(max_j)


def _cache(j: int) -> HarmonicCache:
    # round the table size up to a power of two so repeated calls share it
    size = 1 << max(10, int(j).bit_length())
    return _cache_for(size)


def _check_index(j):
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise TypeError(f"harmonic index must be an integer, got {j!r}")
    if j < 0:
        raise ValueError(f"harmonic index must be non-negative, got {j}")


def harmonic(j: int) -> float:
    """H_j = sum_{i=1..j} 1/i, with H_0 = 0."""
    _check_index(j)
    return _cache(j).harmonic(j)


def harmonic2(j: int) -> float:
    """Second-order harmonic number sum_{i=1..j} 1/i**2."""
    _check_index(j)
    return _cache(j).harmonic2(j)


def _check_rank(k, n):
    if not (1 <= n and 1 <= k <= n):
        raise ValueError(f"order statistic rank must satisfy 1 <= k <= n, got k={k}, n={n}")


def order_stat_mean(k: int, n: int, d: ShiftedExponential) -> float:
    """Mean of the k-th smallest of n i.i.d. shifted exponentials."""
    _check_rank(k, n)
    return d.shift + (harmonic(n) - harmonic(n - k)) / d.rate


def order_stat_var(k: int, n: int, d: ShiftedExponential) -> float:
    _check_rank(k, n)
    return (harmonic2(n) - harmonic2(n - k)) / d.rate**2


def order_stat_second_moment(k: int, n: int, d: ShiftedExponential) -> float:
    m = order_stat_mean(k, n, d)
    return m * m + order_stat_var(k, n, d)


def sample_delays(n, d: ShiftedExponential, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. delays by inverse transform of ``rng.random``.

    ``n`` may be an int or a shape tuple.
    """
    return d.ppf(rng.random(n))
