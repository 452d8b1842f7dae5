"""Closed-form average age, its large-n approximation, and the optimal write quorum."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    QuorumConfig,
    ShiftedExponential,
    order_stat_mean,
    order_stat_var,
)


@dataclass(frozen=True)
class AgeBreakdown:
    """Terms of ``E[Xtil] + E[M^2]/(2E[M]) * E[Y] + Var[Y]/(2E[Y])``."""

    mean_successful_delay: float
    interval_mean: float
    interval_var: float
    miss_probability: float
    m_moment_ratio: float
    total_age: float

    def recombine(self) -> float:
        return (
            self.mean_successful_delay
            + self.m_moment_ratio * self.interval_mean
            + self.interval_var / (2.0 * self.interval_mean)
        )


@dataclass(frozen=True)
class OptimalQuorum:
    w: int
    age: float
    omega: float
    w_continuous: float
    non_strict: bool


def binom_ratio(a: int, b: int, k: int) -> float:
    """C(a, k) / C(b, k) for 0 <= a <= b, as a product of factors <= 1."""
    if k < 0 or a < 0 or a > b:
        raise ValueError(f"invalid binomial ratio arguments a={a}, b={b}, k={k}")
    if k > a:
        return 0.0
    out = 1.0
    for i in range(k):
        out *= (a - i) / (b - i)
    return out


def min_rank_probabilities(cfg: QuorumConfig) -> list[float]:
    """P(the fastest read-quorum node has overall delay rank k), k = 1..w.

    Entry k-1 is C(n-k, r-1)/C(n, r); ranks above n-r+1 get zero.
    """
    n, w, r = cfg.n, cfg.w, cfg.r
    # P_1 = r/n, P_{k+1}/P_k = (n-k-r+1)/(n-k)
    out = [r / n]
    for k in range(1, w):
        out.append(out[-1] * max(0, n - k - r + 1) / (n - k))
    return out


def miss_probability(cfg: QuorumConfig) -> float:
    """Probability that the write quorum and read quorum are disjoint."""
    if cfg.is_strict:
        return 0.0
    return binom_ratio(cfg.n - cfg.w, cfg.n, cfg.r)


def interval_count_moments(q: float) -> tuple[float, float]:
    """First and second moments of the geometric count of intervals between successes."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"miss probability must lie in [0, 1), got {q!r}")
    p = 1.0 - q
    return 1.0 / p, (2.0 - p) / (p * p)


def successful_write_delay_mean(cfg: QuorumConfig, d: ShiftedExponential) -> float:
    """E[Xtil]: mean delay of the first read-quorum delivery, given one happens."""
    probs = min_rank_probabilities(cfg)
    p_success = 1.0 - miss_probability(cfg)
    if p_success <= 0.0:
        raise ValueError("read quorum can never receive an update")
    # ranks above min(w, n-r+1) carry zero weight, see min_rank_probabilities
    kmax = min(cfg.w, cfg.n - cfg.r + 1)
    total = sum(order_stat_mean(k, cfg.n, d) * probs[k - 1] for k in range(1, kmax + 1))
    return total / p_success


def exact_average_age(cfg: QuorumConfig, d: ShiftedExponential) -> AgeBreakdown:
    q = miss_probability(cfg)
    em, em2 = interval_count_moments(q)
    ratio = em2 / (2.0 * em)
    xt = successful_write_delay_mean(cfg, d)
    ey = order_stat_mean(cfg.w, cfg.n, d)
    vy = order_stat_var(cfg.w, cfg.n, d)
    if cfg.is_strict:
        total = xt + (ey * ey + vy) / (2.0 * ey)
    else:
        total = xt + 0.5 * (1.0 + q) / (1.0 - q) * ey + vy / (2.0 * ey)
    return AgeBreakdown(
        mean_successful_delay=xt,
        interval_mean=ey,
        interval_var=vy,
        miss_probability=q,
        m_moment_ratio=ratio,
        total_age=total,
    )


def approx_average_age(cfg: QuorumConfig, d: ShiftedExponential) -> float:
    """Large-n closed form; the branch follows the integer condition w + r > n."""
    if cfg.w >= cfg.n:
        raise ValueError("approximation undefined for w = n (log(1/beta) diverges)")
    lam, c, r = d.rate, d.shift, cfg.r
    beta = cfg.beta
    br = beta**r
    log_inv = -math.log(beta)
    if cfg.is_strict:
        return (1.0 - 2.0 * br) / (2.0 * lam) * log_inv + (1.0 - br) * (c + 1.0 / (lam * r)) + c / 2.0
    return 1.0 / (lam * r) + log_inv / (2.0 * lam) + c + c * (1.0 + br) / (2.0 * (1.0 - br))


def approx_age_nonstrict_omega(omega: float, rate: float, shift: float, r: int) -> float:
    """Non-strict approximation written as a function of omega = beta**r."""
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega!r}")
    log_inv = -math.log(omega) / r
    return (
        1.0 / (rate * r)
        + log_inv / (2.0 * rate)
        + shift
        + shift * (1.0 + omega) / (2.0 * (1.0 - omega))
    )


def optimal_omega(rate: float, shift: float, r: int) -> float:
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate!r}")
    if not shift > 0:
        raise ValueError(f"optimal omega needs a positive shift, got {shift!r}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    a = rate * shift * r + 1.0
    # a - sqrt(a^2 - 1) == 1 / (a + sqrt(a^2 - 1)); the latter avoids cancellation
    return 1.0 / (a + math.sqrt(a * a - 1.0))


def optimal_write_quorum(n: int, r: int, d: ShiftedExponential) -> OptimalQuorum:
    """Round the continuous optimum to the best integer w by local search on the exact age."""
    if not 1 <= r <= n:
        raise ValueError(f"r must lie in [1, {n}], got {r}")
    omega = optimal_omega(d.rate, d.shift, r)
    w0 = n * (1.0 - omega ** (1.0 / r))
    lo = max(1, math.floor(w0) - 2)
    hi = min(n, math.ceil(w0) + 2)
    best_w, best_age = None, math.inf
    for w in range(lo, hi + 1):
        age = exact_average_age(QuorumConfig(n, w, r), d).total_age
        if age < best_age:
            best_w, best_age = w, age
    return OptimalQuorum(
        w=best_w,
        age=best_age,
        omega=omega,
        w_continuous=w0,
        non_strict=best_w + r <= n,
    )
