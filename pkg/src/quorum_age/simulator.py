"""Monte Carlo of the zero-wait write process and the client's age sawtooth.

The read quorum is fixed to nodes ``0..r-1``. Each write interval draws ``n``
delays; the interval ends at the w-th smallest (the commit), the w fastest
nodes receive the update, the rest are cancelled. A read-quorum node that
receives update j at ``T_{j-1} + X`` resets the client's content timestamp to
``T_{j-1}``. Only the fastest read-quorum delivery of an interval moves the
client's age, so the vectorized path keeps just that one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import QuorumConfig, ShiftedExponential, sample_delays

DEFAULT_WARMUP = 1000
NUM_BATCHES = 32
# delays drawn per chunk; bounds memory for large n
_CHUNK_CELLS = 1 << 21


@dataclass(frozen=True)
class CycleRecord:
    index: int
    delays: np.ndarray
    commit_time: float
    success: bool
    delivered_delay: float | None


@dataclass(frozen=True)
class AgeStatistics:
    mean_age: float
    std_error: float
    cycles: int
    empirical_q: float
    empirical_EY: float
    empirical_EXtil: float
    empirical_EA: float
    total_time: float


@dataclass
class IntervalTrace:
    """Per-interval outcomes of one run.

    ``delivered`` is NaN on intervals that missed the read quorum.
    """

    cfg: QuorumConfig
    commit: np.ndarray
    success: np.ndarray
    delivered: np.ndarray
    delays: np.ndarray | None = None

    def __len__(self):
        return len(self.commit)

    @property
    def starts(self) -> np.ndarray:
        """``T_{j-1}`` for every interval j, plus the final end time."""
        return np.concatenate(([0.0], np.cumsum(self.commit)))

    def records(self) -> Iterator[CycleRecord]:
        if self.delays is None:
            raise ValueError("trace was generated without keep_delays=True")
        for j in range(len(self)):
            ok = bool(self.success[j])
            yield CycleRecord(
                index=j,
                delays=self.delays[j],
                commit_time=float(self.commit[j]),
                success=ok,
                delivered_delay=float(self.delivered[j]) if ok else None,
            )


def simulate_trace(
    cfg: QuorumConfig,
    d: ShiftedExponential,
    num_intervals: int,
    rng: np.random.Generator,
    keep_delays: bool = False,
) -> IntervalTrace:
    if num_intervals < 1:
        raise ValueError(f"num_intervals must be >= 1, got {num_intervals}")
    n, w, r = cfg.n, cfg.w, cfg.r
    rows = max(1, _CHUNK_CELLS // n)
    commit = np.empty(num_intervals)
    read_min = np.empty(num_intervals)
    kept = np.empty((num_intervals, n)) if keep_delays else None
    for lo in range(0, num_intervals, rows):
        hi = min(num_intervals, lo + rows)
        x = sample_delays((hi - lo, n), d, rng)
        if kept is not None:
            kept[lo:hi] = x
        read_min[lo:hi] = x[:, :r].min(axis=1)
        commit[lo:hi] = np.partition(x, w - 1, axis=1)[:, w - 1]
    success = read_min <= commit
    delivered = np.where(success, read_min, np.nan)
    return IntervalTrace(cfg, commit, success, delivered, kept)


def cycle_area(intervals: Sequence[float], delivered_delay: float, previous_delivered_delay: float) -> float:
    """Area under the age curve between two successive read-quorum deliveries.

    ``intervals`` are the write intervals from the one holding the previous
    delivery up to (not including) the one holding the new delivery, so their
    count is the success gap M. The age starts at ``previous_delivered_delay``
    and climbs with slope one to ``sum(intervals) + delivered_delay``.
    """
    if len(intervals) == 0:
        raise ValueError("cycle needs at least one write interval")
    width = float(np.sum(intervals))
    return 0.5 * (width + delivered_delay) ** 2 - 0.5 * previous_delivered_delay**2


@dataclass
class AgeIntegral:
    """Exact integral of the client age over ``[start, stop]``."""

    start: float
    stop: float
    cycle_areas: np.ndarray
    cycle_lengths: np.ndarray
    gaps: np.ndarray
    head_area: float
    tail_area: float

    @property
    def total_area(self) -> float:
        return float(self.cycle_areas.sum()) + self.head_area + self.tail_area

    @property
    def total_time(self) -> float:
        return self.stop - self.start


def _segment_area(stamp_offset_a: float, stamp_offset_b: float) -> float:
    # integral of (t - s) dt from a to b given a - s and b - s
    return 0.5 * (stamp_offset_b - stamp_offset_a) * (stamp_offset_b + stamp_offset_a)


def integrate_age(trace: IntervalTrace, warmup: int = 0) -> AgeIntegral:
    """Integrate the sawtooth over intervals ``warmup..N-1`` in closed form."""
    N = len(trace)
    if not 0 <= warmup < N:
        raise ValueError(f"warmup must lie in [0, {N}), got {warmup}")
    T = trace.starts
    idx = np.flatnonzero(trace.success)
    before = idx[idx < warmup]
    win = idx[idx >= warmup]

    # stamp in force at T[warmup]; all stamps start at 0 at t=0
    s0 = T[before[-1]] if len(before) else 0.0
    start, stop = float(T[warmup]), float(T[N])

    if len(win) == 0:
        head = _segment_area(start - s0, stop - s0)
        empty = np.empty(0)
        return AgeIntegral(start, stop, empty, empty, np.empty(0, dtype=int), head, 0.0)

    x = trace.delivered[win]
    width = T[win[1:]] - T[win[:-1]]
    areas = 0.5 * (width + x[1:]) ** 2 - 0.5 * x[:-1] ** 2
    lengths = width + x[1:] - x[:-1]
    head = _segment_area(start - s0, T[win[0]] + x[0] - s0)
    tail = _segment_area(x[-1], stop - T[win[-1]])
    return AgeIntegral(start, stop, areas, lengths, np.diff(win), head, tail)


def sawtooth(trace: IntervalTrace, warmup: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of the client age path, walked event by event.

    Returns ``(t, age)``; a downward jump appears as two points with the same
    ``t``. Every read-quorum delivery is an event, including ones that do not
    lower the age, and so is every commit instant.
    """
    if trace.delays is None:
        raise ValueError("sawtooth needs a trace generated with keep_delays=True")
    r = trace.cfg.r
    t_now, stamp = 0.0, 0.0
    ts, ages = [], []
    for rec in trace.records():
        begin = t_now
        end = begin + rec.commit_time
        events = sorted(x for x in rec.delays[:r] if x <= rec.commit_time)
        if rec.index >= warmup:
            if rec.index == warmup:
                ts.append(begin)
                ages.append(begin - stamp)
            for x in events:
                at = begin + x
                ts.append(at)
                ages.append(at - stamp)
                stamp = max(stamp, begin)
                ts.append(at)
                ages.append(at - stamp)
            ts.append(end)
            ages.append(end - stamp)
        elif events:
            stamp = begin
        t_now = end
    return np.asarray(ts), np.asarray(ages)


def _batch_ratio_se(num: np.ndarray, den: np.ndarray, batches: int = NUM_BATCHES) -> float:
    b = min(batches, len(num))
    if b < 2:
        return math.nan
    ratios = [a.sum() / l.sum() for a, l in zip(np.array_split(num, b), np.array_split(den, b))]
    return float(np.std(ratios, ddof=1) / math.sqrt(b))


def statistics_from_trace(trace: IntervalTrace, warmup: int) -> AgeStatistics:
    integral = integrate_age(trace, warmup)
    tail = slice(warmup, None)
    succ = trace.success[tail]
    delivered = trace.delivered[tail][succ]
    areas = integral.cycle_areas
    return AgeStatistics(
        mean_age=float(integral.total_area / integral.total_time),
        std_error=_batch_ratio_se(areas, integral.cycle_lengths),
        cycles=len(areas),
        empirical_q=float(1.0 - succ.mean()),
        empirical_EY=float(trace.commit[tail].mean()),
        empirical_EXtil=float(delivered.mean()) if len(delivered) else math.nan,
        empirical_EA=float(areas.mean()) if len(areas) else math.nan,
        total_time=float(integral.total_time),
    )


def run_simulation(
    cfg: QuorumConfig,
    d: ShiftedExponential,
    num_intervals: int,
    warmup_intervals: int = DEFAULT_WARMUP,
    seed: int = 0,
) -> AgeStatistics:
    """Simulate ``num_intervals`` writes (warmup included) and measure the client age."""
    if warmup_intervals < 0:
        raise ValueError(f"warmup_intervals must be >= 0, got {warmup_intervals}")
    if num_intervals <= warmup_intervals:
        raise ValueError(
            f"num_intervals ({num_intervals}) must exceed warmup_intervals ({warmup_intervals})"
        )
    rng = np.random.default_rng(seed)
    trace = simulate_trace(cfg, d, num_intervals, rng)
    return statistics_from_trace(trace, warmup_intervals)


def pool(stats: Sequence[AgeStatistics]) -> AgeStatistics:
    """Equal-weight pooling of independent replications.

    The standard error combines each replication's batch-means variance; a
    sample deviation over a handful of replications has too few degrees of
    freedom to be used as a 3-sigma yardstick. It falls back to the
    between-replication deviation when a run has no batch estimate.
    """
    if not stats:
        raise ValueError("nothing to pool")
    if len(stats) == 1:
        return stats[0]
    k = len(stats)
    means = np.array([s.mean_age for s in stats])
    ses = np.array([s.std_error for s in stats])
    if np.all(np.isfinite(ses)):
        se = math.sqrt(float(np.sum(ses**2))) / k
    else:
        se = float(means.std(ddof=1) / math.sqrt(k))

    def avg(name):
        return float(np.mean([getattr(s, name) for s in stats]))

    return AgeStatistics(
        mean_age=float(means.mean()),
        std_error=se,
        cycles=sum(s.cycles for s in stats),
        empirical_q=avg("empirical_q"),
        empirical_EY=avg("empirical_EY"),
        empirical_EXtil=avg("empirical_EXtil"),
        empirical_EA=avg("empirical_EA"),
        total_time=float(sum(s.total_time for s in stats)),
    )


def replicate(
    cfg: QuorumConfig,
    d: ShiftedExponential,
    num_intervals: int,
    replications: int,
    base_seed: int = 0,
    warmup_intervals: int = DEFAULT_WARMUP,
    workers: int = 1,
) -> AgeStatistics:
    """Run replications with seeds ``base_seed + i`` and pool them in seed order."""
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    seeds = [base_seed + i for i in range(replications)]

    def one(seed):
        return run_simulation(cfg, d, num_intervals, warmup_intervals, seed)

    if workers > 1 and replications > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    return pool(results)
