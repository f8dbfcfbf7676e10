"""Success-rate series, replication aggregation and collision estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .engine import ReplicationResult

MISSING = float("nan")


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    """Rate per bucket of slots; ``nan`` marks a bucket without any attempt."""

    bucket_ends: np.ndarray
    rates: np.ndarray


@dataclass(frozen=True)
class SeriesPoint:
    slot_bucket: int
    mean_rate: float
    stderr: float
    n_reps: int


def bucket_ends(horizon: int, window: int) -> np.ndarray:
    if window < 1 or window > horizon:
        raise ValueError(f"window must lie in [1, {horizon}], got {window}")
    ends = np.arange(window, horizon + 1, window)
    if ends.size == 0 or ends[-1] != horizon:
        ends = np.append(ends, horizon)
    return ends


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, MISSING)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _bucket_sums(values: np.ndarray, ends: np.ndarray) -> np.ndarray:
    starts = np.concatenate(([0], ends[:-1]))
    return np.add.reduceat(values, starts)


def windowed_rate(res: ReplicationResult, window: int) -> Series:
    """Successes over attempts in consecutive buckets of ``window`` slots."""
    ends = bucket_ends(res.horizon, window)
    return Series(ends, _ratio(_bucket_sums(res.successes, ends), _bucket_sums(res.attempts, ends)))


def windowed_packet_rate(res: ReplicationResult, window: int) -> Series:
    """Delivered over finished (delivered or dropped) packets per bucket."""
    ends = bucket_ends(res.horizon, window)
    delivered = _bucket_sums(res.successes, ends)
    return Series(ends, _ratio(delivered, delivered + _bucket_sums(res.drops, ends)))


def cumulative_rate(res: ReplicationResult, window: int) -> Series:
    ends = bucket_ends(res.horizon, window)
    s = np.cumsum(res.successes)[ends - 1]
    a = np.cumsum(res.attempts)[ends - 1]
    return Series(ends, _ratio(s, a))


def tail_rate(res: ReplicationResult, fraction: float = 0.25) -> float:
    """Attempt success rate over the last ``fraction`` of the horizon."""
    start = res.horizon - max(1, int(round(res.horizon * fraction)))
    a = res.attempts[start:].sum()
    return float(res.successes[start:].sum() / a) if a else MISSING


def tail_packet_rate(res: ReplicationResult, fraction: float = 0.25) -> float:
    start = res.horizon - max(1, int(round(res.horizon * fraction)))
    s = res.successes[start:].sum()
    done = s + res.drops[start:].sum()
    return float(s / done) if done else MISSING


class RateAccumulator:
    """Per-bucket count, mean and sum of squared deviations; mergeable (Chan et al.)."""

    def __init__(self, bucket_ends: np.ndarray):
        self.bucket_ends = np.asarray(bucket_ends)
        size = len(self.bucket_ends)
        self.count = np.zeros(size, dtype=np.int64)
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, series: Series) -> "RateAccumulator":
        if not np.array_equal(series.bucket_ends, self.bucket_ends):
            raise ValueError("series bucketing does not match")
        ok = ~np.isnan(series.rates)
        n = self.count + ok
        delta = np.where(ok, series.rates - self.mean, 0.0)
        step = _ratio(delta, n.astype(float))
        step[np.isnan(step)] = 0.0
        self.mean = self.mean + step
        self.m2 = self.m2 + delta * np.where(ok, series.rates - self.mean, 0.0)
        self.count = n
        return self

    def merge(self, other: "RateAccumulator") -> "RateAccumulator":
        if not np.array_equal(other.bucket_ends, self.bucket_ends):
            raise ValueError("series bucketing does not match")
        out = RateAccumulator(self.bucket_ends)
        n = self.count + other.count
        nf = np.maximum(n, 1).astype(float)
        delta = other.mean - self.mean
        out.count = n
        out.mean = np.where(n > 0, self.mean + delta * other.count / nf, 0.0)
        out.m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / nf
        return out

    def points(self) -> List[SeriesPoint]:
        pts = []
        for end, n, mean, m2 in zip(self.bucket_ends, self.count, self.mean, self.m2):
            if n == 0:
                pts.append(SeriesPoint(int(end), MISSING, MISSING, 0))
                continue
            stderr = math.sqrt(max(m2, 0.0) / (n - 1) / n) if n > 1 else 0.0
            pts.append(SeriesPoint(int(end), float(mean), stderr, int(n)))
        return pts


def aggregate(series: Sequence[Series]) -> List[SeriesPoint]:
    """Mean and standard error per bucket across replications, skipping missing buckets."""
    if not series:
        raise ValueError("no series to aggregate")
    acc = RateAccumulator(series[0].bucket_ends)
    for s in series:
        acc.add(s)
    return acc.points()


def mean_stderr(values: Sequence[float]) -> Tuple[float, float, int]:
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return MISSING, MISSING, 0
    stderr = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), stderr, int(v.size)


def collision_estimates(res: ReplicationResult) -> Tuple[float, float]:
    """Empirical collision frequency at the first transmission and first retransmission."""
    if res.first_attempt_count == 0:
        raise InsufficientData("no first transmissions recorded")
    if res.second_attempt_count == 0:
        raise InsufficientData("no first retransmissions recorded")
    return (res.first_attempt_collisions / res.first_attempt_count,
            res.second_attempt_collisions / res.second_attempt_count)
