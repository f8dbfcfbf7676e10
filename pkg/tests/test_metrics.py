import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpwa_ucb.engine import ReplicationResult
from lpwa_ucb.metrics import (
    InsufficientData,
    RateAccumulator,
    Series,
    aggregate,
    collision_estimates,
    cumulative_rate,
    mean_stderr,
    tail_rate,
    windowed_packet_rate,
    windowed_rate,
)


def result(attempts, successes, drops=None, **counters):
    attempts = np.asarray(attempts)
    return ReplicationResult(
        attempts=attempts,
        successes=np.asarray(successes),
        drops=np.zeros_like(attempts) if drops is None else np.asarray(drops),
        **counters,
    )


def test_all_successful_rate_is_one():
    res = result([1, 2, 3, 1, 1, 1], [1, 2, 3, 1, 1, 1])
    assert np.all(windowed_rate(res, 2).rates == 1.0)


def test_empty_bucket_is_missing():
    series = windowed_rate(result([0, 0, 2, 1], [0, 0, 1, 1]), 2)
    assert math.isnan(series.rates[0])
    assert series.rates[1] == pytest.approx(2 / 3)


def test_bucket_arithmetic():
    series = windowed_rate(result([2, 2], [1, 2]), 2)
    assert list(series.bucket_ends) == [2]
    assert series.rates[0] == 0.75


def test_partial_last_bucket():
    series = windowed_rate(result([1] * 5, [1, 0, 1, 0, 1]), 2)
    assert list(series.bucket_ends) == [2, 4, 5]
    assert list(series.rates) == [0.5, 0.5, 1.0]


def test_window_bounds():
    with pytest.raises(ValueError):
        windowed_rate(result([1, 1], [1, 1]), 3)
    with pytest.raises(ValueError):
        windowed_rate(result([1, 1], [1, 1]), 0)


def test_packet_and_cumulative_rates():
    res = result([2, 2, 2, 2], [1, 1, 2, 0], drops=[1, 0, 0, 1])
    assert list(windowed_packet_rate(res, 2).rates) == [2 / 3, 2 / 3]
    assert list(cumulative_rate(res, 2).rates) == [0.5, 0.5]
    assert tail_rate(res, 0.5) == 0.5


def s(*rates):
    return Series(np.arange(1, len(rates) + 1), np.asarray(rates, dtype=float))


def test_aggregate_single_replication():
    (pt,) = aggregate([s(0.3)])
    assert (pt.mean_rate, pt.stderr, pt.n_reps) == (0.3, 0.0, 1)


def test_aggregate_two_replications():
    (pt,) = aggregate([s(0.4), s(0.6)])
    assert pt.mean_rate == pytest.approx(0.5)
    # sample std sqrt(0.02) over sqrt(2)
    assert pt.stderr == pytest.approx(0.1)


def test_aggregate_identical():
    pts = aggregate([s(0.2, 0.7)] * 5)
    assert [p.stderr for p in pts] == [0.0, 0.0]


def test_aggregate_skips_missing():
    pts = aggregate([s(float("nan"), 0.5), s(0.4, 0.7)])
    assert pts[0].n_reps == 1 and pts[0].mean_rate == 0.4
    assert pts[1].n_reps == 2


def test_aggregate_all_missing_bucket():
    (pt,) = aggregate([s(float("nan"))])
    assert pt.n_reps == 0 and math.isnan(pt.mean_rate)


def test_aggregate_mismatched_buckets():
    with pytest.raises(ValueError):
        aggregate([s(0.1, 0.2), s(0.1)])


rate_lists = st.lists(
    st.lists(st.one_of(st.floats(0, 1), st.just(float("nan"))), min_size=3, max_size=3),
    min_size=1, max_size=12,
)


def points_close(a, b):
    for p, q in zip(a, b):
        assert p.n_reps == q.n_reps
        if p.n_reps:
            assert p.mean_rate == pytest.approx(q.mean_rate, abs=1e-12)
            assert p.stderr == pytest.approx(q.stderr, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(rates=rate_lists, data=st.data())
def test_aggregate_permutation_invariant(rates, data):
    series = [s(*r) for r in rates]
    shuffled = data.draw(st.permutations(series))
    points_close(aggregate(series), aggregate(shuffled))


@settings(max_examples=100, deadline=None)
@given(rates=rate_lists, split=st.integers(0, 12))
def test_merge_then_aggregate_equals_aggregate(rates, split):
    series = [s(*r) for r in rates]
    left, right = RateAccumulator(series[0].bucket_ends), RateAccumulator(series[0].bucket_ends)
    for x in series[:split]:
        left.add(x)
    for x in series[split:]:
        right.add(x)
    points_close(left.merge(right).points(), aggregate(series))


@settings(max_examples=100, deadline=None)
@given(rates=st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_aggregate_matches_numpy(rates):
    (pt,) = aggregate([s(r) for r in rates])
    mean, stderr, n = mean_stderr(rates)
    assert pt.mean_rate == pytest.approx(np.mean(rates), abs=1e-12) and n == len(rates)
    assert pt.stderr == pytest.approx(stderr, abs=1e-9)


def test_collision_estimates_examples():
    zero = result([1], [1], first_attempt_count=5, second_attempt_count=2)
    assert collision_estimates(zero) == (0.0, 0.0)
    res = result([1], [1], first_attempt_count=1000, first_attempt_collisions=100,
                 second_attempt_count=100, second_attempt_collisions=20)
    assert collision_estimates(res) == (0.1, 0.2)


def test_collision_estimates_insufficient():
    with pytest.raises(InsufficientData):
        collision_estimates(result([1], [1], first_attempt_count=3))
    with pytest.raises(InsufficientData):
        collision_estimates(result([1], [1]))


def test_collision_estimate_certain_collision():
    from lpwa_ucb.engine import run_replication
    from lpwa_ucb.model import ScenarioConfig, Strategy

    cfg = ScenarioConfig(2, 1, 1.0, 1, 1, (0.0,), strategy=Strategy.NO_LEARNING, horizon=100)
    res = run_replication(cfg)
    assert res.first_attempt_count == 200
    with pytest.raises(InsufficientData):
        collision_estimates(res)  # M = 1: no retransmission ever happens
    assert res.first_attempt_collisions / res.first_attempt_count == 1.0
