"""UCB1 learner and the channel-selection strategies built on it.

Channels are 0-based internally.
"""
from __future__ import annotations

import math
from typing import List, Optional, Tuple

from .model import DeviceState, Strategy

INF = math.inf


class UcbLearner:
    """UCB1 index policy over ``n_arms`` channels with exploration coefficient ``alpha``.

    ``attempts`` counts completed updates and doubles as the learner's own
    time index: the index used for the next selection is ``attempts + 1``.
    """

    __slots__ = ("pulls", "successes", "attempts", "alpha")

    def __init__(self, n_arms: int, alpha: float = 0.5):
        self.pulls: List[int] = [0] * n_arms
        self.successes: List[int] = [0] * n_arms
        self.attempts = 0
        self.alpha = alpha

    @property
    def n_arms(self) -> int:
        return len(self.pulls)

    @property
    def mean_rewards(self) -> List[float]:
        return [s / n if n else 0.0 for s, n in zip(self.successes, self.pulls)]

    def indices(self, now: int) -> List[float]:
        log_now = math.log(now) if now > 1 else 0.0
        scale = self.alpha * log_now
        return [
            INF if n == 0 else s / n + math.sqrt(scale / n)
            for n, s in zip(self.pulls, self.successes)
        ]

    def select(self, rng) -> int:
        pulls = self.pulls
        if 0 in pulls:
            unplayed = [k for k, n in enumerate(pulls) if n == 0]
            if len(unplayed) == 1:
                return unplayed[0]
            return unplayed[int(rng.random() * len(unplayed))]
        now = self.attempts + 1
        scale = self.alpha * math.log(now) if now > 1 else 0.0
        best = -INF
        ties: List[int] = []
        for k, s in enumerate(self.successes):
            n = pulls[k]
            idx = s / n + math.sqrt(scale / n)
            if idx > best:
                best = idx
                ties = [k]
            elif idx == best:
                ties.append(k)
        if len(ties) == 1:
            return ties[0]
        return ties[int(rng.random() * len(ties))]

    def update(self, channel: int, reward: int) -> None:
        self.pulls[channel] += 1
        self.successes[channel] += reward
        self.attempts += 1

    def __repr__(self) -> str:
        return f"UcbLearner(pulls={self.pulls}, mean_rewards={self.mean_rewards}, attempts={self.attempts})"


def learner_indices(learner: UcbLearner, now: int) -> List[float]:
    """UCB index of every channel at learner time ``now`` (unplayed channels are +inf)."""
    if now < 1:
        raise ValueError(f"now must be >= 1, got {now}")
    return learner.indices(now)


def learner_select(learner: UcbLearner, rng) -> int:
    return learner.select(rng)


def learner_update(learner: UcbLearner, channel: int, reward: int) -> UcbLearner:
    learner.update(channel, reward)
    return learner


class StrategyState:
    """Per-device composition of a first-stage learner and a retransmission mechanism."""

    __slots__ = ("kind", "n_channels", "first_stage", "retrans_single",
                 "retrans_per_channel", "delay_threshold", "freeze_channel")

    def __init__(self, kind: Strategy, n_channels: int, alpha: float = 0.5,
                 delay_threshold: int = 0, freeze_channel: bool = False):
        self.kind = kind
        self.n_channels = n_channels
        self.delay_threshold = delay_threshold
        self.freeze_channel = freeze_channel and kind is Strategy.ONLY_UCB
        self.first_stage: Optional[UcbLearner] = None
        self.retrans_single: Optional[UcbLearner] = None
        self.retrans_per_channel: Optional[List[UcbLearner]] = None
        if kind is not Strategy.NO_LEARNING:
            self.first_stage = UcbLearner(n_channels, alpha)
        if kind in (Strategy.UCB_RETRANS, Strategy.DELAYED_UCB_RETRANS):
            self.retrans_single = UcbLearner(n_channels, alpha)
        elif kind is Strategy.K_UCB_RETRANS:
            self.retrans_per_channel = [UcbLearner(n_channels, alpha) for _ in range(n_channels)]

    def learner_for(self, dev: DeviceState, slot: int) -> Optional[UcbLearner]:
        """The learner consulted for this attempt, or None on a uniform-random branch."""
        kind = self.kind
        if kind is Strategy.NO_LEARNING:
            return None
        if dev.attempt_index == 0 or kind is Strategy.ONLY_UCB:
            return self.first_stage
        if kind is Strategy.UCB_RETRANS:
            return self.retrans_single
        if kind is Strategy.K_UCB_RETRANS:
            if dev.first_channel is None:
                raise ValueError("K UCB retransmission needs the packet's first channel")
            return self.retrans_per_channel[dev.first_channel]
        if kind is Strategy.DELAYED_UCB_RETRANS:
            return None if slot <= self.delay_threshold else self.retrans_single
        return None  # RANDOM_RETRANS

    def select(self, dev: DeviceState, slot: int, rng) -> int:
        return self.choose(dev, slot, rng)[0]

    def choose(self, dev: DeviceState, slot: int, rng) -> Tuple[int, Optional[UcbLearner]]:
        """Channel for this attempt and the learner that must observe its outcome."""
        learner = self.learner_for(dev, slot)
        if self.freeze_channel and dev.attempt_index > 0 and dev.current_channel is not None:
            return dev.current_channel, learner
        if learner is None:
            return int(rng.random() * self.n_channels), None
        return learner.select(rng), learner

    def observe(self, dev: DeviceState, channel: int, slot: int, reward: int) -> None:
        learner = self.learner_for(dev, slot)
        if learner is not None:
            learner.update(channel, reward)


def strategy_select(state: StrategyState, dev: DeviceState, slot: int, rng) -> int:
    return state.select(dev, slot, rng)


def strategy_observe(state: StrategyState, dev: DeviceState, channel: int, slot: int,
                     reward: int) -> StrategyState:
    state.observe(dev, channel, slot, reward)
    return state
