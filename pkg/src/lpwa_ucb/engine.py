"""Slot-synchronous slotted-ALOHA simulation of N learning devices over K channels.

Only slots in which some device transmits do any work: an idle device draws
the slot of its next packet from a geometric law (one Bernoulli(p) trial per
idle slot), and a collided device is woken up after its back-off. The slot
loop itself still runs over every slot so the per-slot tallies are exact.
"""
from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .model import AttemptRecord, DeviceState, Phase, ScenarioConfig, validate_config
from .policy import StrategyState

IDLE, BACKOFF, READY = Phase.IDLE, Phase.BACKOFF, Phase.READY


@dataclass
class ReplicationResult:
    attempts: np.ndarray
    successes: np.ndarray
    drops: np.ndarray
    first_attempt_count: int = 0
    first_attempt_collisions: int = 0
    second_attempt_count: int = 0
    second_attempt_collisions: int = 0
    dropped_packets: int = 0
    generated_packets: int = 0
    in_flight: int = 0
    max_packet_attempts: int = 0
    log: Optional[List[AttemptRecord]] = field(default=None, repr=False, compare=False)

    @classmethod
    def empty(cls, horizon: int) -> "ReplicationResult":
        z = lambda: np.zeros(horizon, dtype=np.int64)  # noqa: E731
        return cls(attempts=z(), successes=z(), drops=z())

    @property
    def horizon(self) -> int:
        return len(self.attempts)

    @property
    def delivered_packets(self) -> int:
        return int(self.successes.sum())

    def merge(self, other: "ReplicationResult") -> "ReplicationResult":
        """Pool the tallies of two replications of the same horizon."""
        if self.horizon != other.horizon:
            raise ValueError("cannot merge results with different horizons")
        return ReplicationResult(
            attempts=self.attempts + other.attempts,
            successes=self.successes + other.successes,
            drops=self.drops + other.drops,
            first_attempt_count=self.first_attempt_count + other.first_attempt_count,
            first_attempt_collisions=self.first_attempt_collisions + other.first_attempt_collisions,
            second_attempt_count=self.second_attempt_count + other.second_attempt_count,
            second_attempt_collisions=self.second_attempt_collisions + other.second_attempt_collisions,
            dropped_packets=self.dropped_packets + other.dropped_packets,
            generated_packets=self.generated_packets + other.generated_packets,
            in_flight=self.in_flight + other.in_flight,
            max_packet_attempts=max(self.max_packet_attempts, other.max_packet_attempts),
        )

    def same_tallies(self, other: "ReplicationResult") -> bool:
        return (
            np.array_equal(self.attempts, other.attempts)
            and np.array_equal(self.successes, other.successes)
            and np.array_equal(self.drops, other.drops)
            and self.counters() == other.counters()
        )

    def counters(self) -> Tuple[int, ...]:
        return (
            self.first_attempt_count, self.first_attempt_collisions,
            self.second_attempt_count, self.second_attempt_collisions,
            self.dropped_packets, self.generated_packets, self.in_flight,
            self.max_packet_attempts,
        )


def merge_results(results: Iterable[ReplicationResult]) -> ReplicationResult:
    results = list(results)
    if not results:
        raise ValueError("nothing to merge")
    total = results[0]
    for res in results[1:]:
        total = total.merge(res)
    return total


def replication_streams(master_seed: int, rep_index: int, n_devices: int):
    """Background generator plus one ``random.Random`` per device.

    Every stream is a child of ``SeedSequence(master_seed, spawn_key=(rep_index,))``,
    so a stream depends only on (master_seed, rep_index, device) and never on
    the order in which replications are executed.
    """
    root = np.random.SeedSequence(master_seed, spawn_key=(rep_index,))
    children = root.spawn(n_devices + 1)
    background = np.random.Generator(np.random.PCG64(children[0]))
    devices = [
        random.Random(int.from_bytes(child.generate_state(4).tobytes(), "little"))
        for child in children[1:]
    ]
    return background, devices


def draw_backoff(rng, m: int) -> int:
    """Back-off delay uniform on {0, ..., m-1}."""
    if m < 1:
        raise ValueError(f"back-off window must be >= 1, got {m}")
    return int(rng.random() * m)


def draw_arrival_gap(rng, log_one_minus_p: float) -> int:
    """Number of idle slots until a packet appears, counting the arrival slot (>= 1)."""
    u = 1.0 - rng.random()
    return 1 + int(math.log(u) / log_one_minus_p)


def resolve_slot(transmissions: Sequence[Tuple[int, int]], busy: Sequence[bool]) -> List[bool]:
    """Success flag per transmission: the channel is free and nobody else uses it."""
    load: Dict[int, int] = defaultdict(int)
    for _, ch in transmissions:
        load[ch] += 1
    return [not busy[ch] and load[ch] == 1 for _, ch in transmissions]


class World:
    """Mutable state of one replication."""

    def __init__(self, cfg: ScenarioConfig, rep_index: int = 0, record_attempts: bool = False):
        validate_config(cfg)
        self.cfg = cfg
        self.slot = 0
        n, k = cfg.n_devices, cfg.n_channels
        background, self.rngs = replication_streams(cfg.master_seed, rep_index, n)
        if any(cfg.occupancy):
            occ = np.asarray(cfg.occupancy)
            self.busy = (background.random((cfg.horizon, k)) < occ).tolist()
        else:
            self.busy = None
        self.devices = [DeviceState() for _ in range(n)]
        self.strategies = [
            StrategyState(cfg.strategy, k, cfg.alpha, cfg.delay, cfg.freeze_channel)
            for _ in range(n)
        ]
        self.tallies = ReplicationResult.empty(cfg.horizon)
        if record_attempts:
            self.tallies.log = []
        # p = 1 gives a gap of exactly one slot
        self._log1mp = math.log1p(-cfg.tx_prob) if cfg.tx_prob < 1.0 else -math.inf
        self._schedule: Dict[int, List[int]] = defaultdict(list)
        for d, rng in enumerate(self.rngs):
            self._schedule_arrival(d, draw_arrival_gap(rng, self._log1mp) - 1)

    def _schedule_arrival(self, device: int, slot: int) -> None:
        if slot < self.cfg.horizon:
            self._schedule[slot].append(device)

    def ready_devices(self) -> List[int]:
        return list(self._schedule.get(self.slot, ()))

    def advance_slot(self) -> None:
        cfg = self.cfg
        t = self.slot
        if t >= cfg.horizon:
            raise RuntimeError("simulation horizon reached")
        ready = self._schedule.pop(t, None)
        self.slot = t + 1
        if not ready:
            return
        devices, strategies, rngs = self.devices, self.strategies, self.rngs
        tallies = self.tallies

        chosen = []
        load = [0] * cfg.n_channels
        for d in ready:
            dev = devices[d]
            if dev.phase is IDLE:
                dev.attempt_index = 0
                dev.first_channel = None
                tallies.generated_packets += 1
            dev.phase = READY
            ch, learner = strategies[d].choose(dev, t, rngs[d])
            dev.current_channel = ch
            if dev.attempt_index == 0:
                dev.first_channel = ch
            load[ch] += 1
            chosen.append((ch, learner))

        busy = self.busy[t] if self.busy is not None else None
        n_success = n_drop = 0
        first = first_coll = second = second_coll = 0
        max_attempts, window = cfg.max_attempts, cfg.backoff_window
        horizon, schedule = cfg.horizon, self._schedule
        log = tallies.log
        for d, (ch, learner) in zip(ready, chosen):
            dev = devices[d]
            success = load[ch] == 1 and not (busy is not None and busy[ch])
            if learner is not None:
                learner.update(ch, 1 if success else 0)
            attempt = dev.attempt_index
            if log is not None:
                log.append(AttemptRecord(t, d, ch, attempt, success))
            if attempt == 0:
                first += 1
                first_coll += not success
            elif attempt == 1:
                second += 1
                second_coll += not success
            if success:
                n_success += 1
                self._to_idle(d, dev, t)
            elif attempt + 1 < max_attempts:
                dev.attempt_index = attempt + 1
                dev.phase = BACKOFF
                wake = dev.wake_slot = t + 1 + draw_backoff(rngs[d], window)
                if wake < horizon:
                    schedule[wake].append(d)
            else:
                n_drop += 1
                self._to_idle(d, dev, t)
            if attempt >= tallies.max_packet_attempts:
                tallies.max_packet_attempts = attempt + 1

        tallies.attempts[t] = len(ready)
        tallies.successes[t] = n_success
        tallies.drops[t] = n_drop
        tallies.dropped_packets += n_drop
        tallies.first_attempt_count += first
        tallies.first_attempt_collisions += first_coll
        tallies.second_attempt_count += second
        tallies.second_attempt_collisions += second_coll

    def _to_idle(self, d: int, dev: DeviceState, t: int) -> None:
        dev.phase = IDLE
        dev.attempt_index = 0
        dev.first_channel = None
        self._schedule_arrival(d, t + draw_arrival_gap(self.rngs[d], self._log1mp))

    def finish(self) -> ReplicationResult:
        self.tallies.in_flight = sum(dev.phase is not Phase.IDLE for dev in self.devices)
        return self.tallies


def run_replication(cfg: ScenarioConfig, rep_index: int = 0,
                    record_attempts: bool = False) -> ReplicationResult:
    """Run slots 0..T-1 from an all-idle network; deterministic in (cfg, rep_index)."""
    world = World(cfg, rep_index, record_attempts)
    for _ in range(cfg.horizon):
        world.advance_slot()
    return world.finish()
