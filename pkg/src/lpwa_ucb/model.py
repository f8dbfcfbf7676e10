"""Domain types shared by the simulator, the learners and the CLI."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Optional, Tuple

DEFAULT_DELAY = 20_000


class ConfigError(ValueError):
    """A scenario violates one of its invariants."""


class Strategy(enum.Enum):
    """Channel-selection strategies. Values are the figure legend names."""

    NO_LEARNING = "no UCB"
    ONLY_UCB = "Only UCB"
    RANDOM_RETRANS = "Random"
    UCB_RETRANS = "UCB"
    K_UCB_RETRANS = "K UCB"
    DELAYED_UCB_RETRANS = "Delayed UCB"

    @property
    def two_stage(self) -> bool:
        return self not in (Strategy.NO_LEARNING, Strategy.ONLY_UCB)

    @property
    def slug(self) -> str:
        return self.value.lower().replace(" ", "_")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Accept the legend name, the member name or the CamelCase name."""
        key = text.strip().replace("-", "").replace("_", "").replace(" ", "").lower()
        for member in cls:
            aliases = {
                member.value.replace(" ", "").lower(),
                member.name.replace("_", "").lower(),
                member.slug.replace("_", ""),
            }
            if key in aliases:
                return member
        if key in ("nolearning", "noucb", "none"):
            return cls.NO_LEARNING
        raise ConfigError(f"unknown strategy {text!r}")


ALL_STRATEGIES: Tuple[Strategy, ...] = tuple(Strategy)


@dataclass(frozen=True)
class ScenarioConfig:
    n_devices: int
    n_channels: int
    tx_prob: float
    max_attempts: int
    backoff_window: int
    occupancy: Tuple[float, ...]
    strategy: Strategy = Strategy.ONLY_UCB
    delay_threshold: Optional[int] = None
    horizon: int = 200_000
    replications: int = 10
    master_seed: int = 0
    alpha: float = 0.5
    # Only UCB: keep the first-attempt channel for every retransmission.
    freeze_channel: bool = False

    def __post_init__(self):
        object.__setattr__(self, "occupancy", tuple(float(o) for o in self.occupancy))

    @property
    def delay(self) -> int:
        """Delay threshold in slots, defaulting to 20000 capped at the horizon."""
        if self.delay_threshold is None:
            return min(DEFAULT_DELAY, self.horizon)
        return self.delay_threshold

    def replace(self, **changes) -> "ScenarioConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ScenarioConfig(**values)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` unchanged, or raise ConfigError naming the first broken invariant."""
    for name in ("n_devices", "n_channels", "max_attempts", "backoff_window", "horizon", "replications"):
        value = getattr(cfg, name)
        if not _is_int(value) or value < 1:
            raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
    if not (0.0 < cfg.tx_prob <= 1.0):
        raise ConfigError(f"tx_prob must lie in (0, 1], got {cfg.tx_prob!r}")
    if len(cfg.occupancy) != cfg.n_channels:
        raise ConfigError(
            f"occupancy length {len(cfg.occupancy)} != n_channels {cfg.n_channels}"
        )
    for k, occ in enumerate(cfg.occupancy):
        if not (0.0 <= occ < 1.0):
            raise ConfigError(f"occupancy[{k}] must lie in [0, 1), got {occ!r}")
    if not isinstance(cfg.strategy, Strategy):
        raise ConfigError(f"strategy must be a Strategy, got {cfg.strategy!r}")
    if cfg.delay_threshold is not None:
        if not _is_int(cfg.delay_threshold) or cfg.delay_threshold < 0:
            raise ConfigError(f"delay_threshold must be a non-negative integer, got {cfg.delay_threshold!r}")
        if cfg.delay_threshold > cfg.horizon:
            raise ConfigError(
                f"delay_threshold {cfg.delay_threshold} exceeds horizon {cfg.horizon}"
            )
    if not _is_int(cfg.master_seed) or not (0 <= cfg.master_seed < 2**64):
        raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {cfg.master_seed!r}")
    if not (cfg.alpha > 0) or math.isinf(cfg.alpha):
        raise ConfigError(f"alpha must be a positive real, got {cfg.alpha!r}")
    return cfg


class Phase(enum.Enum):
    IDLE = 0
    BACKOFF = 1
    READY = 2


@dataclass(eq=False)
class DeviceState:
    """Markov-chain position of one dynamic device.

    The engine is event driven, so a device in back-off stores the slot at
    which it becomes ready instead of a counter; ``remaining(slot)`` recovers
    the counter.
    """

    phase: Phase = Phase.IDLE
    attempt_index: int = 0
    current_channel: Optional[int] = None
    first_channel: Optional[int] = None
    wake_slot: int = 0

    def remaining(self, slot: int) -> int:
        return max(self.wake_slot - slot, 0) if self.phase is Phase.BACKOFF else 0


@dataclass(frozen=True)
class AttemptRecord:
    slot: int
    device: int
    channel: int
    attempt_index: int
    success: bool
