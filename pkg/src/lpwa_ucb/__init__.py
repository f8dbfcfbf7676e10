"""UCB channel selection with retransmission heuristics for slotted-ALOHA LPWA networks."""
from .model import ConfigError, ScenarioConfig, Strategy, validate_config
from .engine import ReplicationResult, run_replication

__all__ = ["ConfigError", "ReplicationResult", "ScenarioConfig", "Strategy",
           "run_replication", "validate_config"]
__version__ = "0.1.0"
