"""forksim: proof-of-work block-race simulator with adaptive defenses."""

__version__ = "0.1.0"

from .attacker import AttackerState, Strategy
from .chain import Block, ChainScores, ForkSet
from .defense import DefenseConfig, DefenseController, Policy
from .mining import MiningConfig, MiningEngine
from .runner import RunConfig, RunResult

__all__ = [
    "AttackerState",
    "Block",
    "ChainScores",
    "DefenseConfig",
    "DefenseController",
    "ForkSet",
    "MiningConfig",
    "MiningEngine",
    "Policy",
    "RunConfig",
    "RunResult",
    "Strategy",
    "__version__",
]
