"""Memoryless Monte Carlo block discovery with simulated time.

Every mined block is attributed to the selfish pool with probability alpha
and to the honest network otherwise; inter-block intervals are exponential
(drawn by inverse transform so the compiled kernel can reproduce the stream
bit for bit from the same PCG64 state).  Timestamps are honest: a block is
stamped at its true mining time and the stamp never changes on publication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import HONEST, SELFISH

MEAN_BLOCK_INTERVAL_SECONDS = 600.0


@dataclass
class MiningConfig:
    alpha: float
    gamma: float = 0.0
    blocks_per_run: int = 1000
    seed: int = 0
    mean_block_interval: float = MEAN_BLOCK_INTERVAL_SECONDS

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must be in [0, 0.5], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.blocks_per_run < 1:
            raise ValueError("blocks_per_run must be positive")
        if self.mean_block_interval <= 0.0:
            raise ValueError("mean block interval must be positive")


@dataclass(frozen=True)
class MiningEvent:
    block_index: int
    miner: int
    time: float


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator; the single randomness source of a run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class MiningEngine:
    """Produces the seeded stream of mining events for one run."""

    def __init__(self, config: MiningConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.rng = rng if rng is not None else make_rng(config.seed)
        self.clock = 0.0
        self.next_index = 0

    def next_event(self) -> MiningEvent:
        if self.next_index >= self.config.blocks_per_run:
            raise RuntimeError("run finished")
        miner = SELFISH if self.rng.random() < self.config.alpha else HONEST
        # Inverse-transform exponential; same arithmetic as the kernel.
        interval = -math.log(1.0 - self.rng.random()) * self.config.mean_block_interval
        self.clock += interval
        event = MiningEvent(self.next_index, miner, self.clock)
        self.next_index += 1
        return event

    def __iter__(self):
        while self.next_index < self.config.blocks_per_run:
            yield self.next_event()


MINE_ON_HONEST_TIP = 0
MINE_ON_SELFISH_TIP = 1


def honest_tie_split(rng: np.random.Generator, gamma: float) -> int:
    """Route the next honest block during a baseline tie.

    Returns MINE_ON_SELFISH_TIP with probability gamma.  Uniform
    tie-breaking runs call this with gamma forced to 0.5.
    """
    return MINE_ON_SELFISH_TIP if rng.random() < gamma else MINE_ON_HONEST_TIP
