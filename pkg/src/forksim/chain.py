"""Block, chain and fork bookkeeping shared by every policy and strategy.

The model is block-level: a block is an opaque counter with a height, a
mining timestamp and a miner tag.  No hashes, no transactions.  Genesis is
height 0 with timestamp 0 and id 0 and is shared by every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

HONEST = 0
SELFISH = 1

GENESIS_ID = 0
GENESIS_HEIGHT = 0
GENESIS_TIMESTAMP = 0.0


@dataclass(frozen=True)
class Block:
    """One mined block.  ``miner`` is HONEST or SELFISH."""

    id: int
    height: int
    timestamp: float
    miner: int
    parent_id: int


@dataclass
class ForkSet:
    """Competing chains descending from the last common block.

    ``chains[i]`` is the sequence of blocks of chain ``i`` ascending by
    height from ``fork_point_height + 1``.  Every chain's first block shares
    the same parent (the fork-point block).
    """

    fork_point_height: int
    chains: list[list[Block]] = field(default_factory=list)

    def validate(self) -> None:
        if not self.chains:
            raise ValueError("a fork needs at least one chain")
        parents = set()
        seen: set[int] = set()
        for chain in self.chains:
            for offset, block in enumerate(chain):
                if block.height != self.fork_point_height + 1 + offset:
                    raise ValueError("chain heights must ascend from the fork point")
                if block.id in seen:
                    raise ValueError("chains above the fork point must not share blocks")
                seen.add(block.id)
            if chain:
                parents.add(chain[0].parent_id)
        if len(parents) > 1:
            raise ValueError("all chains must descend from the same fork-point block")


@dataclass
class ChainScores:
    """Per-chain scores produced while resolving a fork."""

    lengths: list[int]
    weights: list[float]
    validating_weights: list[int]


def chain_lengths(fork: ForkSet) -> list[int]:
    """Number of blocks of each chain above the fork point."""
    return [len(chain) for chain in fork.chains]


def stale_blocks_on_loss(fork: ForkSet, winner_index: int) -> int:
    """Total blocks on all non-winning chains above the fork point."""
    if not 0 <= winner_index < len(fork.chains):
        raise IndexError(f"winner index {winner_index} out of range")
    return sum(len(chain) for i, chain in enumerate(fork.chains) if i != winner_index)
