"""Shared test helpers: fork construction and random fork generation."""

from __future__ import annotations

from forksim.chain import HONEST, SELFISH, Block, ForkSet

_next_id = [1000]


def make_fork(fork_point_height: int, *chains_ts: list[float], miners=None) -> ForkSet:
    """Build a ForkSet from per-chain timestamp lists."""
    fork_parent = 99
    chains = []
    for ci, ts_list in enumerate(chains_ts):
        chain = []
        parent = fork_parent
        for offset, ts in enumerate(ts_list):
            _next_id[0] += 1
            miner = miners[ci] if miners else (SELFISH if ci == 1 else HONEST)
            block = Block(
                id=_next_id[0],
                height=fork_point_height + 1 + offset,
                timestamp=ts,
                miner=miner,
                parent_id=parent,
            )
            parent = block.id
            chain.append(block)
        chains.append(chain)
    fork = ForkSet(fork_point_height, chains)
    fork.validate()
    return fork


def random_fork(rng, max_chains: int = 4, max_len: int = 12) -> ForkSet:
    """Random fork with distinct timestamps ascending along every chain."""
    n = int(rng.integers(1, max_chains + 1))
    lengths = [int(rng.integers(1, max_len + 1)) for _ in range(n)]
    total = sum(lengths)
    stamps = rng.choice(10 * total, size=total, replace=False).astype(float)
    stamps += rng.random(total)  # break integer collisions across runs
    chains_ts = []
    pos = 0
    for ln in lengths:
        chunk = sorted(stamps[pos : pos + ln])
        pos += ln
        chains_ts.append(list(chunk))
    return make_fork(int(rng.integers(0, 50)), *chains_ts)
