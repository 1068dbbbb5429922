import numpy as np
import pytest

from forksim.chain import HONEST, SELFISH
from forksim.mining import (
    MINE_ON_HONEST_TIP,
    MINE_ON_SELFISH_TIP,
    MiningConfig,
    MiningEngine,
    honest_tie_split,
    make_rng,
)


def test_config_validation():
    with pytest.raises(ValueError):
        MiningConfig(alpha=0.6)
    with pytest.raises(ValueError):
        MiningConfig(alpha=-0.1)
    with pytest.raises(ValueError):
        MiningConfig(alpha=0.3, gamma=1.5)
    with pytest.raises(ValueError):
        MiningConfig(alpha=0.3, blocks_per_run=0)
    MiningConfig(alpha=0.5)  # inclusive top of the sweep grid


def test_alpha_zero_all_honest():
    engine = MiningEngine(MiningConfig(alpha=0.0, blocks_per_run=500, seed=1))
    assert all(ev.miner == HONEST for ev in engine)


def test_selfish_fraction():
    engine = MiningEngine(MiningConfig(alpha=0.45, blocks_per_run=100_000, seed=42))
    selfish = sum(ev.miner == SELFISH for ev in engine)
    assert abs(selfish / 100_000 - 0.45) < 0.005


def test_determinism_same_seed():
    a = [(e.miner, e.time) for e in MiningEngine(MiningConfig(alpha=0.3, blocks_per_run=2000, seed=42))]
    b = [(e.miner, e.time) for e in MiningEngine(MiningConfig(alpha=0.3, blocks_per_run=2000, seed=42))]
    assert a == b
    c = [(e.miner, e.time) for e in MiningEngine(MiningConfig(alpha=0.3, blocks_per_run=2000, seed=43))]
    assert a != c


def test_exponential_interval_mean():
    engine = MiningEngine(MiningConfig(alpha=0.3, blocks_per_run=100_000, seed=7))
    times = [ev.time for ev in engine]
    intervals = np.diff([0.0] + times)
    assert abs(intervals.mean() - 600.0) / 600.0 < 0.02


def test_timestamps_strictly_increase():
    engine = MiningEngine(MiningConfig(alpha=0.4, blocks_per_run=5000, seed=3))
    last = -1.0
    for ev in engine:
        assert ev.time > last
        last = ev.time


def test_engine_refuses_extra_events():
    engine = MiningEngine(MiningConfig(alpha=0.3, blocks_per_run=2, seed=0))
    engine.next_event()
    engine.next_event()
    with pytest.raises(RuntimeError):
        engine.next_event()


def test_tie_split_degenerate():
    rng = make_rng(1)
    assert all(honest_tie_split(rng, 0.0) == MINE_ON_HONEST_TIP for _ in range(200))
    assert all(honest_tie_split(rng, 1.0) == MINE_ON_SELFISH_TIP for _ in range(200))


def test_tie_split_frequency():
    rng = make_rng(5)
    hits = sum(honest_tie_split(rng, 0.5) == MINE_ON_SELFISH_TIP for _ in range(100_000))
    assert abs(hits / 100_000 - 0.5) < 0.01
