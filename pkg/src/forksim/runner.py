"""Single-run simulation driver (pure-Python reference implementation).

One run wires together the mining engine, the attacker state machine and the
fork-resolving policy (plus the defense controller for SDTLA/WVBM) and plays
``blocks`` mining events.  The compiled kernel in ``_speedups`` reimplements
exactly this loop; both consume the same PCG64 stream with the same draw
order, so their outputs are bit-identical (enforced by the parity tests).

Fork mechanics for defended policies:

* the attacker's publications land on the fork structure as they happen;
* a publication whose visible branch strictly overtakes the public head is
  resolved immediately (the network must react), and ties or shorter
  branches wait for the next decision point (tau);
* every tau event resolves whatever visible fork is live, one decision per
  resolution, and losing blocks are stale-counted exactly once (a later
  winning re-org un-counts revived blocks so conservation holds).
"""

from __future__ import annotations

from dataclasses import dataclass

from .attacker import Action, AttackerState, Strategy
from .chain import HONEST, SELFISH, Block, ForkSet
from .defense import DefenseConfig, DefenseController, Policy, WindowRecord
from .frp import (
    Criterion,
    select_chain_sdtla,
    select_chain_wvbm,
)
from .mining import (
    MINE_ON_SELFISH_TIP,
    MiningConfig,
    MiningEngine,
    honest_tie_split,
    make_rng,
)


@dataclass
class RunConfig:
    policy: Policy
    alpha: float
    gamma: float = 0.0
    blocks: int = 1000
    seed: int = 0
    strategy: Strategy | None = None  # None selects the per-policy default
    defense: DefenseConfig | None = None
    mean_block_interval: float = 600.0
    modified_inclusive: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must be in [0, 0.5], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.blocks < 1:
            raise ValueError("blocks must be positive")

    def resolved_strategy(self) -> Strategy:
        if self.strategy is not None:
            return self.strategy
        return Strategy.MODIFIED_SM1 if self.policy.defended else Strategy.COMBINED_SM1

    def resolved_defense(self) -> DefenseConfig:
        if self.defense is not None:
            return self.defense
        return DefenseConfig.for_policy(self.policy)


@dataclass
class RunResult:
    policy: Policy
    alpha: float
    gamma: float
    seed: int
    blocks: int
    selfish_wins: int
    honest_wins: int
    ds_count: int
    sum_z: int
    sum_k: int | None
    weight_decisions: int
    height_decisions: int
    fork_stale_blocks: int
    hidden_at_end: int
    windows: list[WindowRecord]

    @property
    def main_length(self) -> int:
        return self.selfish_wins + self.honest_wins

    @property
    def relative_revenue_pct(self) -> float:
        total = self.main_length
        return 100.0 * self.selfish_wins / total if total else 0.0

    @property
    def avg_z(self) -> float:
        return self.sum_z / self.blocks

    @property
    def avg_k(self) -> float | None:
        return self.sum_k / self.blocks if self.sum_k is not None else None


class _Race:
    """Attacker branch bookkeeping above its fork base."""

    __slots__ = ("base", "ts", "ids", "published", "stale_counted")

    def __init__(self, base: int):
        self.base = base
        self.ts: list[float] = []
        self.ids: list[int] = []
        self.published = 0
        self.stale_counted = 0


def _run_defended(config: RunConfig) -> RunResult:
    defense_cfg = config.resolved_defense()
    rng = make_rng(config.seed)
    engine = MiningEngine(
        MiningConfig(
            alpha=config.alpha,
            gamma=config.gamma,
            blocks_per_run=config.blocks,
            seed=config.seed,
            mean_block_interval=config.mean_block_interval,
        ),
        rng,
    )
    controller = DefenseController(defense_cfg)
    attacker = AttackerState(
        strategy=config.resolved_strategy(),
        known_k=controller.k if defense_cfg.policy is Policy.SDTLA else None,
        modified_inclusive=config.modified_inclusive,
    )

    main_ts: list[float] = []
    main_miner: list[int] = []
    main_ids: list[int] = []
    race: _Race | None = None
    # Abandoned published branches (always a single tie block) awaiting the
    # next tau to be formally resolved and stale-counted.
    pendings: list[tuple[int, tuple[float, ...], tuple[int, ...]]] = []
    sum_z = 0
    sum_k = 0

    def build_fork(base: int, branch_ts, branch_ids, published: int) -> ForkSet:
        parent = main_ids[base - 1] if base > 0 else 0
        public_chain = [
            Block(main_ids[i], i + 1, main_ts[i], main_miner[i],
                  main_ids[i - 1] if i > base else parent)
            for i in range(base, len(main_ts))
        ]
        att_chain = [
            Block(branch_ids[i], base + 1 + i, branch_ts[i], SELFISH,
                  branch_ids[i - 1] if i > 0 else parent)
            for i in range(published)
        ]
        return ForkSet(base, [public_chain, att_chain])

    def select(fork: ForkSet):
        if defense_cfg.policy is Policy.SDTLA:
            return select_chain_sdtla(fork, controller.k, defense_cfg.sdtla_inclusive_k)
        return select_chain_wvbm(fork)

    def wvbm_release_wins() -> bool:
        """Would releasing the whole private branch win the fork right now?

        The K-less adaptive attacker releases exactly when the public length
        rule hands it the fork; with no public competitor that is immediate.
        """
        assert race is not None
        if len(main_ts) == race.base:
            return True
        decision = select(build_fork(race.base, race.ts, race.ids, len(race.ts)))
        return decision.winner_index == 1

    def resolve_race() -> None:
        """Run the FRP over the visible fork of the active race."""
        nonlocal race
        assert race is not None and race.published > 0
        fork = build_fork(race.base, race.ts, race.ids, race.published)
        decision = select(fork)
        controller.tally_decision(decision.criterion is Criterion.WEIGHT)
        if decision.winner_index == 1:
            controller.tally_stale(len(main_ts) - race.base)
            controller.tally_stale(-race.stale_counted)
            del main_ts[race.base:]
            del main_miner[race.base:]
            del main_ids[race.base:]
            main_ts.extend(race.ts[: race.published])
            main_miner.extend([SELFISH] * race.published)
            main_ids.extend(race.ids[: race.published])
            hidden_ts = race.ts[race.published:]
            hidden_ids = race.ids[race.published:]
            attacker.rebase_after_win()
            if hidden_ts:
                new_race = _Race(len(main_ts))
                new_race.ts = hidden_ts
                new_race.ids = hidden_ids
                race = new_race
            else:
                race = None
        else:
            controller.tally_stale(race.published - race.stale_counted)
            race.stale_counted = race.published
            if attacker.hidden == 0:
                attacker.rebase_after_adopt()
                race = None

    def handle_publication() -> None:
        """Apply the attacker's latest broadcast to the network."""
        nonlocal race
        assert race is not None
        race.published = attacker.published
        pub_len = len(main_ts) - race.base
        if pub_len == 0:
            # No competing branch: the prefix simply extends the main chain.
            main_ts.extend(race.ts[: race.published])
            main_miner.extend([SELFISH] * race.published)
            main_ids.extend(race.ids[: race.published])
            hidden_ts = race.ts[race.published:]
            hidden_ids = race.ids[race.published:]
            attacker.rebase_after_win()
            if hidden_ts:
                new_race = _Race(len(main_ts))
                new_race.ts = hidden_ts
                new_race.ids = hidden_ids
                race = new_race
            else:
                race = None
        elif race.published > pub_len:
            resolve_race()
        # Equal or shorter visible branches wait for the next tau.

    def resolve_pendings() -> None:
        for base, branch_ts, branch_ids in pendings:
            fork = build_fork(base, branch_ts, branch_ids, len(branch_ts))
            decision = select(fork)
            controller.tally_decision(decision.criterion is Criterion.WEIGHT)
            # The abandoned branch is one stale-counted-never tie block and
            # always loses to the longer, newer main segment.
            assert decision.winner_index == 0
            controller.tally_stale(len(branch_ts))
        pendings.clear()

    def on_tau() -> None:
        resolve_pendings()
        if race is not None and race.published > 0:
            resolve_race()

    for event in engine:
        sum_z += controller.z
        sum_k += controller.k
        index = event.block_index + 1
        block_id = index
        if event.miner == SELFISH:
            if race is None:
                race = _Race(len(main_ts))
            race.ts.append(event.time)
            race.ids.append(block_id)
            hint = False
            if (
                attacker.strategy is Strategy.MODIFIED_SM1
                and attacker.known_k is None
                and defense_cfg.policy is Policy.WVBM
            ):
                hint = wvbm_release_wins()
            action = attacker.on_selfish_block(release_hint=hint)
            if action is Action.PUBLISH_ALL:
                handle_publication()
        else:
            main_ts.append(event.time)
            main_miner.append(HONEST)
            main_ids.append(block_id)
            if race is not None:
                action = attacker.on_honest_block(controller.current_nrc())
                if action is Action.ADOPT:
                    if race.published > 0:
                        pendings.append(
                            (race.base, tuple(race.ts[: race.published]),
                             tuple(race.ids[: race.published]))
                        )
                    attacker.rebase_after_adopt()
                    race = None
                elif action is Action.PUBLISH_ALL:
                    handle_publication()
                elif action is Action.PUBLISH_ONE:
                    race.published = attacker.published
        if attacker.known_k is not None:
            attacker.known_k = controller.k
        if index % defense_cfg.tau_blocks == 0:
            on_tau()
            if (index // defense_cfg.tau_blocks) % defense_cfg.window_taus == 0:
                controller.on_time_window(rng)
                if attacker.known_k is not None:
                    attacker.known_k = controller.k

    # Settle whatever is still visible; hidden blocks stay hidden.
    resolve_pendings()
    if race is not None and race.published > 0:
        resolve_race()

    selfish_wins = sum(main_miner)
    return RunResult(
        policy=config.policy,
        alpha=config.alpha,
        gamma=config.gamma,
        seed=config.seed,
        blocks=config.blocks,
        selfish_wins=selfish_wins,
        honest_wins=len(main_miner) - selfish_wins,
        ds_count=attacker.ds_count,
        sum_z=sum_z,
        sum_k=sum_k if defense_cfg.policy is Policy.SDTLA else None,
        weight_decisions=controller.total_weight_decisions,
        height_decisions=controller.total_height_decisions,
        fork_stale_blocks=controller.total_fork_stale,
        hidden_at_end=attacker.hidden,
        windows=controller.trace,
    )


def _run_baseline(config: RunConfig) -> RunResult:
    """Longest-chain run (first-seen or uniform ties) with gamma racing."""
    defense_cfg = config.resolved_defense()
    rng = make_rng(config.seed)
    engine = MiningEngine(
        MiningConfig(
            alpha=config.alpha,
            gamma=config.gamma,
            blocks_per_run=config.blocks,
            seed=config.seed,
            mean_block_interval=config.mean_block_interval,
        ),
        rng,
    )
    attacker = AttackerState(
        strategy=config.resolved_strategy(),
        known_k=None,
        modified_inclusive=config.modified_inclusive,
    )
    gamma_eff = 0.5 if config.policy is Policy.UNIFORM else config.gamma
    nrc = defense_cfg.fixed_nrc

    main_ts: list[float] = []
    main_miner: list[int] = []
    race: _Race | None = None
    tie_pending = False
    stale_total = 0
    height_decisions = 0
    sum_z = 0

    def settle_attacker_win() -> None:
        """Attacker branch becomes the main chain above the fork base."""
        nonlocal race, tie_pending, stale_total, height_decisions
        assert race is not None
        stale_total += len(main_ts) - race.base
        del main_ts[race.base:]
        del main_miner[race.base:]
        main_ts.extend(race.ts)
        main_miner.extend([SELFISH] * len(race.ts))
        height_decisions += 1
        attacker.rebase_after_win()
        race = None
        tie_pending = False

    def settle_attacker_loss() -> None:
        """Published attacker blocks go stale; honest branch stands."""
        nonlocal race, tie_pending, stale_total, height_decisions
        assert race is not None
        stale_total += race.published
        height_decisions += 1
        attacker.rebase_after_adopt()
        race = None
        tie_pending = False

    for event in engine:
        sum_z += nrc
        if event.miner == SELFISH:
            if race is None:
                race = _Race(len(main_ts))
            race.ts.append(event.time)
            action = attacker.on_selfish_block()
            if action is Action.PUBLISH_ALL:
                # Tie won by the pool's own block: branch of two overtakes.
                settle_attacker_win()
        else:
            if tie_pending:
                assert race is not None
                if honest_tie_split(rng, gamma_eff) == MINE_ON_SELFISH_TIP:
                    # Honest hash extends the attacker tip; the old honest
                    # block goes stale and the race ends in the pool's favor.
                    stale_total += len(main_ts) - race.base
                    del main_ts[race.base:]
                    del main_miner[race.base:]
                    main_ts.extend(race.ts)
                    main_miner.extend([SELFISH] * len(race.ts))
                    main_ts.append(event.time)
                    main_miner.append(HONEST)
                    height_decisions += 1
                    attacker.rebase_after_win()
                    race = None
                    tie_pending = False
                else:
                    main_ts.append(event.time)
                    main_miner.append(HONEST)
                    attacker.on_honest_block(nrc)  # lead 0: adopt
                    settle_attacker_loss()
            else:
                main_ts.append(event.time)
                main_miner.append(HONEST)
                if race is not None:
                    pre_lead = attacker.lead
                    action = attacker.on_honest_block(nrc)
                    if action is Action.PUBLISH_ALL:
                        if pre_lead == 1:
                            race.published = attacker.published
                            tie_pending = True
                        else:
                            settle_attacker_win()
                    elif action is Action.PUBLISH_ONE:
                        race.published = attacker.published
                    elif action is Action.ADOPT:
                        settle_attacker_loss()

    hidden_at_end = attacker.hidden
    if race is not None and race.published > 0:
        # Unfinished race at termination: the incumbent honest chain stands
        # and the published attacker blocks go stale; hidden ones stay hidden.
        settle_attacker_loss()

    selfish_wins = sum(main_miner)
    return RunResult(
        policy=config.policy,
        alpha=config.alpha,
        gamma=config.gamma,
        seed=config.seed,
        blocks=config.blocks,
        selfish_wins=selfish_wins,
        honest_wins=len(main_miner) - selfish_wins,
        ds_count=attacker.ds_count,
        sum_z=sum_z,
        sum_k=None,
        weight_decisions=0,
        height_decisions=height_decisions,
        fork_stale_blocks=stale_total,
        hidden_at_end=hidden_at_end,
        windows=[],
    )


def simulate_run_python(config: RunConfig) -> RunResult:
    """Pure-Python reference simulation of one seeded run."""
    if config.policy.defended:
        return _run_defended(config)
    return _run_baseline(config)
