"""Defense-side controller: windows, reinforcement signals, live (K, Z).

The controller consumes fork-resolution outcomes tallied by the simulation
loop, closes time windows (every ``window_taus`` tau events), feeds the
learning automata and publishes the updated safe parameters.  It also keeps
the per-window trace consumed by the figures tooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import automata
from .automata import LinearRewardPenalty, VdhlaAutomaton


class Policy(Enum):
    NONE = "none"          # longest chain, first-seen ties, gamma racing
    UNIFORM = "uniform"    # longest chain, uniform ties (effective gamma 0.5)
    SDTLA = "sdtla"
    WVBM = "wvbm"

    @property
    def defended(self) -> bool:
        return self in (Policy.SDTLA, Policy.WVBM)


@dataclass
class DefenseConfig:
    policy: Policy = Policy.NONE
    tau_blocks: int = 5
    window_taus: int = 12
    k_min: int = 1
    k_max: int = 3
    z_min: int = 3
    z_max: int = 24
    k_initial: int = 1
    z_initial: int = 6
    fixed_nrc: int = 6
    reward_step: float = 0.1
    penalty_step: float = 0.1
    reset_period_windows: int = 10
    sdtla_inclusive_k: bool = False
    # "vdhla" is the depth automaton the paper's defenses rely on; "lrp" is
    # the documented linear reward-penalty scheme.
    automaton: str = "vdhla"
    initial_depth: int = 2
    depth_cap: int = 8

    def __post_init__(self):
        if self.automaton not in ("vdhla", "lrp"):
            raise ValueError(f"unknown automaton kind {self.automaton!r}")
        if self.tau_blocks < 1 or self.window_taus < 1:
            raise ValueError("tau and window intervals must be at least 1")
        if not self.k_min <= self.k_initial <= self.k_max:
            raise ValueError("K bounds must contain the initial K")
        if not self.z_min <= self.z_initial <= self.z_max:
            raise ValueError("Z bounds must contain the initial Z")

    @staticmethod
    def for_policy(policy: Policy, **overrides) -> "DefenseConfig":
        """Paper parameterization: Z 3-24/K 1-3 for SDTLA, Z 2-12 for WVBM."""
        defaults = {}
        if policy is Policy.WVBM:
            defaults = {"z_min": 2, "z_max": 12}
        defaults.update(overrides)
        return DefenseConfig(policy=policy, **defaults)


@dataclass
class WindowTracker:
    fork_stale_blocks: int = 0
    weight_decisions: int = 0
    height_decisions: int = 0
    prev_rate_per_k: float = 0.0
    prev_rate_per_z: float = 0.0
    has_prev: bool = False

    def reset_counters(self) -> None:
        self.fork_stale_blocks = 0
        self.weight_decisions = 0
        self.height_decisions = 0


@dataclass
class WindowRecord:
    """One row of the per-window defense trace."""

    window_index: int
    k: int | None
    z: int
    rate_per_k: float | None
    rate_per_z: float
    beta1: float | None
    beta2: float | None
    beta_k: int | None
    beta_z: int | None
    action_k: str | None
    action_z: str | None
    weight_decisions: int
    height_decisions: int
    fork_stale_blocks: int


class DefenseController:
    """Safe-parameter state machine for one defended run."""

    def __init__(self, config: DefenseConfig):
        if not config.policy.defended:
            raise ValueError("controller requires a defended policy")
        self.config = config
        self.k = config.k_initial
        self.z = config.z_initial
        if config.automaton == "lrp":
            self.la_k = LinearRewardPenalty(3, config.reward_step, config.penalty_step)
            self.la_z = LinearRewardPenalty(3, config.reward_step, config.penalty_step)
        else:
            self.la_k = VdhlaAutomaton(3, config.initial_depth, config.depth_cap)
            self.la_z = VdhlaAutomaton(3, config.initial_depth, config.depth_cap)
        self.tracker = WindowTracker()
        self.window_index = 0
        self.windows_since_reset = 0
        self.trace: list[WindowRecord] = []
        # Run totals, kept separately from the resettable window counters.
        self.total_weight_decisions = 0
        self.total_height_decisions = 0
        self.total_fork_stale = 0

    @property
    def uses_k(self) -> bool:
        return self.config.policy is Policy.SDTLA

    def current_nrc(self) -> int:
        return self.z

    def tally_decision(self, weight_criterion: bool) -> None:
        if weight_criterion:
            self.tracker.weight_decisions += 1
            self.total_weight_decisions += 1
        else:
            self.tracker.height_decisions += 1
            self.total_height_decisions += 1

    def tally_stale(self, count: int) -> None:
        """Net stale-block adjustment; negative on a re-org that revives blocks."""
        self.tracker.fork_stale_blocks += count
        self.total_fork_stale += count

    def on_time_window(self, rng) -> None:
        """Close the current window: rates, signals, automata, safe parameters."""
        cfg = self.config
        stale = max(self.tracker.fork_stale_blocks, 0)
        rate_z_new = automata.stale_rate_per_z(stale, self.z)
        rate_k_new = automata.stale_rate_per_k(stale, self.k) if self.uses_k else 0.0

        beta1 = beta2 = None
        beta_k = beta_z = None
        if self.tracker.has_prev:
            beta_z = automata.ds_reinforcement(self.tracker.prev_rate_per_z, rate_z_new)
            self.la_z.update(beta_z)
            if self.uses_k:
                decisions = self.tracker.weight_decisions + self.tracker.height_decisions
                beta1 = self.tracker.weight_decisions / decisions if decisions else 0.0
                rate_sum = rate_k_new + self.tracker.prev_rate_per_k
                beta2 = self.tracker.prev_rate_per_k / rate_sum if rate_sum > 0.0 else 0.0
                beta_k = automata.sm_reinforcement(
                    self.tracker.weight_decisions,
                    self.tracker.height_decisions,
                    self.tracker.prev_rate_per_k,
                    rate_k_new,
                )
                self.la_k.update(beta_k)

        action_k = None
        if self.uses_k:
            self.k, act = automata.update_sm_safe_parameter(
                self.k, cfg.k_min, cfg.k_max, self.la_k, rng
            )
            action_k = automata.SM_ACTION_NAMES[act]
        sbcr_value = automata.sbcr(rate_z_new, self.tracker.prev_rate_per_z)
        self.z, act = automata.update_ds_safe_parameter(
            self.z, cfg.z_min, cfg.z_max, sbcr_value, self.la_z, rng
        )
        action_z = automata.DS_ACTION_NAMES[act]

        self.trace.append(
            WindowRecord(
                window_index=self.window_index,
                k=self.k if self.uses_k else None,
                z=self.z,
                rate_per_k=rate_k_new if self.uses_k else None,
                rate_per_z=rate_z_new,
                beta1=beta1,
                beta2=beta2,
                beta_k=beta_k,
                beta_z=beta_z,
                action_k=action_k,
                action_z=action_z,
                weight_decisions=self.tracker.weight_decisions,
                height_decisions=self.tracker.height_decisions,
                fork_stale_blocks=self.tracker.fork_stale_blocks,
            )
        )

        self.tracker.prev_rate_per_k = rate_k_new
        self.tracker.prev_rate_per_z = rate_z_new
        self.tracker.has_prev = True
        self.tracker.reset_counters()
        self.window_index += 1
        self.windows_since_reset += 1

        if cfg.reset_period_windows and self.windows_since_reset >= cfg.reset_period_windows:
            self.reset_learning()

    def reset_learning(self) -> None:
        """Periodic anti-lock-in reset: uniform automata, initial parameters.

        Previous rates are cleared too, so the window after a reset seeds
        them afresh instead of comparing against a stale denominator.
        """
        self.la_k.reset()
        self.la_z.reset()
        self.k = self.config.k_initial
        self.z = self.config.z_initial
        self.tracker.has_prev = False
        self.tracker.prev_rate_per_k = 0.0
        self.tracker.prev_rate_per_z = 0.0
        self.windows_since_reset = 0
