"""Learning automata and the reinforcement-signal math driving K and Z.

The defense publishes two safe parameters: K (length gap below which weight
decides a fork) and Z (the merchant confirmation count).  Each is steered by
a finite-action automaton that receives a binary reward/penalty signal
computed from the fork activity of the closing time window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

GROW, STOP, SHRINK = 0, 1, 2
SM_ACTION_NAMES = ("grow", "stop", "shrink")

INCREASE, NO_CHANGE, DECREASE = 0, 1, 2
DS_ACTION_NAMES = ("increase", "nochange", "decrease")

REWARD = 1
PENALTY = 0


def stale_rate_per_z(fork_stale_blocks_in_window: int, current_z: int) -> float:
    """Fork stale blocks of the window per unit of the live Z."""
    if current_z < 1:
        raise ValueError("Z must be at least 1")
    return fork_stale_blocks_in_window / current_z


def stale_rate_per_k(fork_stale_blocks_in_window: int, current_k: int) -> float:
    """Fork stale blocks of the window per unit of the live K."""
    if current_k < 1:
        raise ValueError("K must be at least 1")
    return fork_stale_blocks_in_window / current_k


def sbcr(new_rate: float, old_rate: float) -> float:
    """Stale-blocks change rate: new/(new+old); above 0.5 means rising."""
    total = new_rate + old_rate
    if total <= 0.0:
        return 0.5
    return new_rate / total


def sm_reinforcement(
    weight_decisions: int,
    height_decisions: int,
    rate_per_k_old: float,
    rate_per_k_new: float,
) -> int:
    """Binary signal for the K automaton.

    Rewards only when weight decisions held the majority of the window AND
    the per-K stale rate fell.  Degenerate inputs (no decisions, zero rates)
    resolve to the penalty side: the automaton is never rewarded on no
    evidence.
    """
    decisions = weight_decisions + height_decisions
    beta1 = weight_decisions / decisions if decisions > 0 else 0.0
    rate_sum = rate_per_k_new + rate_per_k_old
    beta2 = rate_per_k_old / rate_sum if rate_sum > 0.0 else 0.0
    return REWARD if beta1 > 0.5 and beta2 > 0.5 else PENALTY


def ds_reinforcement(rate_per_z_old: float, rate_per_z_new: float) -> int:
    """Binary signal for the Z automaton: reward when the per-Z rate falls."""
    rate_sum = rate_per_z_new + rate_per_z_old
    if rate_sum <= 0.0:
        return PENALTY
    return REWARD if rate_per_z_old / rate_sum > 0.5 else PENALTY


@dataclass
class LinearRewardPenalty:
    """Fixed-structure L_RP automaton over a small ordered action set.

    ``choose`` samples from the probability vector restricted to an allowed
    subset (bound masking); ``update`` applies the linear reward/penalty
    step to the full vector using the last chosen action.
    """

    n_actions: int
    reward_step: float = 0.1
    penalty_step: float = 0.1
    probabilities: list[float] = field(default_factory=list)
    last_action: int = -1

    def __post_init__(self):
        if not 0.0 < self.reward_step < 1.0:
            raise ValueError("reward step must be in (0, 1)")
        if not 0.0 <= self.penalty_step < 1.0:
            raise ValueError("penalty step must be in [0, 1)")
        if not self.probabilities:
            self.probabilities = [1.0 / self.n_actions] * self.n_actions

    def reset(self) -> None:
        self.probabilities = [1.0 / self.n_actions] * self.n_actions
        self.last_action = -1

    def choose(self, allowed: tuple[int, ...], rng) -> int:
        """Sample an action from the masked, renormalized distribution."""
        if not allowed:
            raise ValueError("allowed action set must not be empty")
        total = 0.0
        for j in allowed:
            total += self.probabilities[j]
        u = rng.random() * total
        acc = 0.0
        chosen = allowed[-1]
        for j in allowed:
            acc += self.probabilities[j]
            if u < acc:
                chosen = j
                break
        self.last_action = chosen
        return chosen

    def update(self, beta: int) -> None:
        """Linear reward-penalty step toward/away from the last action."""
        if self.last_action < 0:
            raise ValueError("update requires a prior choose in this window")
        p = self.probabilities
        i = self.last_action
        if beta == REWARD:
            a = self.reward_step
            for j in range(self.n_actions):
                p[j] = p[j] + a * (1.0 - p[j]) if j == i else (1.0 - a) * p[j]
        else:
            b = self.penalty_step
            spread = b / (self.n_actions - 1)
            for j in range(self.n_actions):
                p[j] = (1.0 - b) * p[j] if j == i else spread + (1.0 - b) * p[j]
        total = p[0]
        for j in range(1, self.n_actions):
            total += p[j]
        for j in range(self.n_actions):
            p[j] /= total


@dataclass
class VdhlaAutomaton:
    """Depth-based automaton in the VDHLA mold (fixed-structure hybrid).

    Keeps a current action with a conviction level: rewards deepen the
    conviction (and, at full depth, the depth itself, up to a cap); a
    penalty at depth one switches to the next action cyclically and shrinks
    the depth.  Converges within a few windows and stays put, which is what
    lets the safe parameters ride at their learned values between periodic
    resets.  ``choose`` draws exactly one uniform per call (used only when
    the current action is masked out), keeping the RNG stream layout
    identical to the linear scheme.
    """

    n_actions: int
    initial_depth: int = 2
    depth_cap: int = 8
    # The conservative conviction to hold until the signal says otherwise
    # (Grow/Increase for the safe parameters); -1 starts on a random action.
    initial_action: int = 0
    current: int = -2
    memory: int = 1
    limit: int = 0
    last_action: int = -1

    def __post_init__(self):
        if not 1 <= self.initial_depth <= self.depth_cap:
            raise ValueError("initial depth must lie within [1, depth cap]")
        if self.limit == 0:
            self.limit = self.initial_depth
        if self.current == -2:
            self.current = self.initial_action

    def reset(self) -> None:
        self.current = self.initial_action
        self.memory = 1
        self.limit = self.initial_depth
        self.last_action = -1

    def choose(self, allowed: tuple[int, ...], rng) -> int:
        if not allowed:
            raise ValueError("allowed action set must not be empty")
        u = rng.random()
        if self.current not in allowed:
            self.current = allowed[int(u * len(allowed))]
            self.memory = 1
        self.last_action = self.current
        return self.current

    def update(self, beta: int) -> None:
        if self.last_action < 0:
            raise ValueError("update requires a prior choose in this window")
        if beta == REWARD:
            if self.memory < self.limit:
                self.memory += 1
            else:
                self.limit = min(self.limit + 1, self.depth_cap)
                self.memory = self.limit
        else:
            self.memory -= 1
            if self.memory <= 0:
                self.current = (self.current + 1) % self.n_actions
                self.limit = max(1, self.limit - 1)
                self.memory = 1


def sm_allowed_actions(k: int, k_min: int, k_max: int) -> tuple[int, ...]:
    if k >= k_max:
        return (STOP, SHRINK)
    if k <= k_min:
        return (GROW, STOP)
    return (GROW, STOP, SHRINK)


def apply_sm_action(k: int, action: int, k_min: int, k_max: int) -> int:
    if action == GROW:
        k += 1
    elif action == SHRINK:
        k -= 1
    return min(max(k, k_min), k_max)


def update_sm_safe_parameter(
    k: int, k_min: int, k_max: int, automaton: LinearRewardPenalty, rng
) -> tuple[int, int]:
    """Pick a masked K action and apply it.  Returns (new k, action)."""
    action = automaton.choose(sm_allowed_actions(k, k_min, k_max), rng)
    return apply_sm_action(k, action, k_min, k_max), action


def ds_allowed_actions(z: int, z_min: int, z_max: int) -> tuple[int, ...]:
    if z >= z_max:
        return (NO_CHANGE, DECREASE)
    if z <= z_min:
        return (INCREASE, NO_CHANGE)
    return (INCREASE, NO_CHANGE, DECREASE)


def apply_ds_action(z: int, action: int, z_min: int, z_max: int, sbcr_value: float) -> int:
    """Z transition: doubling jump on a steep rise, halving on calm descents.

    Doubling past z_max is clamped (13 * 2 would escape the interval
    otherwise), as is every other transition.
    """
    if action == INCREASE:
        if sbcr_value >= 0.75 and z <= z_max:
            z *= 2
        else:
            z += 2
    elif action == DECREASE:
        if z > 6 and z % 2 == 0:
            z //= 2
        elif z > z_min:
            z -= 2
    return min(max(z, z_min), z_max)


def update_ds_safe_parameter(
    z: int,
    z_min: int,
    z_max: int,
    sbcr_value: float,
    automaton: LinearRewardPenalty,
    rng,
) -> tuple[int, int]:
    """Pick a masked Z action and apply it.  Returns (new z, action)."""
    action = automaton.choose(ds_allowed_actions(z, z_min, z_max), rng)
    return apply_ds_action(z, action, z_min, z_max, sbcr_value), action
