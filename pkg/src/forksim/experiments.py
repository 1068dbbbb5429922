"""Experiment harness: sweeps, repetition, aggregation and persistence.

A plan is a grid of (policy, alpha) cells, each repeated ``repeats`` times
with per-run seeds derived deterministically from the seed base and the cell
indices, so re-runs and parallel execution agree byte for byte.  Output is
three CSV files: ``results.csv`` (one row per run), ``windows.csv`` (the
per-window defense trace) and ``aggregate.csv`` (per-cell means and standard
deviations).
"""

from __future__ import annotations

import csv
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .defense import DefenseConfig, Policy
from .attacker import Strategy
from .kernel import simulate_run
from .runner import RunConfig, RunResult

DEFAULT_SEED_BASE = 987654321


# ---------------------------------------------------------------------------
# Metrics


def relative_revenue(selfish_wins: int, honest_wins: int) -> float:
    """Selfish share of the main chain, as a percentage."""
    total = selfish_wins + honest_wins
    if total <= 0:
        raise ValueError("relative revenue needs at least one main-chain block")
    return 100.0 * selfish_wins / total


def upper_bound(alpha: float) -> float:
    """Best-case revenue fraction of a selfish pool: alpha / (1 - alpha)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return alpha / (1.0 - alpha)


def hours_to_wait(avg_z: float) -> float:
    """Merchant wait for avg_z confirmations at one block per ten minutes."""
    if avg_z < 0:
        raise ValueError("average Z cannot be negative")
    return avg_z * 10.0 / 60.0


def profit_threshold(curve: list[tuple[float, float]]) -> float | None:
    """Smallest alpha where the mean revenue fraction exceeds alpha.

    ``curve`` holds (alpha, mean relative revenue percent) points sorted by
    alpha.  The crossing is linearly interpolated between the bracketing
    grid points; ``None`` means the curve never crosses within the grid.
    """
    if len(curve) < 2:
        raise ValueError("need at least two curve points")
    alphas = [a for a, _ in curve]
    if alphas != sorted(alphas):
        raise ValueError("curve must be sorted by alpha")
    gains = [rev / 100.0 - a for a, rev in curve]
    for i, gain in enumerate(gains):
        if gain > 0.0:
            if i == 0:
                return alphas[0]
            a0, a1 = alphas[i - 1], alphas[i]
            g0, g1 = gains[i - 1], gains[i]
            return a0 + (a1 - a0) * (-g0) / (g1 - g0)
    return None


# ---------------------------------------------------------------------------
# Seed derivation

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed_base: int, policy_index: int, alpha_index: int, repeat: int) -> int:
    """Per-run seed: seed base mixed with the cell indices."""
    x = seed_base & _MASK64
    for v in (policy_index, alpha_index, repeat):
        x = _splitmix64(x ^ (((v + 1) * _GOLDEN) & _MASK64))
    return x


# ---------------------------------------------------------------------------
# Plans


class SweepKind(Enum):
    SELFISH_MINING = "SelfishMining"
    DOUBLE_SPENDING = "DoubleSpending"
    TAU_SENSITIVITY = "TauSensitivity"
    WINDOW_SENSITIVITY = "WindowSensitivity"


@dataclass
class ExperimentPlan:
    policies: list[Policy]
    alpha_grid: list[float]
    gamma: float = 0.0
    repeats: int = 50
    blocks_per_run: int = 1000
    seed_base: int = DEFAULT_SEED_BASE
    sweep_kind: SweepKind = SweepKind.SELFISH_MINING
    defense_overrides: dict = field(default_factory=dict)
    strategy: Strategy | None = None
    modified_inclusive: bool = False

    def defense_for(self, policy: Policy) -> DefenseConfig:
        overrides = dict(self.defense_overrides)
        if policy.defended:
            return DefenseConfig.for_policy(policy, **overrides)
        allowed = {"tau_blocks", "window_taus", "fixed_nrc"}
        return DefenseConfig(policy=policy,
                             **{k: v for k, v in overrides.items() if k in allowed})


def _alpha_range(start: float, stop: float, step: float) -> list[float]:
    n = round((stop - start) / step)
    return [round(start + i * step, 10) for i in range(n + 1)]


def preset_plans(name: str, seed_base: int = DEFAULT_SEED_BASE) -> list[tuple[str, ExperimentPlan]]:
    """Named experiment presets; multi-variant presets return several plans."""
    sm_grid = _alpha_range(0.20, 0.50, 0.02)
    ds_grid = _alpha_range(0.20, 0.45, 0.05)
    if name == "experiment1":
        return [("", ExperimentPlan(
            policies=[Policy.NONE, Policy.UNIFORM, Policy.SDTLA, Policy.WVBM],
            alpha_grid=sm_grid, gamma=0.0, seed_base=seed_base,
            sweep_kind=SweepKind.SELFISH_MINING))]
    if name == "experiment1-10k":
        # Alternative sizing: 10,000 blocks per run, fewer repetitions.
        return [("", ExperimentPlan(
            policies=[Policy.NONE, Policy.UNIFORM, Policy.SDTLA, Policy.WVBM],
            alpha_grid=sm_grid, gamma=0.0, repeats=5, blocks_per_run=10000,
            seed_base=seed_base, sweep_kind=SweepKind.SELFISH_MINING))]
    if name == "experiment2":
        return [("", ExperimentPlan(
            policies=[Policy.NONE, Policy.SDTLA, Policy.WVBM],
            alpha_grid=ds_grid, gamma=0.0, seed_base=seed_base,
            sweep_kind=SweepKind.DOUBLE_SPENDING))]
    # Sensitivity presets use the longer 10,000-block sizing so every tau
    # and window variant sees enough learning windows per run, and pin the
    # plain combined attacker: the adaptive attacker plays near-honest
    # against WVBM and would leave no fork signal to be sensitive to.
    if name == "experiment3a":
        return [(f"tau-{tau}", ExperimentPlan(
            policies=[Policy.SDTLA, Policy.WVBM],
            alpha_grid=ds_grid, gamma=0.0, repeats=20, blocks_per_run=10000,
            seed_base=seed_base, sweep_kind=SweepKind.TAU_SENSITIVITY,
            strategy=Strategy.COMBINED_SM1,
            defense_overrides={"tau_blocks": tau}))
            for tau in (5, 9, 15)]
    if name == "experiment3b":
        return [(f"window-{taus}", ExperimentPlan(
            policies=[Policy.SDTLA, Policy.WVBM],
            alpha_grid=ds_grid, gamma=0.0, repeats=20, blocks_per_run=10000,
            seed_base=seed_base, sweep_kind=SweepKind.WINDOW_SENSITIVITY,
            strategy=Strategy.COMBINED_SM1,
            defense_overrides={"window_taus": taus}))
            for taus in (6, 12, 18)]
    raise ValueError(f"unknown preset {name!r}")


PRESET_NAMES = ("experiment1", "experiment1-10k", "experiment2", "experiment3a", "experiment3b")

_PLAN_KEYS = {
    "policies": "policies",
    "alphaGrid": "alpha_grid",
    "gamma": "gamma",
    "repeats": "repeats",
    "blocksPerRun": "blocks_per_run",
    "seedBase": "seed_base",
    "sweepKind": "sweep_kind",
    "defense": "defense_overrides",
    "strategy": "strategy",
    "modifiedInclusive": "modified_inclusive",
}

_DEFENSE_KEYS = {
    "tauBlocks": "tau_blocks",
    "windowTaus": "window_taus",
    "kMin": "k_min",
    "kMax": "k_max",
    "zMin": "z_min",
    "zMax": "z_max",
    "kInitial": "k_initial",
    "zInitial": "z_initial",
    "fixedNrc": "fixed_nrc",
    "rewardStep": "reward_step",
    "penaltyStep": "penalty_step",
    "resetPeriodWindows": "reset_period_windows",
    "sdtlaInclusiveK": "sdtla_inclusive_k",
    "automaton": "automaton",
    "initialDepth": "initial_depth",
    "depthCap": "depth_cap",
}


def plan_from_dict(raw: dict) -> ExperimentPlan:
    """Parse a plan mapping (e.g. loaded from JSON); unknown keys rejected."""
    unknown = set(raw) - set(_PLAN_KEYS)
    if unknown:
        raise ValueError(f"unknown plan keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        attr = _PLAN_KEYS[key]
        if key == "policies":
            value = [Policy(p) for p in value]
        elif key == "sweepKind":
            value = SweepKind(value)
        elif key == "strategy":
            value = Strategy(value) if value is not None else None
        elif key == "defense":
            bad = set(value) - set(_DEFENSE_KEYS)
            if bad:
                raise ValueError(f"unknown defense keys: {sorted(bad)}")
            value = {_DEFENSE_KEYS[k]: v for k, v in value.items()}
        kwargs[attr] = value
    if "policies" not in kwargs or "alpha_grid" not in kwargs:
        raise ValueError("plan needs 'policies' and 'alphaGrid'")
    return ExperimentPlan(**kwargs)


def load_plan(path: str | Path) -> ExperimentPlan:
    with open(path, encoding="utf-8") as fh:
        return plan_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Records


RESULT_FIELDS = (
    "policy", "alpha", "gamma", "seed", "blocks", "selfishWinBlocks",
    "honestWinBlocks", "relativeRevenuePct", "dsCount", "avgZ", "avgK",
    "weightDecisions", "heightDecisions", "forkStaleBlocks", "upperBoundPct",
    "wallTimeMs",
)

WINDOW_FIELDS = (
    "policy", "alpha", "gamma", "seed", "windowIndex", "k", "z",
    "staleRatePerK", "staleRatePerZ", "beta1", "beta2", "betaK", "betaZ",
    "actionK", "actionZ", "weightDecisions", "heightDecisions",
    "forkStaleBlocks",
)

AGGREGATE_FIELDS = (
    "policy", "alpha", "runs", "meanRelativeRevenuePct",
    "stdRelativeRevenuePct", "meanDsCount", "stdDsCount", "meanAvgZ",
    "stdAvgZ", "meanAvgK", "stdAvgK", "meanForkStaleBlocks",
    "stdForkStaleBlocks", "upperBoundPct",
)


@dataclass
class ExperimentRecord:
    policy: str
    alpha: float
    gamma: float
    seed: int
    blocks: int
    selfish_win_blocks: int
    honest_win_blocks: int
    relative_revenue_pct: float
    ds_count: int
    avg_z: float
    avg_k: float | None
    weight_decisions: int
    height_decisions: int
    fork_stale_blocks: int
    upper_bound_pct: float
    wall_time_ms: float

    def row(self) -> list:
        return [
            self.policy, self.alpha, self.gamma, self.seed, self.blocks,
            self.selfish_win_blocks, self.honest_win_blocks,
            self.relative_revenue_pct, self.ds_count, self.avg_z, self.avg_k,
            self.weight_decisions, self.height_decisions,
            self.fork_stale_blocks, self.upper_bound_pct, self.wall_time_ms,
        ]


def record_from_result(result: RunResult) -> ExperimentRecord:
    # wallTimeMs is pinned to zero: measured wall time would break the
    # byte-identical determinism contract of the CSV outputs.
    return ExperimentRecord(
        policy=result.policy.value,
        alpha=result.alpha,
        gamma=result.gamma,
        seed=result.seed,
        blocks=result.blocks,
        selfish_win_blocks=result.selfish_wins,
        honest_win_blocks=result.honest_wins,
        relative_revenue_pct=result.relative_revenue_pct,
        ds_count=result.ds_count,
        avg_z=result.avg_z,
        avg_k=result.avg_k,
        weight_decisions=result.weight_decisions,
        height_decisions=result.height_decisions,
        fork_stale_blocks=result.fork_stale_blocks,
        upper_bound_pct=100.0 * upper_bound(result.alpha),
        wall_time_ms=0.0,
    )


def window_rows_from_result(result: RunResult) -> list[list]:
    rows = []
    for w in result.windows:
        rows.append([
            result.policy.value, result.alpha, result.gamma, result.seed,
            w.window_index, w.k, w.z, w.rate_per_k, w.rate_per_z, w.beta1,
            w.beta2, w.beta_k, w.beta_z, w.action_k, w.action_z,
            w.weight_decisions, w.height_decisions, w.fork_stale_blocks,
        ])
    return rows


# ---------------------------------------------------------------------------
# Sweep execution


@dataclass(frozen=True)
class RunSpec:
    policy: Policy
    policy_index: int
    alpha: float
    alpha_index: int
    repeat: int
    seed: int
    gamma: float
    blocks: int
    defense: DefenseConfig
    strategy: Strategy | None
    modified_inclusive: bool


def _specs_for_plan(plan: ExperimentPlan) -> list[RunSpec]:
    specs = []
    for p_idx, policy in enumerate(plan.policies):
        defense = plan.defense_for(policy)
        for a_idx, alpha in enumerate(plan.alpha_grid):
            for repeat in range(plan.repeats):
                specs.append(RunSpec(
                    policy=policy, policy_index=p_idx, alpha=alpha,
                    alpha_index=a_idx, repeat=repeat,
                    seed=derive_seed(plan.seed_base, p_idx, a_idx, repeat),
                    gamma=plan.gamma, blocks=plan.blocks_per_run,
                    defense=defense, strategy=plan.strategy,
                    modified_inclusive=plan.modified_inclusive,
                ))
    return specs


def _execute_spec(spec: RunSpec) -> RunResult:
    config = RunConfig(
        policy=spec.policy, alpha=spec.alpha, gamma=spec.gamma,
        blocks=spec.blocks, seed=spec.seed, strategy=spec.strategy,
        defense=spec.defense, modified_inclusive=spec.modified_inclusive,
    )
    try:
        return simulate_run(config)
    except Exception as exc:
        raise RuntimeError(
            f"run failed (policy={spec.policy.value}, alpha={spec.alpha}, "
            f"seed={spec.seed}): {exc}"
        ) from exc


def run_plan(plan: ExperimentPlan, parallel: int = 1):
    """Execute every run of the plan.

    Returns (records, window_rows); both are ordered by (policy, alpha,
    repeat) regardless of completion order, so output is independent of the
    degree of parallelism.
    """
    specs = _specs_for_plan(plan)
    if parallel > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_execute_spec, specs, chunksize=16))
    else:
        results = [_execute_spec(spec) for spec in specs]
    records = [record_from_result(r) for r in results]
    window_rows = []
    for result in results:
        window_rows.extend(window_rows_from_result(result))
    return records, window_rows


# ---------------------------------------------------------------------------
# Aggregation


@dataclass
class AggregateRow:
    policy: str
    alpha: float
    runs: int
    mean_relative_revenue_pct: float
    std_relative_revenue_pct: float
    mean_ds_count: float
    std_ds_count: float
    mean_avg_z: float
    std_avg_z: float
    mean_avg_k: float | None
    std_avg_k: float | None
    mean_fork_stale_blocks: float
    std_fork_stale_blocks: float
    upper_bound_pct: float

    def row(self) -> list:
        return [
            self.policy, self.alpha, self.runs,
            self.mean_relative_revenue_pct, self.std_relative_revenue_pct,
            self.mean_ds_count, self.std_ds_count, self.mean_avg_z,
            self.std_avg_z, self.mean_avg_k, self.std_avg_k,
            self.mean_fork_stale_blocks, self.std_fork_stale_blocks,
            self.upper_bound_pct,
        ]


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def aggregate_records(records: list[ExperimentRecord]) -> list[AggregateRow]:
    """Per-(policy, alpha) means and sample standard deviations."""
    groups: dict[tuple[str, float], list[ExperimentRecord]] = {}
    order: list[tuple[str, float]] = []
    for rec in records:
        key = (rec.policy, rec.alpha)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)
    rows = []
    for key in order:
        recs = groups[key]
        rev = _mean_std([r.relative_revenue_pct for r in recs])
        ds = _mean_std([float(r.ds_count) for r in recs])
        avg_z = _mean_std([r.avg_z for r in recs])
        ks = [r.avg_k for r in recs if r.avg_k is not None]
        avg_k = _mean_std(ks) if ks else (None, None)
        stale = _mean_std([float(r.fork_stale_blocks) for r in recs])
        rows.append(AggregateRow(
            policy=key[0], alpha=key[1], runs=len(recs),
            mean_relative_revenue_pct=rev[0], std_relative_revenue_pct=rev[1],
            mean_ds_count=ds[0], std_ds_count=ds[1],
            mean_avg_z=avg_z[0], std_avg_z=avg_z[1],
            mean_avg_k=avg_k[0], std_avg_k=avg_k[1],
            mean_fork_stale_blocks=stale[0], std_fork_stale_blocks=stale[1],
            upper_bound_pct=recs[0].upper_bound_pct,
        ))
    return rows


# ---------------------------------------------------------------------------
# CSV persistence (UTF-8, \n line endings, full-precision floats)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str | Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def write_results_csv(records: list[ExperimentRecord], path: str | Path) -> None:
    _write_csv(path, RESULT_FIELDS, (r.row() for r in records))


def write_windows_csv(rows: list[list], path: str | Path) -> None:
    _write_csv(path, WINDOW_FIELDS, rows)


def write_aggregate_csv(rows: list[AggregateRow], path: str | Path) -> None:
    _write_csv(path, AGGREGATE_FIELDS, (r.row() for r in rows))


def _parse_optional_float(cell: str) -> float | None:
    return float(cell) if cell else None


def read_results_csv(path: str | Path) -> list[ExperimentRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(RESULT_FIELDS):
            raise ValueError(f"unexpected results header in {path}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(RESULT_FIELDS):
                raise ValueError(f"{path}: malformed row {line_no}")
            try:
                records.append(ExperimentRecord(
                    policy=row[0], alpha=float(row[1]), gamma=float(row[2]),
                    seed=int(row[3]), blocks=int(row[4]),
                    selfish_win_blocks=int(row[5]), honest_win_blocks=int(row[6]),
                    relative_revenue_pct=float(row[7]), ds_count=int(row[8]),
                    avg_z=float(row[9]), avg_k=_parse_optional_float(row[10]),
                    weight_decisions=int(row[11]), height_decisions=int(row[12]),
                    fork_stale_blocks=int(row[13]), upper_bound_pct=float(row[14]),
                    wall_time_ms=float(row[15]),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}: malformed row {line_no}: {exc}") from exc
    return records


def threshold_table(records: list[ExperimentRecord]) -> list[tuple[str, float | None]]:
    """Per-policy profit threshold from a results table."""
    aggregates = aggregate_records(records)
    by_policy: dict[str, list[tuple[float, float]]] = {}
    for agg in aggregates:
        by_policy.setdefault(agg.policy, []).append(
            (agg.alpha, agg.mean_relative_revenue_pct))
    table = []
    for policy, curve in by_policy.items():
        curve.sort()
        table.append((policy, profit_threshold(curve)))
    return table
