"""Acceptance gate: every release criterion at its pinned tolerance.

Heavy sweeps run once per session through the real CLI and are shared by
the criteria below.  Each test prints one PASS/FAIL line (visible with
``pytest -s`` or in failure output).
"""

import math
import statistics
import time

import numpy as np
import pytest

from forksim import automata, kernel
from forksim.cli import main as cli_main
from forksim.experiments import (
    aggregate_records,
    preset_plans,
    profit_threshold,
    read_results_csv,
    run_plan,
    upper_bound,
)
from forksim.frp import select_chain_sdtla, select_chain_wvbm

from helpers import random_fork
from oracles import oracle_select_sdtla, oracle_select_wvbm

pytestmark = pytest.mark.acceptance


def report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Shared sweeps


@pytest.fixture(scope="module")
def experiment1(tmp_path_factory):
    """Experiment-1 preset through the CLI, serial and 8-way parallel."""
    base = tmp_path_factory.mktemp("exp1")
    serial = base / "serial"
    parallel = base / "parallel"
    assert cli_main(["sweep", "--preset", "experiment1", "--parallel", "1",
                     "--out-dir", str(serial), "--quiet"]) == 0
    started = time.monotonic()
    assert cli_main(["sweep", "--preset", "experiment1", "--parallel", "8",
                     "--out-dir", str(parallel), "--quiet"]) == 0
    elapsed = time.monotonic() - started
    return serial, parallel, elapsed


@pytest.fixture(scope="module")
def experiment1_records(experiment1):
    _, parallel, _ = experiment1
    return read_results_csv(parallel / "results.csv")


@pytest.fixture(scope="module")
def experiment2_records():
    (_, plan), = preset_plans("experiment2")
    records, _ = run_plan(plan, parallel=8)
    return records


@pytest.fixture(scope="module")
def sensitivity_means():
    """mean/se of avgZ per (preset, policy, variant), variants in order."""
    out = {}
    for preset in ("experiment3a", "experiment3b"):
        for label, plan in preset_plans(preset):
            records, _ = run_plan(plan, parallel=8)
            for policy in ("sdtla", "wvbm"):
                vals = [r.avg_z for r in records if r.policy == policy]
                out.setdefault((preset, policy), []).append(
                    (label, statistics.fmean(vals),
                     statistics.stdev(vals) / math.sqrt(len(vals))))
    return out


def curve(records, policy):
    aggs = [a for a in aggregate_records(records) if a.policy == policy]
    return sorted((a.alpha, a.mean_relative_revenue_pct) for a in aggs)


# ---------------------------------------------------------------------------
# Criteria


def test_criterion_01_determinism_and_runtime(experiment1):
    serial, parallel, elapsed = experiment1
    identical = (serial / "results.csv").read_bytes() == (parallel / "results.csv").read_bytes()
    windows_identical = (serial / "windows.csv").read_bytes() == (parallel / "windows.csv").read_bytes()
    report(1, "determinism+runtime",
           identical and windows_identical and elapsed < 300.0,
           f"byte-identical={identical and windows_identical}, sweep took {elapsed:.1f}s (< 300s)")


def test_criterion_02_uniform_tie_breaking_threshold(experiment1_records):
    threshold = profit_threshold(curve(experiment1_records, "uniform"))
    ok = threshold is not None and abs(threshold - 0.25) <= 0.03
    report(2, "uniform threshold 0.25 +/- 0.03", ok, f"measured {threshold}")


def test_criterion_03_sdtla_threshold(experiment1_records):
    threshold = profit_threshold(curve(experiment1_records, "sdtla"))
    ok = threshold is None or threshold >= 0.43
    detail = "above grid" if threshold is None else f"{threshold:.4f}"
    report(3, "SDTLA threshold >= 0.43", ok, f"measured {detail}")


def test_criterion_04_wvbm_near_ideal(experiment1_records):
    deviations = [
        (alpha, abs(rev / 100.0 - alpha))
        for alpha, rev in curve(experiment1_records, "wvbm")
        if alpha <= 0.44 + 1e-9
    ]
    worst_alpha, worst = max(deviations, key=lambda item: item[1])
    report(4, "WVBM within 0.03 of ideal", worst <= 0.03,
           f"max |rev/100 - alpha| = {worst:.4f} at alpha {worst_alpha}")


def test_criterion_05_ds_ordering(experiment2_records):
    aggs = aggregate_records(experiment2_records)
    failures = []
    for alpha in sorted({a.alpha for a in aggs}):
        row = {a.policy: a for a in aggs if a.alpha == alpha}

        def mean_se(policy):
            a = row[policy]
            return a.mean_ds_count, a.std_ds_count / math.sqrt(a.runs)

        for low, high in (("wvbm", "sdtla"), ("sdtla", "none")):
            m_low, se_low = mean_se(low)
            m_high, se_high = mean_se(high)
            margin = 3.0 * math.hypot(se_low, se_high)
            if m_low > m_high + margin:
                failures.append(f"{low}>{high}@{alpha}")
    report(5, "DS ordering wvbm <= sdtla <= undefended (3 sigma)",
           not failures, f"violations: {failures or 'none'}")


def test_criterion_06_average_z_bands(experiment2_records):
    sdtla = statistics.fmean(r.avg_z for r in experiment2_records if r.policy == "sdtla")
    wvbm = statistics.fmean(r.avg_z for r in experiment2_records if r.policy == "wvbm")
    ok = 12.0 <= sdtla <= 21.0 and 5.0 <= wvbm <= 10.0
    report(6, "avgZ bands SDTLA [12,21] / WVBM [5,10]", ok,
           f"sdtla {sdtla:.2f}, wvbm {wvbm:.2f}")


def test_criterion_07_upper_bound_property(experiment1_records):
    # Sigma is estimated from the repeats of each (policy, alpha) cell: race
    # dynamics amplify revenue variance well beyond per-block binomial noise.
    cells: dict[tuple[str, float], list[float]] = {}
    for rec in experiment1_records:
        cells.setdefault((rec.policy, rec.alpha), []).append(
            rec.relative_revenue_pct / 100.0)
    violations = 0
    total = 0
    for (_, alpha), revs in cells.items():
        bound = upper_bound(alpha)
        sigma = statistics.stdev(revs)
        total += len(revs)
        violations += sum(rev > bound + 3.0 * sigma for rev in revs)
    report(7, "no run beats alpha/(1-alpha) beyond 3 sigma", violations == 0,
           f"{violations} of {total} runs violate")


def test_criterion_08_fork_selection_oracle_equivalence():
    rng = np.random.default_rng(20240810)
    mismatches = 0
    for _ in range(10_000):
        fork = random_fork(rng)
        k = int(rng.integers(0, 5))
        if select_chain_sdtla(fork, k).winner_index != oracle_select_sdtla(fork, k):
            mismatches += 1
        if select_chain_wvbm(fork).winner_index != oracle_select_wvbm(fork):
            mismatches += 1
    report(8, "oracle equivalence on 10,000 random forks", mismatches == 0,
           f"{mismatches} mismatches")


def test_criterion_09_automata_invariants():
    rng = np.random.default_rng(7)
    la = automata.LinearRewardPenalty(3)
    ok = True
    k, z = 1, 6
    for step in range(1_000_000):
        allowed_k = automata.sm_allowed_actions(k, 1, 3)
        action = la.choose(allowed_k, rng)
        la.update(automata.REWARD if rng.random() < 0.5 else automata.PENALTY)
        k = automata.apply_sm_action(k, action, 1, 3)
        if step % 4 == 0:
            z = automata.apply_ds_action(
                z, automata.ds_allowed_actions(z, 3, 24)[0], 3, 24, float(rng.random()))
        if not (min(la.probabilities) >= 0.0
                and abs(sum(la.probabilities) - 1.0) <= 1e-9
                and 1 <= k <= 3 and 3 <= z <= 24):
            ok = False
            break
    # Exhaustive state x action sweeps stay inside the intervals.
    for kk in range(1, 4):
        for action in (automata.GROW, automata.STOP, automata.SHRINK):
            if not 1 <= automata.apply_sm_action(kk, action, 1, 3) <= 3:
                ok = False
    for z_min, z_max in ((3, 24), (2, 12)):
        for zz in range(z_min, z_max + 1):
            for action in (automata.INCREASE, automata.NO_CHANGE, automata.DECREASE):
                for sbcr_value in (0.0, 0.5, 0.75, 1.0):
                    if not z_min <= automata.apply_ds_action(
                            zz, action, z_min, z_max, sbcr_value) <= z_max:
                        ok = False
    report(9, "automata invariants (1e6 fuzz + exhaustive bounds)", ok, "see asserts")


def test_criterion_10_sensitivity_directions(sensitivity_means):
    failures = []
    for (preset, policy), seq in sensitivity_means.items():
        for (l0, m0, se0), (l1, m1, se1) in zip(seq, seq[1:]):
            if m1 < m0 - 2.0 * math.hypot(se0, se1):
                failures.append(f"{preset}/{policy}: {l0}({m0:.2f}) -> {l1}({m1:.2f})")
    detail = "; ".join(
        f"{preset}/{policy} " + "->".join(f"{m:.2f}" for _, m, _ in seq)
        for (preset, policy), seq in sorted(sensitivity_means.items())
    )
    report(10, "avgZ non-decreasing in tau and window (2 sigma)",
           not failures, detail + (f"; violations: {failures}" if failures else ""))
