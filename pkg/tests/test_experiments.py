import math

import numpy as np
import pytest

from forksim.defense import Policy
from forksim.experiments import (
    ExperimentPlan,
    SweepKind,
    aggregate_records,
    derive_seed,
    hours_to_wait,
    plan_from_dict,
    preset_plans,
    profit_threshold,
    read_results_csv,
    relative_revenue,
    run_plan,
    upper_bound,
    write_results_csv,
)


def test_relative_revenue():
    assert relative_revenue(300, 700) == 30.0
    assert relative_revenue(0, 1000) == 0.0
    assert relative_revenue(500, 500) == 50.0
    with pytest.raises(ValueError):
        relative_revenue(0, 0)


def test_upper_bound():
    assert upper_bound(0.5) == 1.0
    assert upper_bound(0.0) == 0.0
    assert upper_bound(0.45) == pytest.approx(0.45 / 0.55)
    with pytest.raises(ValueError):
        upper_bound(1.0)


def test_hours_to_wait():
    assert hours_to_wait(7.47) == pytest.approx(1.245)
    assert hours_to_wait(16.54) == pytest.approx(2.756, abs=2e-3)
    assert hours_to_wait(0.0) == 0.0


def test_profit_threshold_interpolation():
    curve = [(0.2, 15.0), (0.3, 35.0)]
    assert profit_threshold(curve) == pytest.approx(0.25)


def test_profit_threshold_above_grid():
    curve = [(a, 100.0 * a) for a in (0.2, 0.3, 0.4, 0.5)]
    assert profit_threshold(curve) is None


def test_profit_threshold_validation():
    with pytest.raises(ValueError):
        profit_threshold([(0.2, 10.0)])
    with pytest.raises(ValueError):
        profit_threshold([(0.3, 10.0), (0.2, 20.0)])


def test_derive_seed_is_stable_and_spread():
    assert derive_seed(1, 0, 0, 0) == derive_seed(1, 0, 0, 0)
    seeds = {derive_seed(1, p, a, r) for p in range(4) for a in range(16) for r in range(50)}
    assert len(seeds) == 4 * 16 * 50


def small_plan(**kw):
    defaults = dict(
        policies=[Policy.NONE, Policy.WVBM],
        alpha_grid=[0.3, 0.4],
        repeats=2,
        blocks_per_run=120,
        seed_base=77,
    )
    defaults.update(kw)
    return ExperimentPlan(**defaults)


def test_run_plan_record_counts_and_aggregate_rows():
    records, _ = run_plan(small_plan())
    assert len(records) == 2 * 2 * 2
    aggs = aggregate_records(records)
    assert len(aggs) == 4
    assert all(a.runs == 2 for a in aggs)


def test_run_plan_deterministic_rerun():
    plan = small_plan()
    a, wa = run_plan(plan)
    b, wb = run_plan(plan)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert wa == wb


def test_parallel_matches_serial(tmp_path):
    plan = small_plan()
    serial_records, serial_windows = run_plan(plan, parallel=1)
    par_records, par_windows = run_plan(plan, parallel=2)
    p1 = tmp_path / "serial.csv"
    p2 = tmp_path / "parallel.csv"
    write_results_csv(serial_records, p1)
    write_results_csv(par_records, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert serial_windows == par_windows


def test_results_csv_round_trip(tmp_path):
    records, _ = run_plan(small_plan())
    path = tmp_path / "results.csv"
    write_results_csv(records, path)
    back = read_results_csv(path)
    assert back == records


def test_results_csv_newlines_and_header(tmp_path):
    records, _ = run_plan(small_plan(repeats=1, alpha_grid=[0.3]))
    path = tmp_path / "results.csv"
    write_results_csv(records, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.split(b"\n", 1)[0].decode() == (
        "policy,alpha,gamma,seed,blocks,selfishWinBlocks,honestWinBlocks,"
        "relativeRevenuePct,dsCount,avgZ,avgK,weightDecisions,heightDecisions,"
        "forkStaleBlocks,upperBoundPct,wallTimeMs"
    )


def test_read_results_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("policy,alpha\nnone,0.3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_results_csv(path)


def test_aggregates_match_independent_recomputation():
    records, _ = run_plan(small_plan())
    aggs = aggregate_records(records)
    for agg in aggs:
        rows = [r for r in records if r.policy == agg.policy and r.alpha == agg.alpha]
        revs = np.array([r.relative_revenue_pct for r in rows])
        assert agg.mean_relative_revenue_pct == pytest.approx(revs.mean())
        assert agg.std_relative_revenue_pct == pytest.approx(revs.std(ddof=1))
        ds = np.array([r.ds_count for r in rows], dtype=float)
        assert agg.mean_ds_count == pytest.approx(ds.mean())


def test_record_invariants():
    records, _ = run_plan(small_plan())
    for rec in records:
        assert 0.0 <= rec.relative_revenue_pct <= 100.0
        assert rec.selfish_win_blocks + rec.honest_win_blocks <= rec.blocks
        assert rec.wall_time_ms == 0.0


def test_plan_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown plan keys"):
        plan_from_dict({"policies": ["none"], "alphaGrid": [0.3], "bogus": 1})
    with pytest.raises(ValueError, match="unknown defense keys"):
        plan_from_dict({"policies": ["none"], "alphaGrid": [0.3], "defense": {"nope": 2}})


def test_plan_from_dict_parses_fields():
    plan = plan_from_dict({
        "policies": ["sdtla", "wvbm"],
        "alphaGrid": [0.2, 0.3],
        "gamma": 0.5,
        "repeats": 3,
        "blocksPerRun": 500,
        "seedBase": 42,
        "sweepKind": "DoubleSpending",
        "defense": {"tauBlocks": 9, "windowTaus": 6},
        "strategy": "combined",
    })
    assert plan.policies == [Policy.SDTLA, Policy.WVBM]
    assert plan.sweep_kind is SweepKind.DOUBLE_SPENDING
    assert plan.defense_overrides == {"tau_blocks": 9, "window_taus": 6}
    assert plan.defense_for(Policy.SDTLA).tau_blocks == 9
    assert plan.defense_for(Policy.WVBM).z_max == 12


def test_presets_shape():
    (label, plan), = preset_plans("experiment1")
    assert label == ""
    assert len(plan.alpha_grid) == 16
    assert plan.alpha_grid[0] == pytest.approx(0.20)
    assert plan.alpha_grid[-1] == pytest.approx(0.50)
    assert [p.value for p in plan.policies] == ["none", "uniform", "sdtla", "wvbm"]
    (_, plan2), = preset_plans("experiment2")
    assert len(plan2.alpha_grid) == 6
    assert plan2.alpha_grid[-1] == pytest.approx(0.45)
    plans3 = preset_plans("experiment3a")
    assert [lbl for lbl, _ in plans3] == ["tau-5", "tau-9", "tau-15"]
    plans3b = preset_plans("experiment3b")
    assert [p.defense_overrides["window_taus"] for _, p in plans3b] == [6, 12, 18]
    with pytest.raises(ValueError):
        preset_plans("experiment9")


def test_upper_bound_respected_in_small_sweep():
    records, _ = run_plan(small_plan(policies=[Policy.NONE], alpha_grid=[0.35], repeats=8,
                                     blocks_per_run=400))
    revs = [r.relative_revenue_pct / 100 for r in records]
    bound = upper_bound(0.35)
    sigma = math.sqrt(0.35 * 0.65 / 400)
    assert all(r <= bound + 3 * sigma for r in revs)
