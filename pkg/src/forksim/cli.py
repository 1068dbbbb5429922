"""Command-line front door: single runs, sweeps and report extraction.

Exit codes: 0 success, 1 runtime/IO failure, 2 usage error.  The
``FORKSIM_SEED`` environment variable overrides the seed base of sweeps and
the seed of single runs (useful for CI).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import __version__
from .attacker import Strategy
from .defense import DefenseConfig, Policy
from .experiments import (
    DEFAULT_SEED_BASE,
    ExperimentPlan,
    PRESET_NAMES,
    aggregate_records,
    hours_to_wait,
    load_plan,
    preset_plans,
    read_results_csv,
    record_from_result,
    run_plan,
    threshold_table,
    window_rows_from_result,
    write_aggregate_csv,
    write_results_csv,
    write_windows_csv,
)
from .kernel import simulate_run, using_compiled
from .runner import RunConfig

POLICY_CHOICES = [p.value for p in Policy]


def _env_seed() -> int | None:
    raw = os.environ.get("FORKSIM_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise SystemExit("FORKSIM_SEED must be an integer")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forksim",
        description="Monte Carlo block-race simulator with adaptive fork-resolving defenses",
    )
    parser.add_argument("--version", action="version", version=f"forksim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one seeded run and print a summary")
    run_p.add_argument("--policy", choices=POLICY_CHOICES, default="none")
    run_p.add_argument("--alpha", type=float, required=True, help="selfish hash fraction in [0, 0.5]")
    run_p.add_argument("--gamma", type=float, default=0.0, help="advertisement factor in [0, 1]")
    run_p.add_argument("--blocks", type=int, default=1000)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--attacker", choices=[s.value for s in Strategy], default=None,
                       help="default: modified for defended policies, combined otherwise")
    run_p.add_argument("--tau", type=int, default=5, help="blocks per decision interval")
    run_p.add_argument("--window-taus", type=int, default=12, help="tau intervals per time window")
    run_p.add_argument("--k-min", type=int, default=1)
    run_p.add_argument("--k-max", type=int, default=3)
    run_p.add_argument("--z-min", type=int, default=None, help="default 3 (SDTLA) or 2 (WVBM)")
    run_p.add_argument("--z-max", type=int, default=None, help="default 24 (SDTLA) or 12 (WVBM)")
    run_p.add_argument("--nrc", type=int, default=6, help="fixed confirmation count when undefended")
    run_p.add_argument("--modified-release-inclusive", action="store_true",
                       help="modified attacker releases at lead >= K instead of > K")
    run_p.add_argument("--automaton", choices=["vdhla", "lrp"], default="vdhla",
                       help="safe-parameter automaton: depth-based (default) or linear reward-penalty")
    run_p.add_argument("--sdtla-inclusive-k", action="store_true",
                       help="SDTLA length rule reads 'longer by K' inclusively")
    run_p.add_argument("--out", type=Path, default=None,
                       help="directory for results.csv/windows.csv of this run")

    sweep_p = sub.add_parser("sweep", help="run an experiment plan or preset")
    src = sweep_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--plan", type=Path, help="JSON plan file")
    src.add_argument("--preset", choices=PRESET_NAMES)
    sweep_p.add_argument("--parallel", type=int, default=1)
    sweep_p.add_argument("--seed-base", type=int, default=DEFAULT_SEED_BASE)
    sweep_p.add_argument("--out-dir", type=Path, default=Path("results"))
    sweep_p.add_argument("--quiet", action="store_true", help="skip the aggregate table")

    report_p = sub.add_parser("report", help="extract tables from results.csv")
    report_p.add_argument("--in", dest="infile", type=Path, required=True)
    report_p.add_argument("--metric", choices=["threshold", "revenue", "ds", "avgz"],
                          required=True)
    report_p.add_argument("--format", choices=["text", "csv"], default="text")
    return parser


def _run_config_from_args(args) -> RunConfig:
    policy = Policy(args.policy)
    z_min = args.z_min if args.z_min is not None else (2 if policy is Policy.WVBM else 3)
    z_max = args.z_max if args.z_max is not None else (12 if policy is Policy.WVBM else 24)
    defense = DefenseConfig(
        policy=policy, tau_blocks=args.tau, window_taus=args.window_taus,
        k_min=args.k_min, k_max=args.k_max, z_min=z_min, z_max=z_max,
        z_initial=min(max(6, z_min), z_max), fixed_nrc=args.nrc,
        sdtla_inclusive_k=args.sdtla_inclusive_k, automaton=args.automaton,
    )
    seed = _env_seed()
    if seed is None:
        seed = args.seed
    strategy = Strategy(args.attacker) if args.attacker else None
    return RunConfig(
        policy=policy, alpha=args.alpha, gamma=args.gamma, blocks=args.blocks,
        seed=seed, strategy=strategy, defense=defense,
        modified_inclusive=args.modified_release_inclusive,
    )


def _cmd_run(args) -> int:
    try:
        config = _run_config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = simulate_run(config)
    avg_k = f" avgK={result.avg_k:.3f}" if result.avg_k is not None else ""
    print(
        f"policy={config.policy.value} alpha={config.alpha} seed={config.seed} "
        f"revenue={result.relative_revenue_pct:.2f}% ds={result.ds_count} "
        f"avgZ={result.avg_z:.3f}{avg_k} staleBlocks={result.fork_stale_blocks}"
    )
    if args.out is not None:
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            write_results_csv([record_from_result(result)], args.out / "results.csv")
            write_windows_csv(window_rows_from_result(result), args.out / "windows.csv")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 1
    return 0


def _print_aggregate_table(aggregates) -> None:
    header = f"{'policy':<10} {'alpha':>6} {'revenue%':>10} {'ds':>8} {'avgZ':>8} {'avgK':>6}"
    print(header)
    for agg in aggregates:
        avg_k = f"{agg.mean_avg_k:6.2f}" if agg.mean_avg_k is not None else "     -"
        print(f"{agg.policy:<10} {agg.alpha:>6.2f} {agg.mean_relative_revenue_pct:>10.3f} "
              f"{agg.mean_ds_count:>8.3f} {agg.mean_avg_z:>8.3f} {avg_k}")


def _cmd_sweep(args) -> int:
    if args.parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return 2
    seed_base = _env_seed()
    if seed_base is None:
        seed_base = args.seed_base
    try:
        if args.plan is not None:
            plans = [("", load_plan(args.plan))]
            if seed_base != DEFAULT_SEED_BASE or os.environ.get("FORKSIM_SEED"):
                plans[0][1].seed_base = seed_base
        else:
            plans = preset_plans(args.preset, seed_base)
    except FileNotFoundError as exc:
        print(f"error: plan file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: invalid plan: {exc}", file=sys.stderr)
        return 1

    started = time.monotonic()
    try:
        for label, plan in plans:
            out_dir = args.out_dir / label if label else args.out_dir
            out_dir.mkdir(parents=True, exist_ok=True)
            records, window_rows = run_plan(plan, parallel=args.parallel)
            aggregates = aggregate_records(records)
            write_results_csv(records, out_dir / "results.csv")
            write_windows_csv(window_rows, out_dir / "windows.csv")
            write_aggregate_csv(aggregates, out_dir / "aggregate.csv")
            if not args.quiet:
                if label:
                    print(f"--- {label} ---")
                _print_aggregate_table(aggregates)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    elapsed = time.monotonic() - started
    kernel = "compiled" if using_compiled() else "pure-python"
    print(f"sweep finished in {elapsed:.1f}s ({kernel} kernel)", file=sys.stderr)
    return 0


def _emit_table(header: list[str], rows: list[list], fmt: str) -> None:
    if fmt == "csv":
        print(",".join(header))
        for row in rows:
            print(",".join(str(c) for c in row))
        return
    widths = [max(len(str(c)) for c in [h] + [r[i] for r in rows]) if rows else len(h)
              for i, h in enumerate(header)]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    for row in rows:
        print("  ".join(str(c).ljust(widths[i]) for i, c in enumerate(row)))


def _cmd_report(args) -> int:
    try:
        records = read_results_csv(args.infile)
    except FileNotFoundError:
        print(f"error: no such file: {args.infile}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not records:
        print("error: results file has no rows", file=sys.stderr)
        return 1

    if args.metric == "threshold":
        rows = [[policy, f"{th:.4f}" if th is not None else "above grid"]
                for policy, th in threshold_table(records)]
        _emit_table(["policy", "profitThreshold"], rows, args.format)
        return 0

    aggregates = aggregate_records(records)
    if args.metric == "revenue":
        rows = [[a.policy, a.alpha, f"{a.mean_relative_revenue_pct:.4f}",
                 f"{a.std_relative_revenue_pct:.4f}"] for a in aggregates]
        _emit_table(["policy", "alpha", "meanRevenuePct", "stdRevenuePct"], rows, args.format)
    elif args.metric == "ds":
        rows = [[a.policy, a.alpha, f"{a.mean_ds_count:.4f}", f"{a.std_ds_count:.4f}"]
                for a in aggregates]
        _emit_table(["policy", "alpha", "meanDsCount", "stdDsCount"], rows, args.format)
    else:
        by_policy: dict[str, list] = {}
        for a in aggregates:
            by_policy.setdefault(a.policy, []).append(a)
        rows = []
        for policy, aggs in by_policy.items():
            mean_z = sum(a.mean_avg_z for a in aggs) / len(aggs)
            rows.append([policy, f"{mean_z:.4f}", f"{hours_to_wait(mean_z):.4f}"])
        _emit_table(["policy", "avgZ", "hoursToWait"], rows, args.format)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(exc.code or 0)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
