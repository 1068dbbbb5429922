"""Plot builders over the forksim CSV contract.

Only the documented column names are consumed; a missing column fails
loudly with the column named, so simulator-side schema drift is caught
immediately rather than plotted wrong.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import FigureError
from .style import PNG_METADATA, RC_PARAMS, SVG_METADATA, policy_style


def read_rows(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    raise FigureError(f"{path}: missing column {column!r}")
            rows = list(reader)
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return rows


def _save(fig, out_path: str | Path) -> None:
    out_path = Path(out_path)
    suffix = out_path.suffix.lower()
    if suffix == ".png":
        fig.savefig(out_path, metadata=PNG_METADATA)
    elif suffix == ".svg":
        fig.savefig(out_path, metadata=SVG_METADATA)
    else:
        raise FigureError(f"unsupported image format {suffix!r} (use .png or .svg)")
    plt.close(fig)


def _series_by_policy(rows: list[dict], value_column: str):
    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        try:
            alpha = float(row["alpha"])
            value = float(row[value_column])
        except ValueError as exc:
            raise FigureError(f"bad numeric cell in column {value_column!r}: {exc}") from exc
        series.setdefault(row["policy"], []).append((alpha, value))
    for points in series.values():
        points.sort()
    return series


def plot_revenue(aggregate_csv: str | Path, out_path: str | Path) -> None:
    """Revenue curves per policy plus the ideal line and the SM upper bound."""
    rows = read_rows(aggregate_csv,
                     ("policy", "alpha", "meanRelativeRevenuePct", "upperBoundPct"))
    series = _series_by_policy(rows, "meanRelativeRevenuePct")
    bound = sorted({(float(r["alpha"]), float(r["upperBoundPct"])) for r in rows})
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        for policy, points in series.items():
            style = policy_style(policy)
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker=style["marker"], color=style["color"],
                    markersize=4, label=style.get("label", policy))
        alphas = [a for a, _ in bound]
        ax.plot(alphas, [100.0 * a for a in alphas], linestyle=":", color="black",
                label="ideal (revenue = alpha)")
        ax.plot(alphas, [min(b, 100.0) for _, b in bound], linestyle="--",
                color="#b0b0b0", label="upper bound a/(1-a)")
        ax.set_xlabel("selfish hash fraction (alpha)")
        ax.set_ylabel("relative revenue (%)")
        ax.set_title("Selfish-pool relative revenue by fork-resolving policy")
        ax.legend()
        _save(fig, out_path)


def plot_ds_counts(aggregate_csv: str | Path, out_path: str | Path) -> None:
    """Mean double-spend opportunity counts per policy over alpha."""
    rows = read_rows(aggregate_csv, ("policy", "alpha", "meanDsCount"))
    series = _series_by_policy(rows, "meanDsCount")
    single_point = all(len(points) == 1 for points in series.values())
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        if single_point:
            # One alpha only: a bar per policy reads better than a 1-point line.
            policies = sorted(series)
            values = [series[p][0][1] for p in policies]
            colors = [policy_style(p)["color"] for p in policies]
            ax.bar(range(len(policies)), values, color=colors)
            ax.set_xticks(range(len(policies)))
            ax.set_xticklabels([policy_style(p).get("label", p) for p in policies])
        else:
            for policy, points in series.items():
                style = policy_style(policy)
                ax.plot([p[0] for p in points], [p[1] for p in points],
                        marker=style["marker"], color=style["color"],
                        markersize=4, label=style.get("label", policy))
            ax.set_xlabel("selfish hash fraction (alpha)")
            ax.legend()
        ax.set_ylabel("successful double-spend opportunities (mean per run)")
        ax.set_title("Double-spending exposure by fork-resolving policy")
        _save(fig, out_path)


def plot_z_trace(windows_csv: str | Path, out_path: str | Path) -> None:
    """Step plot of the published safe parameters of one run's window trace."""
    rows = read_rows(windows_csv, ("policy", "alpha", "seed", "windowIndex", "k", "z"))
    first_key = (rows[0]["policy"], rows[0]["alpha"], rows[0]["seed"])
    trace = [r for r in rows
             if (r["policy"], r["alpha"], r["seed"]) == first_key]
    indices = [int(r["windowIndex"]) for r in trace]
    z_values = [int(r["z"]) for r in trace]
    k_values = [int(r["k"]) for r in trace if r["k"] != ""]
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        ax.step(indices, z_values, where="post", color="#2ca02c", label="Z (confirmations)")
        if len(k_values) == len(indices):
            ax.step(indices, k_values, where="post", color="#d62728", label="K (length gap)")
        ax.set_xlabel("time window")
        ax.set_ylabel("published safe parameter")
        policy = first_key[0]
        ax.set_title(f"Safe-parameter trace ({policy}, alpha={first_key[1]})")
        ax.legend()
        _save(fig, out_path)


def plot_sensitivity_panel(aggregate_csvs: list[str | Path], labels: list[str],
                           out_path: str | Path) -> None:
    """Grouped mean-avgZ bars across sweep variants (tau or window sizes)."""
    if len(aggregate_csvs) != len(labels):
        raise FigureError("need one label per input CSV")
    panels = []
    for path in aggregate_csvs:
        rows = read_rows(path, ("policy", "meanAvgZ"))
        by_policy: dict[str, list[float]] = {}
        for row in rows:
            by_policy.setdefault(row["policy"], []).append(float(row["meanAvgZ"]))
        panels.append({p: sum(v) / len(v) for p, v in by_policy.items()})
    policies = sorted({p for panel in panels for p in panel})
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots()
        width = 0.8 / len(policies)
        for j, policy in enumerate(policies):
            style = policy_style(policy)
            xs = [i + j * width for i in range(len(panels))]
            ax.bar(xs, [panel.get(policy, 0.0) for panel in panels], width=width,
                   color=style["color"], label=style.get("label", policy))
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(panels))])
        ax.set_xticklabels(labels)
        ax.set_ylabel("mean of per-run average Z")
        ax.set_title("Safe-parameter sensitivity")
        ax.legend()
        _save(fig, out_path)
