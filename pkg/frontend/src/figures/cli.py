"""figures CLI: turn forksim CSV outputs into publication-style images.

Usage:
    figures revenue --in aggregate.csv --out revenue.png
    figures ds --in aggregate.csv --out ds.svg
    figures ztrace --in windows.csv --out trace.png
    figures sensitivity --in tau5.csv tau9.csv tau15.csv --labels 5 9 15 --out z.png

Exit codes: 0 ok, 1 bad input data or IO failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import FigureError, __version__
from .plots import plot_ds_counts, plot_revenue, plot_sensitivity_panel, plot_z_trace


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("--version", action="version", version=f"figures {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)

    for kind, help_text in (("revenue", "revenue-vs-alpha curves with the ideal line"),
                            ("ds", "double-spend counts per policy"),
                            ("ztrace", "per-window safe parameter step plot")):
        p = sub.add_parser(kind, help=help_text)
        p.add_argument("--in", dest="inputs", type=Path, nargs=1, required=True)
        p.add_argument("--out", type=Path, required=True, help="output image (.png or .svg)")

    p = sub.add_parser("sensitivity", help="mean avgZ bars across sweep variants")
    p.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    p.add_argument("--labels", nargs="+", required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.kind == "revenue":
            plot_revenue(args.inputs[0], args.out)
        elif args.kind == "ds":
            plot_ds_counts(args.inputs[0], args.out)
        elif args.kind == "ztrace":
            plot_z_trace(args.inputs[0], args.out)
        else:
            plot_sensitivity_panel(args.inputs, args.labels, args.out)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
