"""CLI: ``plot regret|scatter|table --in CSV --out PATH [--budget B]``."""
from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, SchemaError, plot_regret_curves, plot_scatter, render_table1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render revealbandit harness CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("regret", "averaged regret curves with standard-error bands"),
        ("scatter", "per-instance scatter comparison of two algorithms"),
        ("table", "formatted competitive-ratio table"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="inputs", action="append", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--budget", type=float, default=None)
        if name == "scatter":
            p.add_argument(
                "--algos", default=None,
                help="comma-separated x,y algorithms (default: first two found)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    kind = {"regret": "regret_curves", "scatter": "scatter", "table": "table"}[args.command]
    algos = None
    if getattr(args, "algos", None):
        algos = tuple(args.algos.split(","))
        if len(algos) != 2:
            print("plot scatter: --algos needs exactly two names", file=sys.stderr)
            return 2
    spec = FigureSpec(
        inputs=tuple(args.inputs), kind=kind, output=args.out,
        budget=args.budget, algos=algos,
    )
    try:
        if kind == "regret_curves":
            plot_regret_curves(spec)
        elif kind == "scatter":
            plot_scatter(spec)
        else:
            render_table1(spec)
    except (SchemaError, OSError) as exc:
        print(f"plot {args.command}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
