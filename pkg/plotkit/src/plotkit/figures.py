"""Figure and table rendering over the harness CSV schemas.

Renders values verbatim from the CSV files -- no statistics are recomputed
here.  Styling is fixed (deterministic palette, no timestamps) so that
regenerating a figure from the same CSV yields identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "FigureSpec",
    "SchemaError",
    "plot_regret_curves",
    "plot_scatter",
    "render_table1",
]

PALETTE = {
    "pd1": "#1f77b4",
    "pd2": "#2ca02c",
    "naive": "#d62728",
}
FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
DPI = 120


class SchemaError(ValueError):
    """The input CSV is missing required columns or pairing."""


@dataclass(frozen=True)
class FigureSpec:
    """One rendering job: input CSV path(s), kind, optional budget filter."""

    inputs: tuple[str, ...]
    kind: str  # regret_curves | scatter | table
    output: str
    budget: float | None = None
    algos: tuple[str, ...] | None = None  # scatter: (x-axis algo, y-axis algo)

    def __post_init__(self) -> None:
        if self.kind not in ("regret_curves", "scatter", "table"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def _read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    text = Path(path).read_text(encoding="ascii")
    lines = [line for line in text.splitlines() if line]
    if not lines:
        return [], []
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def _require_columns(header, needed, path) -> None:
    missing = [c for c in needed if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")


def _color(algo: str, index: int) -> str:
    return PALETTE.get(algo, FALLBACK_COLORS[index % len(FALLBACK_COLORS)])


def _filter_budget(rows, budget):
    if budget is None:
        return rows
    return [r for r in rows if float(r["budget"]) == float(budget)]


def _save(fig, output) -> None:
    fig.savefig(output, dpi=DPI, format="png")
    plt.close(fig)


def plot_regret_curves(spec: FigureSpec) -> str:
    """Mean cumulative regret per algorithm with a 1.96-SE shaded band."""
    header, rows = _read_csv(spec.inputs[0])
    _require_columns(header, ("budget", "algo", "t", "mean", "std_error"), spec.inputs[0])
    rows = _filter_budget(rows, spec.budget)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    algos = sorted({r["algo"] for r in rows})
    for i, algo in enumerate(algos):
        sub = sorted((r for r in rows if r["algo"] == algo), key=lambda r: int(r["t"]))
        t = np.array([int(r["t"]) for r in sub])
        mean = np.array([float(r["mean"]) for r in sub])
        se = np.array([float(r["std_error"]) for r in sub])
        color = _color(algo, i)
        ax.plot(t, mean, label=algo, color=color, linewidth=1.6)
        ax.fill_between(t, mean - 1.96 * se, mean + 1.96 * se, color=color, alpha=0.2,
                        linewidth=0)
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative regret")
    if algos:
        ax.legend(loc="upper left", frameon=False)
    title = "Cumulative regret"
    if spec.budget is not None:
        title += f" (B={spec.budget:g})"
    ax.set_title(title)
    _save(fig, spec.output)
    return spec.output


def plot_scatter(spec: FigureSpec) -> str:
    """Per-instance final regrets of two algorithms against the 45-degree line.

    Dots above the line mean the x-axis algorithm had the lower regret on
    that instance.
    """
    header, rows = _read_csv(spec.inputs[0])
    _require_columns(
        header, ("budget", "algo", "instance_id", "final_regret"), spec.inputs[0]
    )
    rows = _filter_budget(rows, spec.budget)
    algos = spec.algos or tuple(sorted({r["algo"] for r in rows}))[:2]
    if len(algos) != 2:
        raise SchemaError("scatter needs exactly two algorithms")
    x_algo, y_algo = algos

    by_algo = {
        algo: {int(r["instance_id"]): float(r["final_regret"]) for r in rows
               if r["algo"] == algo}
        for algo in algos
    }
    if set(by_algo[x_algo]) != set(by_algo[y_algo]):
        raise SchemaError(f"unpaired instances between {x_algo} and {y_algo}")
    instance_ids = sorted(by_algo[x_algo])
    xs = np.array([by_algo[x_algo][i] for i in instance_ids])
    ys = np.array([by_algo[y_algo][i] for i in instance_ids])

    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    if instance_ids:
        lo = min(xs.min(), ys.min())
        hi = max(xs.max(), ys.max())
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        lo, hi = lo - pad, hi + pad
        ax.plot([lo, hi], [lo, hi], color="#999999", linewidth=1.0, zorder=1)
        ax.scatter(xs, ys, s=18, color=_color(x_algo, 0), zorder=2)
        ax.set_xlim(lo, hi)
        ax.set_ylim(lo, hi)
    ax.set_xlabel(f"{x_algo} final regret")
    ax.set_ylabel(f"{y_algo} final regret")
    ax.set_aspect("equal")
    ax.set_title("Per-instance regret")
    _save(fig, spec.output)
    return spec.output


def render_table1(spec: FigureSpec) -> str:
    """Competitive-ratio grid: budgets as columns, algorithms as rows.

    Means are formatted to three decimals; the formatted text is both written
    to the output path and returned.
    """
    header, rows = _read_csv(spec.inputs[0])
    _require_columns(header, ("budget", "algo", "metric", "mean"), spec.inputs[0])
    rows = [r for r in rows if r["metric"] == "competitive_ratio"]
    rows = _filter_budget(rows, spec.budget)
    budgets = sorted({float(r["budget"]) for r in rows})
    algos = sorted({r["algo"] for r in rows})
    values = {(r["algo"], float(r["budget"])): float(r["mean"]) for r in rows}

    def fmt_budget(b: float) -> str:
        return f"{b:g}"

    width = max([len("algo")] + [len(a) for a in algos])
    cells = [["algo".ljust(width)] + [fmt_budget(b).rjust(6) for b in budgets]]
    for algo in algos:
        row = [algo.ljust(width)]
        for b in budgets:
            if (algo, b) in values:
                row.append(f"{values[(algo, b)]:.3f}".rjust(6))
            else:
                row.append("-".rjust(6))
        cells.append(row)
    text = "\n".join("  ".join(row) for row in cells) + "\n"
    Path(spec.output).write_text(text, encoding="ascii")
    return text
