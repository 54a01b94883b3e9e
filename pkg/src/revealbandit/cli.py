"""Command-line front end for the benchmark experiments.

Subcommands: ``simulate`` (one trajectory -> trace CSV), ``table1``
(competitive-ratio sweep), ``regret`` (regret comparison), ``audit``
(feasibility/ratio/induction audits; nonzero exit on violation), and
``gen-instance`` (serialize a synthetic instance).  Flags override values
from an optional ``--config`` file (same key:value format as instance
serialization), which in turn overrides built-in defaults mirroring the
benchmark protocol.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (
    CURVE_COLUMNS,
    INSTANCE_COLUMNS,
    SUMMARY_COLUMNS,
    TRACE_COLUMNS,
    audit_experiment,
    emit_csv,
    ground_truth,
    load_config_file,
    make_instance,
    make_sequence,
    regret_experiment,
    table1_experiment,
    trace_rows,
    trajectory_rngs,
)
from .model import save_instance
from .orchestrator import RunConfig, run_trajectory

DEFAULTS = {
    "budget": None,
    "horizon": 300,
    "contexts": 10,
    "actions": 5,
    "instances": 50,
    "replications": None,
    "seed": 0,
    "revealer": "pd2",
    "learner": "ucb",
    "context_dist": "known",
    "delta": 0.1,
    "beta_scale": 1.2,
    "threads": 1,
}

REGRET_BUDGETS = (10.0, 20.0, 30.0)
TABLE1_BUDGETS = (2, 4, 8, 16, 32, 64)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revealbandit",
        description="Budgeted information revealing in linear contextual bandits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *names: str) -> None:
        p.add_argument("--config", type=str, default=None, help="key:value config file")
        p.add_argument("--out", type=str, default=None)
        if "budget" in names:
            p.add_argument("--budget", type=float, default=None)
        if "horizon" in names:
            p.add_argument("--horizon", type=int, default=None)
        if "contexts" in names:
            p.add_argument("--contexts", type=int, default=None)
        if "actions" in names:
            p.add_argument("--actions", type=int, default=None)
        if "instances" in names:
            p.add_argument("--instances", type=int, default=None)
        if "replications" in names:
            p.add_argument("--replications", type=int, default=None)
        if "seed" in names:
            p.add_argument("--seed", type=int, default=None)
        if "revealer" in names:
            p.add_argument("--revealer", choices=("pd1", "pd2", "naive"), default=None)
        if "learner" in names:
            p.add_argument("--learner", choices=("ucb", "ts", "oracle"), default=None)
        if "context_dist" in names:
            p.add_argument(
                "--context-dist", dest="context_dist",
                choices=("known", "plugin"), default=None,
            )
        if "delta" in names:
            p.add_argument("--delta", type=float, default=None)
        if "beta_scale" in names:
            p.add_argument("--beta-scale", dest="beta_scale", type=float, default=None)
        if "threads" in names:
            p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("simulate", help="run one trajectory and emit its trace CSV")
    add_common(
        p, "budget", "horizon", "contexts", "actions", "seed", "revealer",
        "learner", "context_dist", "delta", "beta_scale",
    )

    p = sub.add_parser("table1", help="competitive-ratio sweep over budgets")
    add_common(p, "contexts", "actions", "horizon", "replications", "seed", "threads")

    p = sub.add_parser("regret", help="regret comparison pd1/pd2/naive")
    add_common(
        p, "budget", "horizon", "contexts", "actions", "instances",
        "replications", "seed", "learner", "context_dist", "delta",
        "beta_scale", "threads",
    )

    p = sub.add_parser("audit", help="feasibility/ratio/induction audits")
    add_common(
        p, "budget", "horizon", "contexts", "actions", "replications",
        "seed", "learner",
    )

    p = sub.add_parser("gen-instance", help="emit a serialized synthetic instance")
    add_common(p, "contexts", "actions", "seed")

    return parser


_CASTERS = {
    "budget": float,
    "horizon": int,
    "contexts": int,
    "actions": int,
    "instances": int,
    "replications": int,
    "seed": int,
    "delta": float,
    "beta_scale": float,
    "threads": int,
}


def _resolve(args: argparse.Namespace, key: str, fallback=None):
    """Flag > config file > default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    config_path = getattr(args, "config", None)
    if config_path:
        fields = load_config_file(config_path)
        raw = fields.get(key.replace("_", "-"), fields.get(key))
        if raw is not None:
            return _CASTERS.get(key, str)(raw)
    if fallback is not None:
        return fallback
    return DEFAULTS.get(key)


def _require_out(args: argparse.Namespace, command: str) -> Path:
    out = _resolve(args, "out")
    if out is None:
        raise SystemExit(f"revealbandit {command}: --out is required")
    return Path(out)


def _cmd_simulate(args) -> int:
    seed = _resolve(args, "seed")
    budget = _resolve(args, "budget", 10.0)
    contexts = _resolve(args, "contexts")
    actions = _resolve(args, "actions")
    horizon = _resolve(args, "horizon")
    config = RunConfig(
        budget=budget,
        horizon=horizon,
        revealer=_resolve(args, "revealer"),
        learner=_resolve(args, "learner"),
        context_mode=_resolve(args, "context_dist"),
        delta=_resolve(args, "delta"),
        beta_scale=_resolve(args, "beta_scale"),
    )
    if budget <= 2 * actions:
        print(
            f"note: budget {budget} <= 2*|A|={2*actions}; the analysis assumes more",
            file=sys.stderr,
        )
    instance = make_instance(seed, 0, contexts, actions)
    truth = ground_truth(instance)
    sequence = make_sequence(instance, horizon, seed, 0, 0)
    report = run_trajectory(
        instance, sequence, config, trajectory_rngs(seed, 0, 0), truth=truth
    )
    report.instance_id = 0
    report.replication = 0
    out = _require_out(args, "simulate")
    emit_csv(trace_rows(report), out, TRACE_COLUMNS)
    print(f"wrote {out} (final regret {report.final_regret:.6g})")
    return 0


def _cmd_table1(args) -> int:
    seed = _resolve(args, "seed")
    rows = table1_experiment(
        seed,
        budgets=TABLE1_BUDGETS,
        num_sequences=_resolve(args, "replications", 200),
        num_contexts=_resolve(args, "contexts"),
        num_actions=_resolve(args, "actions"),
        horizon=_resolve(args, "horizon"),
    )
    out = _require_out(args, "table1")
    emit_csv(rows, out, SUMMARY_COLUMNS)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _cmd_regret(args) -> int:
    seed = _resolve(args, "seed")
    single_budget = _resolve(args, "budget", 0.0)
    budgets = (single_budget,) if single_budget else REGRET_BUDGETS
    out_dir = _require_out(args, "regret")
    out_dir.mkdir(parents=True, exist_ok=True)
    summary, curves, instances = [], [], []
    for budget in budgets:
        result = regret_experiment(
            seed,
            budget,
            num_instances=_resolve(args, "instances"),
            num_replications=_resolve(args, "replications", 50),
            num_contexts=_resolve(args, "contexts"),
            num_actions=_resolve(args, "actions"),
            horizon=_resolve(args, "horizon"),
            learner=_resolve(args, "learner"),
            context_mode=_resolve(args, "context_dist"),
            threads=_resolve(args, "threads"),
        )
        summary.extend(result.summary_rows())
        curves.extend(result.curve_rows())
        instances.extend(result.instance_rows())
    emit_csv(summary, out_dir / "regret_summary.csv", SUMMARY_COLUMNS)
    emit_csv(curves, out_dir / "regret_curve.csv", CURVE_COLUMNS)
    emit_csv(instances, out_dir / "regret_instances.csv", INSTANCE_COLUMNS)
    print(f"wrote {out_dir}/regret_{{summary,curve,instances}}.csv")
    return 0


def _cmd_audit(args) -> int:
    verdict = audit_experiment(
        _resolve(args, "seed"),
        num_replications=_resolve(args, "replications", 100),
        budget=_resolve(args, "budget", 10.0),
        horizon=_resolve(args, "horizon"),
        num_contexts=_resolve(args, "contexts"),
        num_actions=_resolve(args, "actions"),
        learner=_resolve(args, "learner"),
    )
    if verdict.ok:
        print("audit passed: all steps feasible, ratio and induction bounds hold")
        return 0
    for failure in verdict.failures[:20]:
        print(f"audit failure: {failure}", file=sys.stderr)
    if len(verdict.failures) > 20:
        print(f"... and {len(verdict.failures) - 20} more", file=sys.stderr)
    return 1


def _cmd_gen_instance(args) -> int:
    instance = make_instance(
        _resolve(args, "seed"), 0, _resolve(args, "contexts"), _resolve(args, "actions")
    )
    out = _require_out(args, "gen-instance")
    save_instance(instance, out)
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "table1": _cmd_table1,
    "regret": _cmd_regret,
    "audit": _cmd_audit,
    "gen-instance": _cmd_gen_instance,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"revealbandit {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
