"""Experiment harness: seeding, replication, aggregation, CSV emission.

Random streams are derived from the master seed by key, not by worker:
``(stream-tag, instance, replication)`` feeds a counter-based split, so
results are identical for any thread count and adding algorithms never
perturbs existing streams.  Environment streams (contexts, reveal coin
flips, reward noise) are shared across algorithms and learners -- common
random numbers, which is also what makes the bandit-learning-loss pairing
exact wherever reveal probabilities coincide.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clairvoyant import ArrivalSequence
from .learner import (
    bernstein_radius,
    containment_radius,
    fresh_confidence_set,
    fresh_context_estimate,
    update_context_counts,
    update_ridge,
)
from .model import (
    BanditInstance,
    GroundTruth,
    generate_synthetic_instance,
    ground_truth,
    parse_keyvalue_text,
    sample_contexts,
)
from .orchestrator import (
    ExperimentReport,
    RngBundle,
    RunConfig,
    compute_bll,
    competitive_ratio_experiment,
    regret_bound_rhs,
    run_trajectory,
)
from .revealer import (
    AuditVerdict,
    RevealerState,
    StepInput,
    StepOutput,
    audit_step,
    default_beta_schedule,
    induction_bound_check,
)

__all__ = [
    "STREAM",
    "derive_rng",
    "make_instance",
    "make_sequence",
    "trajectory_rngs",
    "emit_csv",
    "load_csv",
    "trace_rows",
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
    "CURVE_COLUMNS",
    "INSTANCE_COLUMNS",
    "audit_trajectory",
    "RegretExperimentResult",
    "regret_experiment",
    "table1_experiment",
    "audit_experiment",
    "concentration_coverage",
    "bernstein_coverage",
    "load_config_file",
]


class STREAM:
    """Stream tags for the counter-based split of the master seed."""

    CONTEXT = 0
    REVEAL = 1
    NOISE = 2
    LEARNER = 3
    INSTANCE = 9
    SEQUENCE_POOL = 10
    COVERAGE = 11


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Deterministic substream of the master seed for a given integer key."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    )


def make_instance(
    master_seed: int,
    instance_id: int,
    num_contexts: int = 10,
    num_actions: int = 5,
    noise_std: float = 0.1,
) -> BanditInstance:
    rng = derive_rng(master_seed, STREAM.INSTANCE, instance_id)
    return generate_synthetic_instance(num_contexts, num_actions, rng, noise_std=noise_std)


def make_sequence(
    instance: BanditInstance,
    horizon: int,
    master_seed: int,
    instance_id: int,
    replication: int,
    order: str = "iid",
    truth: GroundTruth | None = None,
) -> ArrivalSequence:
    """Arrival sequence: i.i.d. draws, optionally adversarially reordered."""
    rng = derive_rng(master_seed, STREAM.CONTEXT, instance_id, replication)
    contexts = sample_contexts(instance, horizon, rng)
    if order != "iid":
        truth = truth or ground_truth(instance)
        gaps = truth.u_star - truth.v_star
        if order == "gap_desc":
            contexts = contexts[np.argsort(-gaps[contexts], kind="stable")]
        elif order == "gap_asc":
            contexts = contexts[np.argsort(gaps[contexts], kind="stable")]
        else:
            raise ValueError(f"unknown arrival order {order!r}")
    return ArrivalSequence(contexts)


def trajectory_rngs(master_seed: int, instance_id: int, replication: int) -> RngBundle:
    return RngBundle(
        reveal=derive_rng(master_seed, STREAM.REVEAL, instance_id, replication),
        noise=derive_rng(master_seed, STREAM.NOISE, instance_id, replication),
        learner=derive_rng(master_seed, STREAM.LEARNER, instance_id, replication),
    )


# ---------------------------------------------------------------------------
# CSV emission: deterministic bytes, locale-independent, LF endings.
# ---------------------------------------------------------------------------

TRACE_COLUMNS = (
    "instance_id",
    "replication",
    "t",
    "algo",
    "context",
    "o_t",
    "O_t",
    "action",
    "expected_reward",
    "realized_reward",
    "cum_regret",
    "y",
    "z_t",
    "e_t",
    "beta_used",
    "budget_spent",
)
SUMMARY_COLUMNS = ("budget", "algo", "metric", "mean", "std_error", "num_samples")
CURVE_COLUMNS = ("budget", "algo", "t", "mean", "std_error", "num_samples")
INSTANCE_COLUMNS = ("budget", "algo", "instance_id", "final_regret", "num_replications")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def emit_csv(rows, path, columns) -> None:
    """Write mappings as CSV with >= 12 significant digits on floats."""
    path = Path(path)
    try:
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_format_cell(row[c]) for c in columns))
        path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    except OSError as exc:
        raise OSError(f"failed writing CSV to {path}: {exc}") from exc


def load_csv(path) -> list[dict[str, str]]:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def trace_rows(report: ExperimentReport, algo: str | None = None):
    """Per-step CSV rows of one trajectory."""
    trace = report.trace
    if trace is None:
        raise ValueError("report carries no trace")
    label = algo or report.config.algo_label
    for i in range(len(trace)):
        yield {
            "instance_id": report.instance_id,
            "replication": report.replication,
            "t": int(trace.t[i]),
            "algo": label,
            "context": int(trace.context[i]),
            "o_t": float(trace.o[i]),
            "O_t": int(trace.O[i]),
            "action": int(trace.action[i]),
            "expected_reward": float(trace.expected_reward[i]),
            "realized_reward": float(trace.realized_reward[i]),
            "cum_regret": float(trace.cum_regret[i]),
            "y": float(trace.y[i]),
            "z_t": float(trace.z[i]),
            "e_t": float(trace.e[i]),
            "beta_used": float(trace.beta[i]),
            "budget_spent": float(trace.spent[i]),
        }


def load_config_file(path) -> dict[str, str]:
    """Config files reuse the instance serialization's ``key: value`` format."""
    return parse_keyvalue_text(Path(path).read_text(encoding="ascii"))


# ---------------------------------------------------------------------------
# Trace auditing: replay the proof obligations over a recorded trajectory.
# ---------------------------------------------------------------------------


def audit_trajectory(trace, budget: float, eta_min: float | None = None) -> AuditVerdict:
    """Audit every step of a recorded primal-dual trace.

    ``eta_min`` defaults to the smallest gap among revealing steps, which is
    the constant the per-step ratio bound is stated against.  The dual
    variable before each step is reconstructed from the previous row.
    """
    if eta_min is None:
        revealed_gaps = trace.u_gap[trace.o > 0.0]
        eta_min = float(revealed_gaps.min()) if revealed_gaps.size else math.inf
    failures: list[str] = []
    y_prev, spent_prev = 0.0, 0.0
    outputs = []
    for i in range(len(trace)):
        before = RevealerState(budget=budget, dual_y=y_prev, spent=spent_prev)
        dist = float(trace.phibar_dist[i])
        inp = StepInput(
            u_gap=float(trace.u_gap[i]),
            tilde_action=0,
            hat_action=1 if dist > 0 else 0,
            phi_bar_distance=dist,
        )
        e = float(trace.e[i])
        beta = float(trace.beta[i])
        b_dy = budget * (float(trace.y[i]) - y_prev)
        coupling = 0.0 if e == 0.0 else (beta - dist) * e
        out = StepOutput(
            o_t=float(trace.o[i]),
            z_t=float(trace.z[i]),
            e_t=e,
            beta_used=beta,
            dual_increment=b_dy + float(trace.z[i]) + coupling,
            primal_increment=float(trace.o[i]) * float(trace.u_gap[i]),
            y_after=float(trace.y[i]),
            spent_after=float(trace.spent[i]),
        )
        verdict = audit_step(before, inp, out, eta_min)
        if not verdict.ok:
            failures.extend(f"step {i}: {msg}" for msg in verdict.failures)
        outputs.append(out)
        y_prev, spent_prev = float(trace.y[i]), float(trace.spent[i])
    induction = induction_bound_check(outputs, budget)
    if not induction.ok:
        failures.extend(induction.failures)
    return AuditVerdict(ok=not failures, failures=tuple(failures))


# ---------------------------------------------------------------------------
# Experiments.
# ---------------------------------------------------------------------------


@dataclass
class RegretExperimentResult:
    """Aggregates of one budget's regret comparison."""

    budget: float
    horizon: int
    num_instances: int
    num_replications: int
    algos: tuple[str, ...]
    final_mean: dict = field(default_factory=dict)
    final_se: dict = field(default_factory=dict)
    instance_finals: dict = field(default_factory=dict)
    curve_mean: dict = field(default_factory=dict)
    curve_se: dict = field(default_factory=dict)
    bound_margin: float = math.inf
    bll_mean: dict = field(default_factory=dict)

    def summary_rows(self):
        for algo in self.algos:
            yield {
                "budget": self.budget,
                "algo": algo,
                "metric": "final_regret",
                "mean": self.final_mean[algo],
                "std_error": self.final_se[algo],
                "num_samples": self.num_instances * self.num_replications,
            }

    def curve_rows(self):
        for algo in self.algos:
            mean = self.curve_mean[algo]
            se = self.curve_se[algo]
            for t in range(mean.size):
                yield {
                    "budget": self.budget,
                    "algo": algo,
                    "t": t + 1,
                    "mean": mean[t],
                    "std_error": se[t],
                    "num_samples": self.num_instances,
                }

    def instance_rows(self):
        for algo in self.algos:
            finals = self.instance_finals[algo]
            for instance_id in range(finals.size):
                yield {
                    "budget": self.budget,
                    "algo": algo,
                    "instance_id": instance_id,
                    "final_regret": finals[instance_id],
                    "num_replications": self.num_replications,
                }


def _regret_worker(args):
    (
        master_seed,
        instance_id,
        num_contexts,
        num_actions,
        horizon,
        budget,
        replications,
        algos,
        learner,
        context_mode,
        include_aux,
    ) = args
    instance = make_instance(master_seed, instance_id, num_contexts, num_actions)
    truth = ground_truth(instance)
    finals = {algo: np.zeros(replications) for algo in algos}
    curves = {algo: np.zeros(horizon) for algo in algos}
    bll_sums = {algo: 0.0 for algo in algos}
    sq_sums = {algo: 0.0 for algo in algos}
    bound_margin = math.inf
    beta_schedule = default_beta_schedule(truth.delta_min, budget, horizon)
    for rep in range(replications):
        sequence = make_sequence(instance, horizon, master_seed, instance_id, rep)
        aux_report = None
        if include_aux:
            aux_cfg = RunConfig(
                budget=budget, horizon=horizon, revealer="pd2", learner="oracle"
            )
            aux_report = run_trajectory(
                instance, sequence, aux_cfg,
                trajectory_rngs(master_seed, instance_id, rep),
                truth=truth, collect_trace=False,
            )
        for algo in algos:
            config = RunConfig(
                budget=budget,
                horizon=horizon,
                revealer=algo,
                learner=learner,
                context_mode=context_mode,
            )
            report = run_trajectory(
                instance, sequence, config,
                trajectory_rngs(master_seed, instance_id, rep),
                truth=truth, collect_trace=False,
            )
            finals[algo][rep] = report.final_regret
            curves[algo] += report.regret_curve
            sq_sums[algo] += report.final_regret * report.final_regret
            if aux_report is not None:
                bll_sums[algo] += aux_report.v_alg - report.v_alg
            if math.isfinite(report.eta_min_norm):
                rhs = regret_bound_rhs(
                    config,
                    dim=instance.features.dim,
                    theta_bound=instance.theta_bound,
                    feature_bound=instance.features.feature_bound,
                    gamma=report.gamma if math.isfinite(report.gamma) else 0.0,
                    beta_schedule=beta_schedule,
                    eta_min=report.eta_min_norm,
                    clairvoyant_value=report.v_clairvoyant,
                )
                bound_margin = min(bound_margin, rhs - report.final_regret)
    return (
        instance_id,
        {a: finals[a] for a in algos},
        {a: curves[a] / replications for a in algos},
        {a: bll_sums[a] / replications for a in algos},
        bound_margin,
    )


def regret_experiment(
    master_seed: int,
    budget: float,
    num_instances: int = 50,
    num_replications: int = 50,
    num_contexts: int = 10,
    num_actions: int = 5,
    horizon: int = 300,
    algos: tuple[str, ...] = ("pd1", "pd2", "naive"),
    learner: str = "ucb",
    context_mode: str = "known",
    include_aux: bool = False,
    threads: int = 1,
) -> RegretExperimentResult:
    """Benchmark regret comparison: algorithms x instances x replications.

    The reported standard error pools all replications per the summary-row
    convention (sample std over all runs divided by sqrt of their count).
    """
    tasks = [
        (
            master_seed, instance_id, num_contexts, num_actions, horizon,
            float(budget), num_replications, tuple(algos), learner,
            context_mode, include_aux,
        )
        for instance_id in range(num_instances)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_regret_worker, tasks))
    else:
        outcomes = [_regret_worker(t) for t in tasks]
    outcomes.sort(key=lambda item: item[0])

    result = RegretExperimentResult(
        budget=float(budget),
        horizon=horizon,
        num_instances=num_instances,
        num_replications=num_replications,
        algos=tuple(algos),
    )
    all_finals = {a: np.concatenate([o[1][a] for o in outcomes]) for a in algos}
    inst_curves = {a: np.stack([o[2][a] for o in outcomes]) for a in algos}
    for algo in algos:
        finals = all_finals[algo]
        result.final_mean[algo] = float(finals.mean())
        result.final_se[algo] = float(finals.std(ddof=1) / math.sqrt(finals.size))
        result.instance_finals[algo] = np.array(
            [o[1][algo].mean() for o in outcomes]
        )
        result.curve_mean[algo] = inst_curves[algo].mean(axis=0)
        if num_instances > 1:
            result.curve_se[algo] = inst_curves[algo].std(axis=0, ddof=1) / math.sqrt(
                num_instances
            )
        else:
            result.curve_se[algo] = np.zeros(horizon)
        result.bll_mean[algo] = float(np.mean([o[3][algo] for o in outcomes]))
    result.bound_margin = float(min(o[4] for o in outcomes))
    return result


def table1_experiment(
    master_seed: int,
    budgets=(2, 4, 8, 16, 32, 64),
    num_sequences: int = 200,
    num_contexts: int = 10,
    num_actions: int = 5,
    horizon: int = 300,
    instance_id: int = 0,
):
    """Competitive-ratio sweep on one instance (ground-truth driven)."""
    instance = make_instance(master_seed, instance_id, num_contexts, num_actions)
    rng = derive_rng(master_seed, STREAM.SEQUENCE_POOL, instance_id)
    return competitive_ratio_experiment(
        instance, num_sequences, tuple(budgets), rng, horizon=horizon
    )


def audit_experiment(
    master_seed: int,
    num_replications: int = 100,
    budget: float = 10.0,
    horizon: int = 300,
    num_contexts: int = 10,
    num_actions: int = 5,
    learner: str = "ucb",
) -> AuditVerdict:
    """Run PD1 and PD2 trajectories and audit every step of every trace."""
    failures: list[str] = []
    for rep in range(num_replications):
        instance = make_instance(master_seed, rep, num_contexts, num_actions)
        truth = ground_truth(instance)
        sequence = make_sequence(instance, horizon, master_seed, rep, 0)
        for revealer in ("pd1", "pd2"):
            config = RunConfig(
                budget=budget, horizon=horizon, revealer=revealer, learner=learner
            )
            report = run_trajectory(
                instance, sequence, config,
                trajectory_rngs(master_seed, rep, 0),
                truth=truth,
            )
            verdict = audit_trajectory(report.trace, budget)
            if not verdict.ok:
                failures.extend(
                    f"replication {rep} {revealer}: {msg}" for msg in verdict.failures
                )
    return AuditVerdict(ok=not failures, failures=tuple(failures))


# ---------------------------------------------------------------------------
# Coverage experiments for the concentration results.
# ---------------------------------------------------------------------------


def concentration_coverage(
    master_seed: int,
    num_trajectories: int = 1000,
    horizon: int = 200,
    num_actions: int = 2,
    num_contexts: int = 5,
    delta: float = 0.1,
    noise_std: float = 1.0,
) -> float:
    """Fraction of trajectories whose estimate stays inside the ellipsoid.

    Plays uniformly random actions with unit-variance Gaussian noise (the
    hardest noise the sub-Gaussian assumption allows) and checks the
    data-dependent radius at every step.
    """
    hits = 0
    for k in range(num_trajectories):
        rng = derive_rng(master_seed, STREAM.COVERAGE, k)
        instance = generate_synthetic_instance(
            num_contexts, num_actions, rng, noise_std=noise_std
        )
        theta = instance.theta_star
        theta_norm = float(np.linalg.norm(theta))
        lam = 1.0 / (instance.theta_bound**2)
        cset = fresh_confidence_set(instance.features.dim, lam, radius=1.0)
        table = instance.features.table
        contexts = sample_contexts(instance, horizon, rng)
        actions = rng.integers(num_actions, size=horizon)
        noise = rng.standard_normal(horizon) * noise_std
        contained = True
        for i in range(horizon):
            feature = table[contexts[i], actions[i]]
            reward = float(feature @ theta) + float(noise[i])
            cset = update_ridge(cset, feature, reward)
            err = theta - cset.theta_hat
            dist = math.sqrt(float(err @ cset.design_matrix @ err))
            if dist > containment_radius(cset, delta, theta_norm):
                contained = False
                break
        hits += contained
    return hits / num_trajectories


def bernstein_coverage(
    master_seed: int,
    num_runs: int = 1000,
    num_contexts: int = 5,
    horizon: int = 200,
    delta: float = 0.1,
) -> float:
    """Fraction of runs with |p - p_hat| <= radius simultaneously over (k, t)."""
    hits = 0
    for k in range(num_runs):
        rng = derive_rng(master_seed, STREAM.COVERAGE, 5_000_000 + k)
        raw = rng.uniform(0.0, 1.0, size=num_contexts)
        p_true = raw / raw.sum()
        estimate = fresh_context_estimate(num_contexts)
        draws = rng.choice(num_contexts, size=horizon, p=p_true)
        contained = True
        for t in range(horizon):
            estimate = update_context_counts(estimate, int(draws[t]))
            radius = bernstein_radius(estimate, delta, num_contexts, horizon)
            if np.any(np.abs(p_true - estimate.p_hat) > radius):
                contained = False
                break
        hits += contained
    return hits / num_runs
