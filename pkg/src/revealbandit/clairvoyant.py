"""Offline clairvoyant benchmark.

The clairvoyant revealer knows the true per-context values and the entire
arrival sequence, and solves

    max sum_t o_t * (u[s_t] - v)   s.t.  sum_t o_t <= B,  o_t in [0, 1].

The optimum is the greedy selection of the largest positive gaps.  A small
brute-force grid enumerator serves as an independent oracle in tests of both
the greedy solver and the online primal-dual algorithms.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import BanditInstance, ground_truth

__all__ = [
    "ArrivalSequence",
    "RevealPlan",
    "solve_clairvoyant",
    "brute_force_lp",
    "value_clairvoyant",
    "plan_step_values",
]

_BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class ArrivalSequence:
    """A realized context arrival ordering (possibly adversarial)."""

    contexts: np.ndarray

    def __post_init__(self) -> None:
        contexts = np.asarray(self.contexts, dtype=np.int64)
        if contexts.ndim != 1:
            raise ValueError("arrival sequence must be one-dimensional")
        if contexts.size and contexts.min() < 0:
            raise ValueError("context indices must be nonnegative")
        object.__setattr__(self, "contexts", contexts)

    def __len__(self) -> int:
        return int(self.contexts.size)

    def validate_for(self, instance: BanditInstance) -> None:
        if self.contexts.size and self.contexts.max() >= instance.features.num_contexts:
            raise ValueError("arrival sequence references an unknown context")


@dataclass(frozen=True)
class RevealPlan:
    """Reveal probabilities per step and the gap objective they achieve."""

    probabilities: np.ndarray
    objective: float

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.size and (probs.min() < -_BUDGET_TOL or probs.max() > 1.0 + _BUDGET_TOL):
            raise ValueError("reveal probabilities must lie in [0, 1]")
        object.__setattr__(self, "probabilities", probs)

    def total_mass(self) -> float:
        return float(self.probabilities.sum())


def solve_clairvoyant(gaps: np.ndarray, budget: float) -> RevealPlan:
    """Greedy optimum of the clairvoyant LP.

    Sets ``o_t = 1`` on the largest positive gaps until the budget runs out
    (a final fractional assignment if ``budget`` is not an integer); never
    selects a non-positive gap.  Ties broken by earliest arrival time.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    gaps = np.asarray(gaps, dtype=np.float64)
    probs = np.zeros_like(gaps)
    remaining = float(budget)
    # stable sort on -gaps: equal gaps keep arrival order
    for t in np.argsort(-gaps, kind="stable"):
        if remaining <= _BUDGET_TOL or gaps[t] <= 0.0:
            break
        take = min(1.0, remaining)
        probs[t] = take
        remaining -= take
    return RevealPlan(probabilities=probs, objective=float(probs @ gaps))


def brute_force_lp(gaps: np.ndarray, budget: float, grid: float = 1.0) -> RevealPlan:
    """Exhaustive enumeration over the discretized feasible box (tests only).

    Enumerates all ``o`` with entries in ``{0, grid, 2*grid, ..., 1}`` and
    ``sum o_t <= budget``.  At ``grid=1`` with an integer budget this is exact
    for the clairvoyant LP because an optimal vertex is integral.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    horizon = gaps.size
    if horizon > 8:
        raise ValueError("brute-force oracle limited to horizons of at most 8")
    if grid < 0.25:
        raise ValueError("grid must be at least 0.25")
    num_levels = round(1.0 / grid)
    if abs(num_levels * grid - 1.0) > 1e-12:
        raise ValueError("grid must evenly divide 1")
    levels = np.linspace(0.0, 1.0, num_levels + 1)

    best_probs = np.zeros(horizon)
    best_obj = 0.0
    for combo in itertools.product(levels, repeat=horizon):
        o = np.array(combo)
        if o.sum() > budget + _BUDGET_TOL:
            continue
        obj = float(o @ gaps)
        if obj > best_obj:
            best_obj = obj
            best_probs = o
    return RevealPlan(probabilities=best_probs, objective=best_obj)


def plan_step_values(u_sequence: np.ndarray, v_star: float, plan: RevealPlan) -> np.ndarray:
    """Per-step expected value ``o_t * u[s_t] + (1 - o_t) * v_star``."""
    u_sequence = np.asarray(u_sequence, dtype=np.float64)
    probs = plan.probabilities
    if probs.shape != u_sequence.shape:
        raise ValueError("plan length does not match sequence length")
    return probs * u_sequence + (1.0 - probs) * v_star


def value_clairvoyant(
    instance: BanditInstance, sequence: ArrivalSequence, plan: RevealPlan
) -> float:
    """Total expected value of a reveal plan on the true (unnormalized) scale.

    A revealed step earns the per-context optimum ``u[s_t]`` and an unrevealed
    step earns ``v_star``, per the clairvoyant's optimal recommender strategy.
    """
    sequence.validate_for(instance)
    truth = ground_truth(instance)
    u_sequence = truth.u_star[sequence.contexts]
    return float(plan_step_values(u_sequence, truth.v_star, plan).sum())
