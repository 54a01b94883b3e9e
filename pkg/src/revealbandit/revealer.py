"""Online primal-dual revealers and their feasibility/ratio auditor.

Two state machines decide the reveal probability ``o_t`` online:

* PD1 tracks only the budget.  Whenever the dual variable ``y`` is below 1
  and the (normalized) gap ``u - v`` exceeds ``y``, it reveals with
  probability ``min(gap, remaining budget)`` and ratchets ``y`` up.
* PD2 additionally carries a learning constraint: when the two agents'
  weighted-feature actions diverge by more than the per-step slack ``beta_t``,
  a dual certificate ``e_t`` forces the reveal probability upward.  ``beta_t``
  is auto-adjusted to keep the constraint feasible.

Both are guaranteed a fraction ``eta_min * (1 - 1/c)`` of the clairvoyant
optimum, with ``c = (1 + 1/B)^B``.  The auditor re-checks the proof
obligations (primal/dual feasibility, the per-step dual/primal ratio, and the
dual-growth induction bound) on recorded traces.

All gap inputs are assumed normalized to at most 1; callers clamp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RevealerState",
    "StepInput",
    "StepOutput",
    "AuditVerdict",
    "pd1_step",
    "pd2_step",
    "naive_step",
    "default_beta_schedule",
    "audit_step",
    "induction_bound_check",
]

_FEAS_TOL = 1e-9


def growth_constant(budget: float) -> float:
    """The primal-dual growth constant ``c = (1 + 1/B)^B`` (tends to e)."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    return (1.0 + 1.0 / budget) ** budget


@dataclass
class RevealerState:
    """Single-owner mutable state of one primal-dual trajectory."""

    budget: float
    dual_y: float = 0.0
    spent: float = 0.0
    c_const: float = field(default=0.0)
    beta_schedule: np.ndarray | None = None
    t: int = 0

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if not self.c_const:
            self.c_const = growth_constant(self.budget)

    def snapshot(self) -> "RevealerState":
        """Frozen copy for auditing (shares the read-only beta schedule)."""
        return RevealerState(
            budget=self.budget,
            dual_y=self.dual_y,
            spent=self.spent,
            c_const=self.c_const,
            beta_schedule=self.beta_schedule,
            t=self.t,
        )

    def _initial_beta(self) -> float:
        if self.beta_schedule is None:
            raise ValueError("PD2 requires a beta schedule")
        return float(self.beta_schedule[self.t])


@dataclass(frozen=True)
class StepInput:
    """One step's revealer inputs.

    ``u_gap`` is the normalized gap between the contextual and the
    context-averaged optimistic values (ground truth or learner estimates);
    ``phi_bar_distance`` is the Euclidean distance between the two agents'
    weighted features, forced to 0 when the actions agree.
    """

    u_gap: float
    tilde_action: int = 0
    hat_action: int = 0
    phi_bar_distance: float = 0.0

    def __post_init__(self) -> None:
        if not -1.0 - 1e-9 <= self.u_gap <= 1.0 + 1e-9:
            raise ValueError(f"u_gap={self.u_gap} outside the normalized range [-1, 1]")
        if self.phi_bar_distance < 0:
            raise ValueError("phi_bar_distance must be nonnegative")
        if self.tilde_action == self.hat_action and self.phi_bar_distance != 0.0:
            object.__setattr__(self, "phi_bar_distance", 0.0)

    @property
    def actions_differ(self) -> bool:
        return self.tilde_action != self.hat_action


@dataclass(frozen=True)
class StepOutput:
    """One step's decision and dual certificates.

    ``beta_used`` is the possibly-adjusted slack actually in force
    (``inf`` for PD1, where the learning constraint does not exist).
    ``dual_increment`` is ``B*dy + z + (beta - dist)*e`` and
    ``primal_increment`` is ``o * u_gap``.
    """

    o_t: float
    z_t: float
    e_t: float
    beta_used: float
    dual_increment: float
    primal_increment: float
    y_after: float
    spent_after: float


def _dual_increment(b_dy: float, z: float, beta: float, dist: float, e: float) -> float:
    # guard inf * 0 when PD1 reports beta_used = inf with e = 0
    coupling = 0.0 if e == 0.0 else (beta - dist) * e
    return b_dy + z + coupling


def pd1_step(state: RevealerState, u_gap: float) -> StepOutput:
    """Budget-only primal-dual step.

    Requires ``u_gap <= 1`` (normalized).  Reveals ``min(gap, remaining)``
    whenever ``y < 1`` and the gap exceeds ``y``; updates
    ``y <- y(1 + o/B) + o/((c-1) B)``.
    """
    budget, c = state.budget, state.c_const
    y0 = state.dual_y
    if y0 < 1.0 and u_gap - y0 > 0.0:
        z = u_gap - y0
        o = min(u_gap, budget - state.spent)
        o = max(o, 0.0)
        y1 = y0 * (1.0 + o / budget) + o / ((c - 1.0) * budget)
    else:
        z = 0.0
        o = 0.0
        y1 = y0
    state.dual_y = y1
    state.spent += o
    state.t += 1
    return StepOutput(
        o_t=o,
        z_t=z,
        e_t=0.0,
        beta_used=math.inf,
        dual_increment=_dual_increment(budget * (y1 - y0), z, math.inf, 0.0, 0.0),
        primal_increment=o * u_gap,
        y_after=y1,
        spent_after=state.spent,
    )


def pd2_step(state: RevealerState, inp: StepInput) -> StepOutput:
    """Primal-dual step with the learning constraint.

    Follows the published pseudocode branch-for-branch:

    a) actions differ, ``beta_t < dist`` and the gap is positive: set
       ``e_t = 1/dist - beta_t/dist^2``; if additionally ``gap <= y``, reset
       ``beta_t = dist`` and ``e_t = 0`` (the case where the certificate is
       not enough to make ``o_t`` positive);
    b) otherwise ``beta_t = dist`` and ``e_t = 0``;
    c) if ``y < 1`` and ``gap - y + dist*e > 0``: raise
       ``beta_t`` to at least ``dist * (1 - B + spent)``, set
       ``z_t = gap - y + dist*e``, ``o_t = min(gap + dist*e, remaining, 1)``
       and ratchet ``y``;
    d) else ``beta_t = dist``, ``z_t = o_t = 0``.
    """
    budget, c = state.budget, state.c_const
    y0 = state.dual_y
    spent0 = state.spent
    gap = inp.u_gap
    dist = inp.phi_bar_distance if inp.actions_differ else 0.0

    beta = state._initial_beta()
    if inp.actions_differ and beta < dist and gap > 0.0:
        e = 1.0 / dist - beta / (dist * dist)
        if gap - y0 <= 0.0:
            beta = dist
            e = 0.0
    else:
        beta = dist
        e = 0.0

    coupled = dist * e
    if y0 < 1.0 and gap - y0 + coupled > 0.0:
        beta = max(beta, dist * (1.0 - budget + spent0))
        z = gap - y0 + coupled
        o = min(gap + coupled, budget - spent0, 1.0)
        o = max(o, 0.0)
        y1 = y0 * (1.0 + o / budget) + o / ((c - 1.0) * budget)
    else:
        beta = dist
        z = 0.0
        o = 0.0
        y1 = y0
    state.dual_y = y1
    state.spent = spent0 + o
    state.t += 1
    return StepOutput(
        o_t=o,
        z_t=z,
        e_t=e,
        beta_used=beta,
        dual_increment=_dual_increment(budget * (y1 - y0), z, beta, dist, e),
        primal_increment=o * gap,
        y_after=y1,
        spent_after=state.spent,
    )


def naive_step(budget: float, horizon: int) -> float:
    """The fixed-probability baseline: reveal with probability ``B/T``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return min(budget / horizon, 1.0)


def default_beta_schedule(
    delta_min: float, budget: float, horizon: int, scale: float = 1.2
) -> np.ndarray:
    """Benchmark slack schedule ``beta_t = s * dmin * ln(10) * sqrt(10) / (sqrt(t) * ln(B))``.

    Natural logarithms throughout (recorded convention; the source leaves the
    base unspecified).  Requires ``B >= 2`` so the denominator is positive.
    """
    if budget < 2:
        raise ValueError("beta schedule requires a budget of at least 2")
    if delta_min <= 0:
        raise ValueError("delta_min must be positive")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    t = np.arange(1, horizon + 1, dtype=np.float64)
    return scale * delta_min * math.log(10.0) * math.sqrt(10.0) / (np.sqrt(t) * math.log(budget))


# ---------------------------------------------------------------------------
# Auditing: the proof obligations, re-checked on produced outputs.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditVerdict:
    ok: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def audit_step(
    before: RevealerState,
    inp: StepInput,
    out: StepOutput,
    eta_min: float,
    tol: float = _FEAS_TOL,
) -> AuditVerdict:
    """Check one step's feasibility and the dual/primal ratio bound.

    ``before`` is the state snapshot taken just before the step.  Verifies
    dual feasibility (nonnegative certificates; the arriving dual constraint
    is covered whenever ``o_t > 0``), primal feasibility (budget and the
    learning constraint with ``beta_used``), consistency of the ``y`` update,
    and ``dual_increment / primal_increment <= (1 + 1/(c-1)) / eta_min``.
    """
    failures: list[str] = []
    budget, c = before.budget, before.c_const
    dist = inp.phi_bar_distance if inp.actions_differ else 0.0

    if out.o_t < -tol or out.o_t > 1.0 + tol:
        failures.append(f"o_t={out.o_t} outside [0, 1]")
    if out.z_t < -tol:
        failures.append(f"z_t={out.z_t} negative")
    if out.e_t < -tol:
        failures.append(f"e_t={out.e_t} negative")
    if out.y_after < before.dual_y - tol:
        failures.append("dual variable decreased")
    if before.spent + out.o_t > budget + tol:
        failures.append(
            f"budget violation: spent {before.spent + out.o_t} of {budget}"
        )
    if math.isfinite(out.beta_used) or out.e_t != 0.0:
        if dist * (1.0 - out.o_t) > out.beta_used + tol:
            failures.append("learning constraint violated")
    if out.o_t > 0.0:
        if inp.u_gap <= 0.0:
            failures.append("revealed on a non-positive gap")
        if before.dual_y + out.z_t - dist * out.e_t < inp.u_gap - tol:
            failures.append("dual constraint not covered on a revealing step")

    # y must follow the multiplicative update rule
    if out.o_t > 0.0 or out.z_t > 0.0:
        expected_y = before.dual_y * (1.0 + out.o_t / budget) + out.o_t / (
            (c - 1.0) * budget
        )
    else:
        expected_y = before.dual_y
    if abs(out.y_after - expected_y) > tol:
        failures.append(f"y update inconsistent: {out.y_after} != {expected_y}")

    if out.primal_increment > 0.0:
        ratio = out.dual_increment / out.primal_increment
        bound = (1.0 + 1.0 / (c - 1.0)) / eta_min
        if ratio > bound + tol:
            failures.append(f"dual/primal ratio {ratio} exceeds bound {bound}")

    return AuditVerdict(ok=not failures, failures=tuple(failures))


def induction_bound_check(
    trace, budget: float, tol: float = _FEAS_TOL
) -> AuditVerdict:
    """Verify the dual-growth lower bound along a completed run.

    After every step, ``y >= (c^(sum(o)/B) - 1) / (c - 1)``; in particular a
    fully spent budget forces ``y >= 1``.
    """
    c = growth_constant(budget)
    failures: list[str] = []
    cumulative = 0.0
    for i, out in enumerate(trace):
        cumulative += out.o_t
        bound = (c ** (cumulative / budget) - 1.0) / (c - 1.0)
        if out.y_after < bound - tol:
            failures.append(
                f"step {i}: y={out.y_after} below induction bound {bound}"
            )
    if cumulative >= budget - tol and trace and trace[-1].y_after < 1.0 - tol:
        failures.append("budget exhausted but dual variable below 1")
    return AuditVerdict(ok=not failures, failures=tuple(failures))
