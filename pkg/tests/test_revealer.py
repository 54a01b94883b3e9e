"""Primal-dual revealers: step semantics, feasibility, audits."""
import math

import numpy as np
import pytest

from revealbandit.clairvoyant import brute_force_lp
from revealbandit.revealer import (
    RevealerState,
    StepInput,
    StepOutput,
    audit_step,
    default_beta_schedule,
    growth_constant,
    induction_bound_check,
    naive_step,
    pd1_step,
    pd2_step,
)

C10 = 1.1**10  # growth constant at B=10


def drive(algo, gaps, budget, beta_schedule=None, distances=None):
    """Run a revealer over a gap sequence, returning outputs and objective."""
    state = RevealerState(budget=float(budget), beta_schedule=beta_schedule)
    outputs = []
    objective = 0.0
    for t, gap in enumerate(gaps):
        if algo == "pd1":
            out = pd1_step(state, float(gap))
        else:
            dist = 0.0 if distances is None else float(distances[t])
            out = pd2_step(
                state,
                StepInput(
                    u_gap=float(gap),
                    tilde_action=0,
                    hat_action=1 if dist > 0 else 0,
                    phi_bar_distance=dist,
                ),
            )
        outputs.append(out)
        objective += out.o_t * gap
    return state, outputs, objective


class TestGrowthConstant:
    def test_values_and_limit(self):
        assert growth_constant(10) == pytest.approx(C10)
        assert growth_constant(2) == pytest.approx(2.25)
        assert growth_constant(10_000) == pytest.approx(math.e, rel=1e-4)

    def test_monotone_toward_e(self):
        values = [growth_constant(b) for b in (1, 2, 4, 8, 16, 64, 256)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] < math.e


class TestPd1Step:
    def test_fresh_state_full_gap(self):
        state = RevealerState(budget=10.0)
        out = pd1_step(state, 1.0)
        assert out.o_t == pytest.approx(1.0)
        assert out.z_t == pytest.approx(1.0)
        assert out.y_after == pytest.approx(0.06274539488251152)
        assert out.beta_used == math.inf
        assert out.e_t == 0.0

    def test_nonpositive_gap_is_a_noop(self):
        state = RevealerState(budget=10.0, dual_y=0.2, spent=1.0)
        out = pd1_step(state, -0.3)
        assert out.o_t == 0.0 and out.z_t == 0.0
        assert state.dual_y == 0.2 and state.spent == 1.0

    def test_exhausted_budget_caps_o_at_zero(self):
        state = RevealerState(budget=5.0, spent=5.0)
        out = pd1_step(state, 0.8)
        assert out.o_t == 0.0
        assert out.z_t == pytest.approx(0.8)  # dual constraint still covered

    def test_partial_budget_cap(self):
        state = RevealerState(budget=5.0, spent=4.7)
        out = pd1_step(state, 0.8)
        assert out.o_t == pytest.approx(0.3)


class TestPd2Step:
    def test_zero_distance_reduces_to_pd1(self):
        gaps = np.random.default_rng(0).uniform(-1, 1, size=50)
        _, outs1, _ = drive("pd1", gaps, 10)
        _, outs2, _ = drive("pd2", gaps, 10, beta_schedule=np.full(50, 0.5))
        for o1, o2 in zip(outs1, outs2):
            assert o1.o_t == o2.o_t
            assert o1.z_t == o2.z_t
            assert o1.y_after == o2.y_after
        assert outs2[0].beta_used == 0.0  # distance 0 forces beta to 0
        assert outs2[0].e_t == 0.0

    def test_boost_branch_hand_case(self):
        state = RevealerState(budget=10.0, beta_schedule=np.array([0.2]))
        out = pd2_step(
            state,
            StepInput(u_gap=0.4, tilde_action=0, hat_action=1, phi_bar_distance=0.5),
        )
        assert out.e_t == pytest.approx(1.2)  # 1/0.5 - 0.2/0.25
        assert out.o_t == pytest.approx(1.0)  # min(0.4 + 0.6, 10, 1)
        assert out.z_t == pytest.approx(1.0)
        assert out.beta_used == pytest.approx(0.2)
        # learning constraint holds with equality margin
        assert 0.5 * (1 - out.o_t) <= out.beta_used + 1e-12

    def test_guard_resets_when_gap_below_dual(self):
        state = RevealerState(budget=10.0, dual_y=0.5, beta_schedule=np.array([0.2]))
        out = pd2_step(
            state,
            StepInput(u_gap=0.1, tilde_action=0, hat_action=1, phi_bar_distance=0.5),
        )
        assert out.e_t == 0.0
        assert out.o_t == 0.0
        assert out.beta_used == pytest.approx(0.5)
        assert 0.5 * (1 - out.o_t) <= out.beta_used + 1e-12

    def test_budget_raise_keeps_constraint_feasible(self):
        # remaining budget 0.4 < forced o, so beta must rise to dist*(1-B+spent)
        state = RevealerState(
            budget=10.0, spent=9.6, beta_schedule=np.array([0.05])
        )
        out = pd2_step(
            state,
            StepInput(u_gap=0.9, tilde_action=0, hat_action=1, phi_bar_distance=0.5),
        )
        assert out.o_t == pytest.approx(0.4)
        assert 0.5 * (1 - out.o_t) <= out.beta_used + 1e-12

    def test_requires_schedule(self):
        state = RevealerState(budget=10.0)
        with pytest.raises(ValueError, match="beta schedule"):
            pd2_step(state, StepInput(u_gap=0.5))


class TestNaive:
    def test_fixed_probability(self):
        assert naive_step(30, 300) == pytest.approx(0.1)
        assert naive_step(300, 300) == 1.0
        assert naive_step(10, 300) == pytest.approx(1 / 30)

    def test_invalid_horizon(self):
        with pytest.raises(ValueError):
            naive_step(10, 0)


class TestBetaSchedule:
    def test_forced_budget_e(self):
        beta = default_beta_schedule(1.0, math.e, 1)
        assert beta[0] == pytest.approx(8.737696080254162)

    def test_sqrt_t_scaling(self):
        beta = default_beta_schedule(1.0, 10.0, 4)
        assert beta[3] == pytest.approx(beta[0] / 2)

    def test_linear_in_delta_min(self):
        one = default_beta_schedule(1.0, 10.0, 5)
        two = default_beta_schedule(2.0, 10.0, 5)
        assert two == pytest.approx(2 * one)

    def test_rejects_small_budget(self):
        with pytest.raises(ValueError, match="at least 2"):
            default_beta_schedule(1.0, 1.5, 10)


class TestAuditStep:
    def test_zero_o_step_is_vacuous_but_checked(self):
        state = RevealerState(budget=10.0, dual_y=0.5)
        before = state.snapshot()
        out = pd1_step(state, 0.2)  # gap below y: no-op
        verdict = audit_step(before, StepInput(u_gap=0.2), out, eta_min=0.1)
        assert verdict.ok

    def test_ratio_formula_on_fresh_full_gap(self):
        state = RevealerState(budget=10.0)
        before = state.snapshot()
        out = pd1_step(state, 1.0)
        # dual increment is 1/(c-1) + 1, primal increment 1
        assert out.dual_increment == pytest.approx(1 / (C10 - 1) + 1)
        verdict = audit_step(before, StepInput(u_gap=1.0), out, eta_min=1.0)
        assert verdict.ok

    def test_detects_budget_violation(self):
        state = RevealerState(budget=5.0, spent=4.9)
        before = state.snapshot()
        out = pd1_step(state, 0.5)
        corrupted = StepOutput(
            o_t=0.5,  # exceeds the remaining 0.1
            z_t=out.z_t,
            e_t=out.e_t,
            beta_used=out.beta_used,
            dual_increment=out.dual_increment,
            primal_increment=0.25,
            y_after=out.y_after,
            spent_after=5.4,
        )
        verdict = audit_step(before, StepInput(u_gap=0.5), corrupted, eta_min=0.5)
        assert not verdict.ok
        assert any("budget" in f for f in verdict.failures)

    def test_detects_ratio_violation(self):
        state = RevealerState(budget=10.0)
        before = state.snapshot()
        out = pd1_step(state, 1.0)
        verdict = audit_step(before, StepInput(u_gap=1.0), out, eta_min=1e-9)
        assert verdict.ok  # generous bound
        # with an (incorrectly) huge eta the bound tightens below the true ratio
        verdict = audit_step(before, StepInput(u_gap=1.0), out, eta_min=1e9)
        assert not verdict.ok

    def test_algorithm_outputs_always_pass(self):
        rng = np.random.default_rng(4)
        for algo in ("pd1", "pd2"):
            for trial in range(40):
                budget = float(rng.integers(2, 12))
                horizon = int(rng.integers(5, 60))
                gaps = rng.uniform(-1, 1, size=horizon)
                dists = rng.uniform(0, 2, size=horizon) * rng.integers(
                    0, 2, size=horizon
                )
                schedule = default_beta_schedule(1.0, budget, horizon)
                state = RevealerState(budget=budget, beta_schedule=schedule)
                positive = gaps[gaps > 0]
                eta = float(positive.min()) if positive.size else math.inf
                for t in range(horizon):
                    before = state.snapshot()
                    if algo == "pd1":
                        inp = StepInput(u_gap=float(gaps[t]))
                        out = pd1_step(state, float(gaps[t]))
                    else:
                        inp = StepInput(
                            u_gap=float(gaps[t]),
                            tilde_action=0,
                            hat_action=1 if dists[t] > 0 else 0,
                            phi_bar_distance=float(dists[t]),
                        )
                        out = pd2_step(state, inp)
                    verdict = audit_step(before, inp, out, eta)
                    assert verdict.ok, (algo, trial, t, verdict.failures)


class TestInductionBound:
    def test_all_zero_trace(self):
        _, outputs, _ = drive("pd1", [-0.5, -0.1], 10)
        assert induction_bound_check(outputs, 10).ok

    def test_full_budget_forces_dual_to_one(self):
        # repeated unit gaps spend the budget in B steps; y must reach 1
        _, outputs, _ = drive("pd1", np.ones(12), 10)
        assert induction_bound_check(outputs, 10).ok
        assert outputs[-1].y_after >= 1.0 - 1e-9

    def test_random_traces_over_seeds(self):
        rng = np.random.default_rng(11)
        for seed in range(100):
            gaps = rng.uniform(-1, 1, size=50)
            budget = float(rng.integers(2, 8))
            _, outputs, _ = drive("pd1", gaps, budget)
            assert induction_bound_check(outputs, budget).ok

    def test_detects_corrupted_dual(self):
        _, outputs, _ = drive("pd1", np.ones(12), 10)
        bad = list(outputs)
        last = bad[-1]
        bad[-1] = StepOutput(
            o_t=last.o_t, z_t=last.z_t, e_t=last.e_t, beta_used=last.beta_used,
            dual_increment=last.dual_increment, primal_increment=last.primal_increment,
            y_after=0.5, spent_after=last.spent_after,
        )
        assert not induction_bound_check(bad, 10).ok


class TestRevealerInvariants:
    def test_budget_safety_and_monotone_dual(self):
        rng = np.random.default_rng(7)
        for algo in ("pd1", "pd2"):
            for _ in range(50):
                budget = float(rng.integers(2, 10))
                horizon = int(rng.integers(10, 80))
                gaps = rng.uniform(-1, 1, size=horizon)
                dists = rng.uniform(0, 1.5, size=horizon)
                schedule = default_beta_schedule(1.0, budget, horizon)
                state, outputs, _ = drive(
                    algo, gaps, budget,
                    beta_schedule=schedule,
                    distances=dists if algo == "pd2" else None,
                )
                assert state.spent <= budget + 1e-9
                ys = [0.0] + [o.y_after for o in outputs]
                assert all(b >= a - 1e-12 for a, b in zip(ys, ys[1:]))
                for gap, dist, out in zip(gaps, dists, outputs):
                    if out.o_t > 0:
                        assert gap > 0
                    if algo == "pd2":
                        assert dist * (1 - out.o_t) <= out.beta_used + 1e-12

    def test_no_reveal_after_dual_saturates(self):
        _, outputs, _ = drive("pd1", np.ones(30), 5)
        saturated = False
        for out in outputs:
            if saturated:
                assert out.o_t == 0.0
            if out.y_after >= 1.0:
                saturated = True

    def test_competitive_ratio_on_random_gap_systems(self):
        rng = np.random.default_rng(23)
        for trial in range(500):
            horizon = int(rng.integers(1, 9))
            budget = int(rng.integers(2, 5))
            gaps = np.minimum(rng.uniform(-1, 1, size=horizon), 1.0)
            positive = gaps[gaps > 0]
            if not positive.size:
                continue
            eta = float(positive.min())
            bound = eta * (1 - 1 / growth_constant(budget))
            optimum = brute_force_lp(gaps, budget, grid=1.0).objective
            schedule = default_beta_schedule(1.0, budget, horizon)
            for algo in ("pd1", "pd2"):
                _, _, objective = drive(algo, gaps, budget, beta_schedule=schedule)
                if optimum > 0:
                    assert objective / optimum >= bound - 1e-9, (trial, algo)
