"""Clairvoyant LP: greedy solver against the brute-force oracle."""
import numpy as np
import pytest

from revealbandit.clairvoyant import (
    ArrivalSequence,
    RevealPlan,
    brute_force_lp,
    plan_step_values,
    solve_clairvoyant,
    value_clairvoyant,
)
from revealbandit.model import BanditInstance, FeatureMap


class TestSolveClairvoyant:
    def test_selects_top_positive_gaps(self):
        plan = solve_clairvoyant(np.array([0.3, -0.3, 0.1, 0.05]), 2)
        assert plan.objective == pytest.approx(0.4)
        assert plan.probabilities == pytest.approx([1.0, 0.0, 1.0, 0.0])

    def test_all_negative_gaps_keep_budget(self):
        plan = solve_clairvoyant(np.array([-0.1, -0.5]), 3)
        assert plan.objective == 0.0
        assert plan.total_mass() == 0.0

    def test_unconstrained_selection(self):
        gaps = np.array([0.2, 0.4, 0.1])
        plan = solve_clairvoyant(gaps, 10)
        assert plan.objective == pytest.approx(gaps.sum())
        assert plan.probabilities == pytest.approx([1.0, 1.0, 1.0])

    def test_fractional_budget(self):
        plan = solve_clairvoyant(np.array([0.5, 0.4]), 1.5)
        assert plan.probabilities == pytest.approx([1.0, 0.5])
        assert plan.objective == pytest.approx(0.7)

    def test_ties_break_earliest(self):
        plan = solve_clairvoyant(np.array([0.3, 0.3, 0.3]), 1)
        assert plan.probabilities == pytest.approx([1.0, 0.0, 0.0])

    def test_never_selects_nonpositive(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            gaps = rng.uniform(-1, 1, size=rng.integers(1, 9))
            plan = solve_clairvoyant(gaps, int(rng.integers(0, 5)))
            assert np.all(plan.probabilities[gaps <= 0] == 0.0)

    def test_monotone_in_budget(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            gaps = rng.uniform(-1, 1, size=6)
            objectives = [solve_clairvoyant(gaps, b).objective for b in range(0, 7)]
            assert np.all(np.diff(objectives) >= -1e-12)


class TestBruteForce:
    def test_matches_greedy_on_hand_case(self):
        gaps = np.array([0.3, -0.3, 0.1, 0.05])
        assert brute_force_lp(gaps, 2, grid=1.0).objective == pytest.approx(0.4)

    def test_zero_budget(self):
        plan = brute_force_lp(np.array([0.5, 0.2]), 0)
        assert plan.objective == 0.0
        assert plan.total_mass() == 0.0

    def test_single_step(self):
        plan = brute_force_lp(np.array([0.5]), 1)
        assert plan.probabilities == pytest.approx([1.0])
        assert plan.objective == pytest.approx(0.5)

    def test_refuses_large_horizons(self):
        with pytest.raises(ValueError, match="at most 8"):
            brute_force_lp(np.zeros(9), 1)
        with pytest.raises(ValueError, match="grid"):
            brute_force_lp(np.zeros(3), 1, grid=0.1)

    def test_agrees_with_greedy_exactly(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            horizon = int(rng.integers(1, 9))
            gaps = np.round(rng.uniform(-1, 1, size=horizon), 6)
            budget = int(rng.integers(0, 5))
            greedy = solve_clairvoyant(gaps, budget).objective
            brute = brute_force_lp(gaps, budget, grid=1.0).objective
            assert greedy == pytest.approx(brute, abs=1e-12)

    def test_fine_grid_never_beats_greedy(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            gaps = rng.uniform(-1, 1, size=4)
            budget = int(rng.integers(1, 4))
            brute = brute_force_lp(gaps, budget, grid=0.25).objective
            greedy = solve_clairvoyant(gaps, budget).objective
            assert brute <= greedy + 1e-12


class TestValueClairvoyant:
    @pytest.fixture()
    def two_context_instance(self):
        # single action; per-context values 0.9 and 0.4, v* = 0.6
        table = np.zeros((2, 1, 1))
        table[0, 0, 0] = 0.9
        table[1, 0, 0] = 0.4
        return BanditInstance(
            features=FeatureMap(table),
            theta_star=np.array([1.0]),
            context_dist=np.array([0.4, 0.6]),
            noise_std=0.0,
            theta_bound=1.0,
        )

    def test_never_reveal_earns_v_star(self, two_context_instance):
        seq = ArrivalSequence(np.array([0, 1, 1]))
        plan = RevealPlan(probabilities=np.zeros(3), objective=0.0)
        value = value_clairvoyant(two_context_instance, seq, plan)
        assert value == pytest.approx(3 * 0.6)

    def test_always_reveal_earns_u_sequence(self, two_context_instance):
        seq = ArrivalSequence(np.array([0, 1]))
        plan = RevealPlan(probabilities=np.ones(2), objective=0.0)
        value = value_clairvoyant(two_context_instance, seq, plan)
        assert value == pytest.approx(0.9 + 0.4)

    def test_mixed_plan_hand_value(self, two_context_instance):
        seq = ArrivalSequence(np.array([0, 1]))
        plan = RevealPlan(probabilities=np.array([1.0, 0.0]), objective=0.0)
        value = value_clairvoyant(two_context_instance, seq, plan)
        assert value == pytest.approx(1.5)

    def test_length_mismatch(self, two_context_instance):
        seq = ArrivalSequence(np.array([0, 1]))
        plan = RevealPlan(probabilities=np.zeros(3), objective=0.0)
        with pytest.raises(ValueError, match="length"):
            value_clairvoyant(two_context_instance, seq, plan)

    def test_sequence_validation(self, two_context_instance):
        seq = ArrivalSequence(np.array([0, 5]))
        plan = RevealPlan(probabilities=np.zeros(2), objective=0.0)
        with pytest.raises(ValueError, match="unknown context"):
            value_clairvoyant(two_context_instance, seq, plan)


class TestPlanStepValues:
    def test_telescopes_to_total(self):
        rng = np.random.default_rng(4)
        u_seq = rng.uniform(0, 1, size=10)
        plan = solve_clairvoyant(u_seq - 0.5, 3)
        steps = plan_step_values(u_seq, 0.5, plan)
        expected = plan.probabilities @ u_seq + (1 - plan.probabilities).sum() * 0.5
        assert steps.sum() == pytest.approx(expected)
