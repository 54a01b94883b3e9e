"""Budgeted information revealing in linear contextual bandits.

A revealer with a limited disclosure budget decides online when to share the
arriving context with a learning recommender.  The package implements the
online primal-dual revealers (budget-only and learning-constrained), UCB and
Thompson-sampling recommenders with reveal-gated delayed feedback, the
offline clairvoyant benchmark, and a reproducible experiment harness.
"""

from .clairvoyant import (
    ArrivalSequence,
    RevealPlan,
    brute_force_lp,
    solve_clairvoyant,
    value_clairvoyant,
)
from .learner import (
    ConfidenceSet,
    ContextEstimate,
    GaussianPosterior,
    bernstein_radius,
    containment_radius,
    fresh_confidence_set,
    optimistic_actions,
    radius_gamma,
    sync_on_reveal,
    ts_sample_and_update,
    ucb_value,
    update_context_counts,
    update_ridge,
)
from .model import (
    BanditInstance,
    DegenerateInstanceError,
    FeatureMap,
    GroundTruth,
    generate_synthetic_instance,
    ground_truth,
    load_instance,
    normalize_gaps,
    realize_reward,
    sample_context,
    save_instance,
    weighted_feature,
)
from .orchestrator import (
    ExperimentReport,
    RngBundle,
    RunConfig,
    competitive_ratio_experiment,
    compute_bll,
    compute_regret,
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
    naive_step,
    pd1_step,
    pd2_step,
)

__version__ = "0.1.0"
