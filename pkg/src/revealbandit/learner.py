"""Confidence sets, optimistic action selection, and context estimation.

Both agents estimate the reward parameter with a ridge regression whose
ellipsoidal confidence set drives optimism.  The revealer's set updates every
step; the recommender's set is a frozen copy that only refreshes when the
revealer discloses the history (a reveal), which is what makes the
recommender's feedback effectively delayed.

Also contains the experimental Gaussian-posterior (Thompson sampling)
recommender and the empirical-Bernstein estimator of the context
distribution for the unknown-distribution regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import FeatureMap, weighted_feature_table

__all__ = [
    "ConfidenceSet",
    "GaussianPosterior",
    "ContextEstimate",
    "fresh_confidence_set",
    "radius_gamma",
    "update_ridge",
    "ucb_value",
    "ucb_values",
    "optimistic_actions",
    "sync_on_reveal",
    "containment_radius",
    "fresh_posterior",
    "ts_sample",
    "ts_update",
    "ts_sample_and_update",
    "fresh_context_estimate",
    "update_context_counts",
    "bernstein_radius",
]


@dataclass(frozen=True)
class ConfidenceSet:
    """Regularized least-squares estimate with its ellipsoid radius.

    ``design_matrix`` is ``V = lam*I + sum phi phi^T``; ``theta_hat`` solves
    ``V theta = g``.  ``vinv`` is refactored from scratch on every update (no
    incremental inverse; dimensions are tiny and drift is not worth it).
    ``last_sync`` records the step at which a recommender copy was taken.
    """

    design_matrix: np.ndarray
    response_sum: np.ndarray
    theta_hat: np.ndarray
    vinv: np.ndarray
    radius: float
    lam: float
    last_sync: int = 0

    @property
    def dim(self) -> int:
        return self.response_sum.size


def fresh_confidence_set(dim: int, lam: float, radius: float) -> ConfidenceSet:
    if lam <= 0:
        raise ValueError("regularization lam must be positive")
    if radius < 1:
        raise ValueError("ellipsoid radius must be at least 1")
    return ConfidenceSet(
        design_matrix=lam * np.eye(dim),
        response_sum=np.zeros(dim),
        theta_hat=np.zeros(dim),
        vinv=np.eye(dim) / lam,
        radius=radius,
        lam=lam,
    )


def radius_gamma(
    delta: float, dim: int, horizon: int, theta_bound: float, feature_bound: float
) -> float:
    """Closed-form ellipsoid radius ``1 + sqrt(2 ln(1/delta) + d ln(1 + T W^2 L^2 / d))``.

    Paired with regularization ``lam = 1 / W^2``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    w2l2 = theta_bound * theta_bound * feature_bound * feature_bound
    return 1.0 + math.sqrt(
        2.0 * math.log(1.0 / delta) + dim * math.log(1.0 + horizon * w2l2 / dim)
    )


def update_ridge(cset: ConfidenceSet, feature: np.ndarray, reward: float) -> ConfidenceSet:
    """Rank-one update ``V += phi phi^T``, ``g += x phi``; refits theta_hat."""
    feature = np.asarray(feature, dtype=np.float64)
    if not (np.all(np.isfinite(feature)) and math.isfinite(reward)):
        raise ValueError("non-finite ridge update")
    design = cset.design_matrix + np.outer(feature, feature)
    response = cset.response_sum + reward * feature
    vinv = np.linalg.inv(design)
    return replace(
        cset,
        design_matrix=design,
        response_sum=response,
        theta_hat=vinv @ response,
        vinv=vinv,
    )


def ucb_value(cset: ConfidenceSet, feature: np.ndarray) -> float:
    """Optimistic value ``<phi, theta_hat> + radius * ||phi||_{V^-1}``.

    Equals ``max_{theta in ellipsoid} <phi, theta>``, so enumerating actions
    realizes the joint argmax over actions and parameters.
    """
    feature = np.asarray(feature, dtype=np.float64)
    quad = float(feature @ cset.vinv @ feature)
    return float(feature @ cset.theta_hat) + cset.radius * math.sqrt(max(quad, 0.0))


def ucb_values(cset: ConfidenceSet, features: np.ndarray) -> np.ndarray:
    """Batched :func:`ucb_value` over the rows of an (n, d) array."""
    mean = features @ cset.theta_hat
    quad = np.einsum("nd,de,ne->n", features, cset.vinv, features)
    return mean + cset.radius * np.sqrt(np.maximum(quad, 0.0))


def optimistic_actions(
    cset: ConfidenceSet,
    features: FeatureMap,
    selector,
    dist: np.ndarray | None = None,
) -> tuple[int, float]:
    """Optimistic action and value for a context or for the weighted features.

    ``selector`` is a context index (the contextual decision) or the string
    ``"weighted"`` (the context-averaged decision, using ``dist`` -- the true
    distribution or a plug-in estimate).  Ties break to the lowest index.
    """
    if selector == "weighted":
        if dist is None:
            raise ValueError("weighted selector requires a distribution")
        rows = weighted_feature_table(features, dist)
    else:
        rows = features.table[int(selector)]
    values = ucb_values(cset, rows)
    best = int(np.argmax(values))
    return best, float(values[best])


def sync_on_reveal(
    recommender: ConfidenceSet, revealer: ConfidenceSet, t: int
) -> ConfidenceSet:
    """Recommender adopts a copy of the revealer's set at reveal time ``t``.

    The copy then stays frozen until the next reveal.  The previous
    recommender set is discarded (argument kept for call-site clarity).
    """
    del recommender
    return ConfidenceSet(
        design_matrix=revealer.design_matrix.copy(),
        response_sum=revealer.response_sum.copy(),
        theta_hat=revealer.theta_hat.copy(),
        vinv=revealer.vinv.copy(),
        radius=revealer.radius,
        lam=revealer.lam,
        last_sync=t,
    )


def containment_radius(cset: ConfidenceSet, delta: float, theta_norm: float) -> float:
    """Data-dependent radius ``sqrt(2 ln(1/delta) + ln(det V / lam^d)) + sqrt(lam) ||theta||``.

    This is the high-probability bound the coverage experiments check; the
    closed-form :func:`radius_gamma` upper-bounds it.
    """
    sign, logdet = np.linalg.slogdet(cset.design_matrix)
    if sign <= 0:
        raise ValueError("design matrix is not positive definite")
    log_ratio = logdet - cset.dim * math.log(cset.lam)
    return math.sqrt(2.0 * math.log(1.0 / delta) + log_ratio) + math.sqrt(cset.lam) * theta_norm


# ---------------------------------------------------------------------------
# Gaussian-posterior recommender (experimental).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianPosterior:
    """Gaussian belief over the reward parameter, stored as a precision matrix."""

    precision: np.ndarray
    weighted_sum: np.ndarray
    mean: np.ndarray


def fresh_posterior(dim: int, prior_precision: float = 1.0) -> GaussianPosterior:
    if prior_precision <= 0:
        raise ValueError("prior precision must be positive")
    return GaussianPosterior(
        precision=prior_precision * np.eye(dim),
        weighted_sum=np.zeros(dim),
        mean=np.zeros(dim),
    )


def ts_sample(posterior: GaussianPosterior, rng: np.random.Generator) -> np.ndarray:
    """Draw ``theta ~ N(mean, precision^-1)`` via a Cholesky factor.

    Consumes exactly ``dim`` standard normals, keeping streams aligned.
    """
    cov = np.linalg.inv(posterior.precision)
    chol = np.linalg.cholesky(cov)
    return posterior.mean + chol @ rng.standard_normal(posterior.mean.size)


def ts_update(
    posterior: GaussianPosterior, feature: np.ndarray, reward: float
) -> GaussianPosterior:
    """Conjugate update with the feature actually played."""
    feature = np.asarray(feature, dtype=np.float64)
    precision = posterior.precision + np.outer(feature, feature)
    weighted = posterior.weighted_sum + reward * feature
    return GaussianPosterior(
        precision=precision,
        weighted_sum=weighted,
        mean=np.linalg.solve(precision, weighted),
    )


def ts_sample_and_update(
    posterior: GaussianPosterior,
    feature_used: np.ndarray,
    reward: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, GaussianPosterior]:
    """Sample from the current posterior, then apply the conjugate update."""
    theta = ts_sample(posterior, rng)
    return theta, ts_update(posterior, feature_used, reward)


# ---------------------------------------------------------------------------
# Context-distribution estimation (unknown-distribution regime).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContextEstimate:
    """Empirical context frequencies with per-context observation counts."""

    counts: np.ndarray
    p_hat: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def fresh_context_estimate(num_contexts: int) -> ContextEstimate:
    return ContextEstimate(
        counts=np.zeros(num_contexts, dtype=np.int64),
        p_hat=np.zeros(num_contexts),
    )


def update_context_counts(estimate: ContextEstimate, context: int) -> ContextEstimate:
    if not 0 <= context < estimate.counts.size:
        raise ValueError("context index out of range")
    counts = estimate.counts.copy()
    counts[context] += 1
    return ContextEstimate(counts=counts, p_hat=counts / counts.sum())


def bernstein_radius(
    estimate: ContextEstimate, delta: float, num_contexts: int, horizon: int
) -> np.ndarray:
    """Empirical-Bernstein radius per context.

    ``sqrt(2 p(1-p) L / max(m, 1)) + 7 L / (3 max(m - 1, 1))`` with
    ``L = ln(2 K T / delta)`` and ``m`` the per-context observation count.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    log_term = math.log(2.0 * num_contexts * horizon / delta)
    m = estimate.counts.astype(np.float64)
    p = estimate.p_hat
    first = np.sqrt(2.0 * p * (1.0 - p) * log_term / np.maximum(m, 1.0))
    second = 7.0 * log_term / (3.0 * np.maximum(m - 1.0, 1.0))
    return first + second
