"""Environment model: feature maps, bandit instances, and ground-truth quantities.

The environment is a linear contextual bandit over K discrete contexts and a
finite action set.  Rewards are ``<theta_star, phi(s, a)> + noise`` with a
known feature mapping ``phi`` and an unknown parameter ``theta_star``.  This
module also houses the synthetic instance generator used by the benchmark
experiments and a plain-text serialization format for instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DegenerateInstanceError",
    "FeatureMap",
    "BanditInstance",
    "GroundTruth",
    "weighted_feature",
    "weighted_feature_table",
    "sample_context",
    "sample_contexts",
    "realize_reward",
    "generate_synthetic_instance",
    "synthetic_feature_table",
    "ground_truth",
    "normalize_gaps",
    "save_instance",
    "load_instance",
]

_PROB_TOL = 1e-12
_REWARD_CAP_TOL = 1e-9


class DegenerateInstanceError(ValueError):
    """Raised when an instance cannot be normalized (``u_max <= u_min``)."""


@dataclass(frozen=True)
class FeatureMap:
    """Dense feature mapping ``phi(context, action) -> R^d``.

    ``table`` has shape ``(K, A, d)``; row ``table[k, a]`` is the feature
    vector of context ``k`` under action ``a``.
    """

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 3:
            raise ValueError(f"feature table must be (K, A, d), got shape {table.shape}")
        if min(table.shape) < 1:
            raise ValueError("feature table dimensions must be positive")
        if not np.all(np.isfinite(table)):
            raise ValueError("feature table contains non-finite entries")
        object.__setattr__(self, "table", table)

    @property
    def num_contexts(self) -> int:
        return self.table.shape[0]

    @property
    def num_actions(self) -> int:
        return self.table.shape[1]

    @property
    def dim(self) -> int:
        return self.table.shape[2]

    @property
    def feature_bound(self) -> float:
        """L = max over (context, action) of the Euclidean feature norm."""
        return float(np.max(np.linalg.norm(self.table, axis=2)))


@dataclass(frozen=True)
class BanditInstance:
    """Ground truth of one experiment instance.

    Invariants enforced at construction: the context distribution is a
    probability vector, ``||theta_star|| <= theta_bound``, and every expected
    reward ``<theta_star, phi(k, a)>`` is at most 1 (the scale the analysis
    assumes; generators rescale ``theta_star`` to guarantee it).
    """

    features: FeatureMap
    theta_star: np.ndarray
    context_dist: np.ndarray
    noise_std: float
    theta_bound: float

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta_star, dtype=np.float64)
        dist = np.asarray(self.context_dist, dtype=np.float64)
        if theta.shape != (self.features.dim,):
            raise ValueError("theta_star length must equal feature dimension")
        if dist.shape != (self.features.num_contexts,):
            raise ValueError("context_dist length must equal number of contexts")
        if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > _PROB_TOL:
            raise ValueError("context_dist must be nonnegative and sum to 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if float(np.linalg.norm(theta)) > self.theta_bound + 1e-9:
            raise ValueError("||theta_star|| exceeds theta_bound")
        if float(np.max(self.features.table @ theta)) > 1.0 + _REWARD_CAP_TOL:
            raise ValueError(
                "max expected reward exceeds 1; rescale theta_star before constructing"
            )
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "context_dist", dist)

    @property
    def mean_rewards(self) -> np.ndarray:
        """Expected rewards ``<theta_star, phi(k, a)>`` as a (K, A) array."""
        return self.features.table @ self.theta_star


@dataclass(frozen=True)
class GroundTruth:
    """Derived per-instance quantities used by the benchmark and revealers.

    ``u_star[k]`` is the best expected reward with context ``k`` known,
    ``v_star`` the best expected reward when the context is averaged over the
    context distribution.  ``eta_min`` is the smallest strictly positive
    ``u_star[k] - v_star`` (``inf`` with ``no_positive_gap`` set when no
    context beats ``v_star``, in which case revealing never helps).
    """

    u_star: np.ndarray
    v_star: float
    eta_min: float
    u_max: float
    u_min: float
    delta_min: float
    weighted_features: np.ndarray
    weighted_values: np.ndarray
    best_context_actions: np.ndarray
    best_weighted_action: int
    no_positive_gap: bool


def weighted_feature(features: FeatureMap, dist: np.ndarray, action: int) -> np.ndarray:
    """Distribution-weighted feature ``phibar(a) = sum_k phi(k, a) * dist[k]``."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != (features.num_contexts,):
        raise ValueError(
            f"distribution length {dist.shape} does not match K={features.num_contexts}"
        )
    if not 0 <= action < features.num_actions:
        raise ValueError(f"action index {action} out of range")
    return dist @ features.table[:, action, :]


def weighted_feature_table(features: FeatureMap, dist: np.ndarray) -> np.ndarray:
    """All weighted features at once, as an (A, d) array."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != (features.num_contexts,):
        raise ValueError("distribution length does not match number of contexts")
    return np.einsum("k,kad->ad", dist, features.table)


def sample_context(instance: BanditInstance, rng: np.random.Generator) -> int:
    """Draw one context index from the instance's context distribution."""
    return int(rng.choice(instance.features.num_contexts, p=instance.context_dist))


def sample_contexts(instance: BanditInstance, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``horizon`` i.i.d. context indices."""
    return rng.choice(instance.features.num_contexts, size=horizon, p=instance.context_dist)


def realize_reward(
    instance: BanditInstance, context: int, action: int, rng: np.random.Generator
) -> float:
    """Realized reward ``<theta_star, phi(s, a)> + eta`` with Gaussian noise.

    One standard-normal variate is consumed per call regardless of
    ``noise_std`` so that random streams stay aligned across noise levels.
    """
    mean = float(instance.features.table[context, action] @ instance.theta_star)
    return mean + instance.noise_std * float(rng.standard_normal())


def synthetic_feature_table(num_contexts: int, num_actions: int) -> np.ndarray:
    """Feature table of the synthetic benchmark family.

    ``phi(k, a)`` concatenates a one-hot action encoding of length ``A - 1``
    (the first action is the baseline and encodes to zeros), one scalar
    context variable ``k / K`` for context index ``k in {1..K}``, and
    ``A - 1`` action-context interaction terms, giving ``d = 2A - 1``.
    """
    if num_contexts < 1:
        raise ValueError("need at least one context")
    if num_actions < 2:
        raise ValueError("need at least two actions")
    dim = 2 * num_actions - 1
    table = np.zeros((num_contexts, num_actions, dim))
    context_values = (np.arange(num_contexts) + 1) / num_contexts
    for a in range(num_actions):
        table[:, a, num_actions - 1] = context_values
        if a >= 1:
            table[:, a, a - 1] = 1.0
            table[:, a, num_actions + a - 1] = context_values
    return table


def generate_synthetic_instance(
    num_contexts: int,
    num_actions: int,
    rng: np.random.Generator,
    noise_std: float = 0.1,
) -> BanditInstance:
    """Random instance of the synthetic benchmark family.

    ``theta_star`` coordinates are i.i.d. U(0,1) and then rescaled so that the
    largest expected reward is at most 1; the context distribution is drawn
    from U(0,1) per coordinate and normalized; ``theta_bound`` defaults to the
    exact norm of the generated parameter.
    """
    table = synthetic_feature_table(num_contexts, num_actions)
    dim = table.shape[2]
    theta = rng.uniform(0.0, 1.0, size=dim)
    max_value = float(np.max(table @ theta))
    if max_value > 1.0:
        theta = theta / max_value
    raw = rng.uniform(0.0, 1.0, size=num_contexts)
    dist = raw / raw.sum()
    return BanditInstance(
        features=FeatureMap(table),
        theta_star=theta,
        context_dist=dist,
        noise_std=noise_std,
        theta_bound=float(np.linalg.norm(theta)),
    )


def ground_truth(instance: BanditInstance) -> GroundTruth:
    """Exhaustively enumerate the per-instance optimum quantities."""
    values = instance.mean_rewards
    u_star = values.max(axis=1)
    best_context_actions = values.argmax(axis=1)
    phibar = weighted_feature_table(instance.features, instance.context_dist)
    weighted_values = phibar @ instance.theta_star
    best_weighted_action = int(np.argmax(weighted_values))
    v_star = float(weighted_values[best_weighted_action])

    gaps = u_star - v_star
    positive = gaps[gaps > 0.0]
    no_positive_gap = positive.size == 0
    eta_min = math.inf if no_positive_gap else float(positive.min())

    table = instance.features.table
    num_actions = instance.features.num_actions
    delta_min = math.inf
    for a in range(num_actions):
        for b in range(a + 1, num_actions):
            dists = np.linalg.norm(table[:, a, :] - table[:, b, :], axis=1)
            delta_min = min(delta_min, float(dists.min()))

    return GroundTruth(
        u_star=u_star,
        v_star=v_star,
        eta_min=eta_min,
        u_max=float(u_star.max()),
        u_min=float(u_star.min()),
        delta_min=delta_min,
        weighted_features=phibar,
        weighted_values=weighted_values,
        best_context_actions=best_context_actions,
        best_weighted_action=best_weighted_action,
        no_positive_gap=no_positive_gap,
    )


def normalize_gaps(values, u_max: float, u_min: float):
    """Affine map ``x -> (x - u_min) / (u_max - u_min)``.

    Applied identically to every ``u`` and to ``v`` before they enter a
    revealer, so revealer inputs live on a [0, 1] scale.
    """
    if not u_max > u_min:
        raise DegenerateInstanceError(f"u_max={u_max} must exceed u_min={u_min}")
    scale = u_max - u_min
    if np.isscalar(values):
        return (values - u_min) / scale
    return (np.asarray(values, dtype=np.float64) - u_min) / scale


# ---------------------------------------------------------------------------
# Serialization: flat text document, lossless at full float precision.
# ---------------------------------------------------------------------------

_FORMAT_TAG = "bandit-instance-v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_array(values: np.ndarray) -> str:
    return " ".join(_fmt(v) for v in np.asarray(values, dtype=np.float64).ravel())


def save_instance(instance: BanditInstance, path) -> None:
    """Write an instance as ``key: value`` lines with whitespace arrays."""
    lines = [
        f"format: {_FORMAT_TAG}",
        f"num_contexts: {instance.features.num_contexts}",
        f"num_actions: {instance.features.num_actions}",
        f"dim: {instance.features.dim}",
        f"noise_std: {_fmt(instance.noise_std)}",
        f"theta_bound: {_fmt(instance.theta_bound)}",
        f"theta_star: {_fmt_array(instance.theta_star)}",
        f"context_dist: {_fmt_array(instance.context_dist)}",
        f"feature_table: {_fmt_array(instance.features.table)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def parse_keyvalue_text(text: str) -> dict[str, str]:
    """Parse ``key: value`` lines (shared with the harness config format)."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ValueError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()
    return fields


def load_instance(path) -> BanditInstance:
    """Inverse of :func:`save_instance`; round-trips bit-exactly."""
    fields = parse_keyvalue_text(Path(path).read_text(encoding="ascii"))
    if fields.get("format") != _FORMAT_TAG:
        raise ValueError(f"unrecognized instance format: {fields.get('format')!r}")
    num_contexts = int(fields["num_contexts"])
    num_actions = int(fields["num_actions"])
    dim = int(fields["dim"])

    def arr(key: str) -> np.ndarray:
        return np.array(fields[key].split(), dtype=np.float64)

    table = arr("feature_table")
    if table.size != num_contexts * num_actions * dim:
        raise ValueError("feature_table size does not match declared dimensions")
    return BanditInstance(
        features=FeatureMap(table.reshape(num_contexts, num_actions, dim)),
        theta_star=arr("theta_star"),
        context_dist=arr("context_dist"),
        noise_std=float(fields["noise_std"]),
        theta_bound=float(fields["theta_bound"]),
    )
