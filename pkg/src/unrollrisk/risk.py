"""Exact true-risk functionals, their decoupled terms, and Monte Carlo checks.

For a linear map T acting on x = y + eps, the expected squared loss
0.5*E||T x - y||^2 decouples into a data term and a noise term. Under the
random-constant model the risk is
    (mu^2 + theta^2)/2 * ||(T - I) 1||^2 + sigma^2/2 * ||T||_F^2
and under the iid model
    mu^2/2 * ||(T - I) 1||^2 + theta^2/2 * ||T - I||_F^2 + sigma^2/2 * ||T||_F^2.
The 1/2 factors are kept so values are directly comparable with the
closed-form optima elsewhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import LinearEstimator
from .model import KIND_CONST, ModelParams, sample_with_rng, spawn_rngs

_MC_SHARD = 50_000


@dataclass(frozen=True)
class RiskValue:
    """A nonnegative risk in squared-amplitude units, tagged by data model."""

    value: float
    model_kind: str

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"risk must be >= 0, got {self.value}")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with standard error (sample std / sqrt(m))."""

    mean: float
    std_error: float
    m: int
    seed: int


def _matrix(t) -> np.ndarray:
    return np.asarray(getattr(t, "t", t), dtype=float)


def _check_dims(m: np.ndarray, params: ModelParams) -> None:
    if m.shape != (params.n, params.n):
        raise ValueError(f"estimator shape {m.shape} does not match n={params.n}")


def noise_term(t, sigma2: float) -> float:
    """Expected half squared noise response: (sigma^2 / 2) * ||T||_F^2."""
    m = _matrix(t)
    return 0.5 * sigma2 * float(np.sum(m * m))


def data_term(t, params: ModelParams) -> float:
    """Expected squared signal mismatch E||(T - I) y||^2, before halving."""
    m = _matrix(t)
    _check_dims(m, params)
    residual = m - np.eye(params.n)
    ones_part = float(np.sum((residual @ np.ones(params.n)) ** 2))
    if params.kind == KIND_CONST:
        return (params.mu**2 + params.theta2) * ones_part
    return params.mu**2 * ones_part + params.theta2 * float(np.sum(residual * residual))


def true_risk(t, params: ModelParams) -> RiskValue:
    """Exact risk of the estimator under the given data model."""
    m = _matrix(t)
    _check_dims(m, params)
    residual = m - np.eye(params.n)
    ones_part = float(np.sum((residual @ np.ones(params.n)) ** 2))
    frob_t = float(np.sum(m * m))
    # identical association for both kinds so the n=1 risks agree bit-exactly
    theta_part = ones_part if params.kind == KIND_CONST else float(np.sum(residual * residual))
    value = (0.5 * params.mu**2 * ones_part + 0.5 * params.theta2 * theta_part
             + 0.5 * params.sigma2 * frob_t)
    return RiskValue(value=value, model_kind=params.kind)


def _merge_moments(count_a, mean_a, m2_a, count_b, mean_b, m2_b):
    # Chan et al. pooled update; the parallel form of Welford's recurrence.
    count = count_a + count_b
    delta = mean_b - mean_a
    mean = mean_a + delta * count_b / count
    m2 = m2_a + m2_b + delta * delta * count_a * count_b / count
    return count, mean, m2


def mc_risk(t, params: ModelParams, m: int, seed: int) -> McEstimate:
    """Monte Carlo estimate of the risk over m fresh (y, eps) draws.

    Samples are generated in shards with disjoint child streams and the
    per-shard moments pooled, so the result is deterministic per seed and
    independent of shard size.
    """
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")
    mat = _matrix(t)
    _check_dims(mat, params)
    shards = max(1, math.ceil(m / _MC_SHARD))
    rngs = spawn_rngs(seed, shards)
    count, mean, m2 = 0, 0.0, 0.0
    remaining = m
    for rng in rngs:
        take = min(_MC_SHARD, remaining)
        clean, noisy = sample_with_rng(params, take, rng)
        losses = 0.5 * np.sum((noisy @ mat.T - clean) ** 2, axis=1)
        shard_mean = float(np.mean(losses))
        shard_m2 = float(np.sum((losses - shard_mean) ** 2))
        count, mean, m2 = _merge_moments(count, mean, m2, take, shard_mean, shard_m2)
        remaining -= take
    variance = m2 / (count - 1)
    return McEstimate(mean=mean, std_error=math.sqrt(variance / count), m=count, seed=seed)


def risk_ratio(numerator: RiskValue, denominator: RiskValue) -> float:
    """numerator.value / denominator.value; both must share the data model."""
    if numerator.model_kind != denominator.model_kind:
        raise ValueError(
            f"model kinds differ: {numerator.model_kind!r} vs {denominator.model_kind!r}"
        )
    if denominator.value <= 0:
        raise ValueError("denominator risk must be > 0")
    return numerator.value / denominator.value
