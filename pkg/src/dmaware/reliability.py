"""Decision policy, Type S error rates, and MMD imbalance measurement.

The estimated Type S error rate of a decision is the model's own posterior
probability that the recommended action is the worse one.  For a Gaussian
effect posterior with mean m and standard deviation s this is
``Phi(-|m| / s)`` with Phi the standard normal CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .predictive import GaussianPredictive


class DecisionOrientation(Enum):
    HIGHER_IS_BETTER = "higher"
    LOWER_IS_BETTER = "lower"


@dataclass(frozen=True)
class TypeSEstimate:
    """Estimated probability that the recommended action is the worse one.

    ``effect_mean`` and ``effect_sd`` record the Gaussian effect posterior the
    estimate was computed from (latent-scale for binary-outcome models).
    """

    gamma_hat: float
    recommended_action: int
    effect_mean: float
    effect_sd: float

    def __post_init__(self):
        if not 0.0 <= self.gamma_hat <= 0.5:
            raise ValueError(f"gamma_hat must lie in [0, 0.5], got {self.gamma_hat}")


@dataclass(frozen=True)
class ImbalanceMeasure:
    mmd: float
    kernel_lengthscale: float


def std_normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def bernoulli_entropy(p: float) -> float:
    """Entropy of Bernoulli(p) in nats, with 0 log 0 = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def _recommend_from_effect(effect_mean: float, orient: DecisionOrientation) -> int:
    # Ties go to action 0.
    if orient is DecisionOrientation.HIGHER_IS_BETTER:
        return 1 if effect_mean > 0 else 0
    return 1 if effect_mean < 0 else 0


def decide(
    p1: GaussianPredictive,
    p0: GaussianPredictive,
    orient: DecisionOrientation = DecisionOrientation.HIGHER_IS_BETTER,
) -> int:
    """Choose the action with the better predictive mean; ties go to action 0."""
    return _recommend_from_effect(p1.mean - p0.mean, orient)


def estimate_type_s_gaussian(
    tau: GaussianPredictive,
    orient: DecisionOrientation = DecisionOrientation.HIGHER_IS_BETTER,
) -> TypeSEstimate:
    """Estimated Type S error rate for a Gaussian effect posterior."""
    if not tau.variance > 0:
        raise ValueError(f"effect variance must be positive, got {tau.variance}")
    sd = math.sqrt(tau.variance)
    gamma = std_normal_cdf(-abs(tau.mean) / sd)
    gamma = min(max(gamma, 0.0), 0.5)
    return TypeSEstimate(
        gamma_hat=gamma,
        recommended_action=_recommend_from_effect(tau.mean, orient),
        effect_mean=tau.mean,
        effect_sd=sd,
    )


def estimate_type_s_draws(
    draws1,
    draws0,
    orient: DecisionOrientation = DecisionOrientation.HIGHER_IS_BETTER,
) -> TypeSEstimate:
    """Draw-based Type S estimate from paired posterior samples of each arm.

    The recommendation comes from comparing the sample means under the given
    orientation; gamma_hat is the fraction of paired draws whose ordering
    contradicts it (clamped at 0.5).
    """
    d1 = np.asarray(draws1, dtype=float).ravel()
    d0 = np.asarray(draws0, dtype=float).ravel()
    if d1.size != d0.size:
        raise ValueError("draws must be paired: equal counts required")
    if d1.size < 2:
        raise ValueError("need at least 2 paired draws")
    effect = d1 - d0
    effect_mean = float(effect.mean())
    rec = _recommend_from_effect(effect_mean, orient)
    # "Arm 1 is better" means effect > 0 under HIGHER, effect < 0 under LOWER.
    arm1_better = effect > 0 if orient is DecisionOrientation.HIGHER_IS_BETTER else effect < 0
    contradicts = ~arm1_better & (effect != 0) if rec == 1 else arm1_better
    gamma = min(float(np.mean(contradicts)), 0.5)
    return TypeSEstimate(
        gamma_hat=gamma,
        recommended_action=rec,
        effect_mean=effect_mean,
        effect_sd=float(effect.std(ddof=1)),
    )


def observed_type_s(
    decisions,
    true_effect_signs,
    orient: DecisionOrientation = DecisionOrientation.HIGHER_IS_BETTER,
) -> float:
    """Fraction of units whose chosen action disagrees with the truly better one.

    Zero-effect units (sign 0) have no better action and are excluded from
    the denominator; an all-zero-effect input yields 0.0.
    """
    dec = np.asarray(decisions, dtype=int).ravel()
    signs = np.sign(np.asarray(true_effect_signs, dtype=float).ravel())
    if dec.size != signs.size:
        raise ValueError("decisions and true_effect_signs must have equal length")
    if dec.size == 0:
        raise ValueError("need at least one decision")
    if orient is DecisionOrientation.HIGHER_IS_BETTER:
        better = (signs > 0).astype(int)
    else:
        better = (signs < 0).astype(int)
    nonzero = signs != 0
    if not nonzero.any():
        return 0.0
    return float(np.mean(dec[nonzero] != better[nonzero]))


def mmd(sample_a, sample_b, lengthscale: float) -> ImbalanceMeasure:
    """Maximum mean discrepancy between two samples, Gaussian kernel.

    Uses the biased V-statistic (diagonal terms included), which is
    nonnegative by construction; returns its square root.
    """
    if lengthscale <= 0:
        raise ValueError("lengthscale must be positive")
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("both samples must be nonempty")
    if a.shape[1] != b.shape[1]:
        raise ValueError("samples must share dimension")
    scale = 2.0 * lengthscale**2

    def mean_kernel(u, v):
        return float(np.mean(np.exp(-cdist(u, v, "sqeuclidean") / scale)))

    value = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b)
    return ImbalanceMeasure(mmd=math.sqrt(max(value, 0.0)), kernel_lengthscale=lengthscale)
