"""Conjugate Bayesian linear regression on basis features, one arm at a time.

Posterior over weights for action a with design matrix Phi_a and outcomes y_a:

    S_a^{-1} = alpha * I + Phi_a^T Phi_a / sigma0^2
    mean     = S_a Phi_a^T y_a / sigma0^2

``alpha`` multiplies the identity in the posterior precision, so the weight
prior is N(0, I / alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import BasisConfig
from .data import Dataset
from .predictive import GaussianPredictive


@dataclass(frozen=True)
class BLRConfig:
    alpha: float
    noise_variance: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.noise_variance > 0):
            raise ValueError("alpha and noise_variance must be strictly positive")


@dataclass(frozen=True)
class WeightPosterior:
    """Weight posterior plus the cached design summary (Phi^T Phi, Phi^T y)."""

    mean: np.ndarray
    covariance: np.ndarray
    phi_gram: np.ndarray
    phi_y: np.ndarray

    def __post_init__(self):
        for name in ("mean", "covariance", "phi_gram", "phi_y"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def _posterior_from_summary(phi_gram: np.ndarray, phi_y: np.ndarray, cfg: BLRConfig) -> WeightPosterior:
    k = phi_gram.shape[0]
    precision = cfg.alpha * np.eye(k) + phi_gram / cfg.noise_variance
    chol = cho_factor(precision, lower=True)
    covariance = cho_solve(chol, np.eye(k))
    covariance = 0.5 * (covariance + covariance.T)
    mean = cho_solve(chol, phi_y) / cfg.noise_variance
    return WeightPosterior(mean=mean, covariance=covariance, phi_gram=phi_gram, phi_y=phi_y)


def blr_fit(data: Dataset, action: int, basis: BasisConfig, cfg: BLRConfig) -> WeightPosterior:
    """Exact conjugate posterior from the rows with the given action.

    Zero rows for the action returns the prior (mean 0, covariance I/alpha).
    """
    sub = data.for_action(action)
    k = basis.n_weights
    if len(sub) == 0:
        return _posterior_from_summary(np.zeros((k, k)), np.zeros(k), cfg)
    design = basis.design_batch(sub.units, sub.actions)
    return _posterior_from_summary(design.T @ design, design.T @ sub.outcomes, cfg)


def blr_update(post: WeightPosterior, basis: BasisConfig, cfg: BLRConfig, x, action: int, y: float) -> WeightPosterior:
    """Conjugate posterior after one extra observation, via the cached summary."""
    phi = basis.design(x, action)
    return _posterior_from_summary(post.phi_gram + np.outer(phi, phi), post.phi_y + y * phi, cfg)


def blr_predict(post: WeightPosterior, basis: BasisConfig, cfg: BLRConfig, x, action: int) -> GaussianPredictive:
    phi = basis.design(x, action)
    mean = float(phi @ post.mean)
    variance = cfg.noise_variance + float(phi @ post.covariance @ phi)
    return GaussianPredictive(mean=mean, variance=variance)
