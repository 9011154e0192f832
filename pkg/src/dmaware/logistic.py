"""Laplace-approximated RBF logistic regression, with comparative answers.

The success probability is theta(x, a) = expit(w0 . phi(x) + w1 . phi(x) a)
with fixed RBF centers and lengthscale, so only the stacked weight vector
w = [w0, w1] is learned.  The posterior is approximated by a Gaussian at the
MAP (Newton iterations); its covariance is the inverse negative Hessian.

A comparative answer about unit x contributes a Bernoulli term with success
probability expit((theta(x,1) - theta(x,0)) / noise_scale) for c = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .basis import BasisConfig
from .data import Dataset
from .gp import FitError


@dataclass(frozen=True)
class WeightLaplacePosterior:
    map_mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map_mean, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (m.size, m.size):
            raise ValueError("covariance shape must match map_mean")
        m.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "map_mean", m)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class ComparativeAnswer:
    """c = 1 means theta(x,1) > theta(x,0) for the referenced unit."""

    unit_index: int
    c: int

    def __post_init__(self):
        if self.c not in (0, 1):
            raise ValueError("c must be 0 or 1")


def _bernoulli_loglik(eta: np.ndarray, y: np.ndarray) -> float:
    # y*log(sigmoid(eta)) + (1-y)*log(1-sigmoid(eta)), stably.
    return float(-np.sum(np.logaddexp(0.0, -eta) * y + np.logaddexp(0.0, eta) * (1.0 - y)))


def _log_posterior(w, design, y, psi1, psi0, cbits, prior_variance, noise_scale):
    lp = -0.5 * float(w @ w) / prior_variance
    if design.shape[0]:
        lp += _bernoulli_loglik(design @ w, y)
    if psi1.shape[0]:
        theta1 = expit(psi1 @ w)
        theta0 = expit(psi0 @ w)
        lp += _bernoulli_loglik((theta1 - theta0) / noise_scale, cbits)
    return lp


def _grad_neg_hess(w, design, y, psi1, psi0, cbits, prior_variance, noise_scale):
    k = w.size
    grad = -w / prior_variance
    neg_hess = np.eye(k) / prior_variance
    if design.shape[0]:
        theta = expit(design @ w)
        grad += design.T @ (y - theta)
        neg_hess += (design * (theta * (1.0 - theta))[:, None]).T @ design
    for i in range(psi1.shape[0]):
        t1 = float(expit(psi1[i] @ w))
        t0 = float(expit(psi0[i] @ w))
        p = float(expit((t1 - t0) / noise_scale))
        g = t1 * (1.0 - t1) * psi1[i] - t0 * (1.0 - t0) * psi0[i]
        resid = (cbits[i] - p) / noise_scale
        grad += resid * g
        # -d2/dw2 of the comparison log-likelihood.
        h_delta = (
            t1 * (1.0 - t1) * (1.0 - 2.0 * t1) * np.outer(psi1[i], psi1[i])
            - t0 * (1.0 - t0) * (1.0 - 2.0 * t0) * np.outer(psi0[i], psi0[i])
        )
        neg_hess += (p * (1.0 - p) / noise_scale**2) * np.outer(g, g) - resid * h_delta
    return grad, neg_hess


def _solve_ridged(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve A x = b, adding the smallest diagonal ridge that makes A PD.

    Away from the mode the comparison likelihood can make the negative
    Hessian indefinite; a ridged solve still yields an ascent direction.
    Returns (solution, ridge used).
    """
    k = A.shape[0]
    try:
        return cho_solve(cho_factor(A, lower=True), b), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = max(abs(float(np.trace(A))) / k, 1e-12)
    ridge = max(-float(np.linalg.eigvalsh(A).min()), 0.0) + 1e-9 * scale
    for _ in range(8):
        try:
            return cho_solve(cho_factor(A + ridge * np.eye(k), lower=True), b), ridge
        except np.linalg.LinAlgError:
            ridge = ridge * 10.0 + 1e-12
    raise FitError("could not factor curvature matrix", ridge=ridge)


def _newton_map(design, y, psi1, psi0, cbits, prior_variance, noise_scale, w0, max_iter, tol):
    w = np.array(w0, dtype=float)
    lp = _log_posterior(w, design, y, psi1, psi0, cbits, prior_variance, noise_scale)
    for _ in range(max_iter):
        grad, neg_hess = _grad_neg_hess(w, design, y, psi1, psi0, cbits, prior_variance, noise_scale)
        if np.max(np.abs(grad)) < tol:
            cov, ridge = _solve_ridged(neg_hess, np.eye(w.size))
            scale = max(abs(float(np.trace(neg_hess))) / w.size, 1e-12)
            if ridge > 1e-6 * scale:
                raise FitError(
                    "negative Hessian not positive definite at the mode", ridge=ridge
                )
            return w, 0.5 * (cov + cov.T), float(np.max(np.abs(grad)))
        step, _ = _solve_ridged(neg_hess, grad)
        t = 1.0
        for _ in range(40):
            lp_new = _log_posterior(w + t * step, design, y, psi1, psi0, cbits, prior_variance, noise_scale)
            if lp_new > lp - 1e-12:
                break
            t *= 0.5
        w = w + t * step
        lp = lp_new
    grad, _ = _grad_neg_hess(w, design, y, psi1, psi0, cbits, prior_variance, noise_scale)
    return None, None, float(np.max(np.abs(grad)))


def _prepare_direct(data: Dataset, basis: BasisConfig):
    observed = ~np.isnan(data.outcomes)
    y = data.outcomes[observed]
    if y.size and not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("logistic models require binary outcomes in {0, 1}")
    if len(data) == 0 or not observed.any():
        return np.zeros((0, basis.n_weights)), np.zeros(0)
    design = basis.design_batch(data.units[observed], data.actions[observed])
    return design, y


def comparative_augmented_fit(
    data: Dataset,
    comparisons,
    basis: BasisConfig,
    prior_variance: float,
    noise_scale: float = 0.1,
    seed: int = 0,
    warm_start: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> WeightLaplacePosterior:
    """Joint Laplace posterior from direct rows and comparative answers.

    Rows with NaN outcomes contribute no direct likelihood term; they remain
    valid comparison referents.
    """
    if not basis.includes_interaction:
        raise ValueError("logistic outcome models need an interaction basis")
    if not prior_variance > 0:
        raise ValueError("prior_variance must be positive")
    if not noise_scale > 0:
        raise ValueError("noise_scale must be positive")
    design, y = _prepare_direct(data, basis)
    comparisons = tuple(comparisons)
    for comp in comparisons:
        if not 0 <= comp.unit_index < len(data):
            raise ValueError(f"comparison unit_index {comp.unit_index} out of range")
    k = basis.n_weights
    if comparisons:
        units = data.units[[c.unit_index for c in comparisons]]
        psi1 = basis.design_batch(units, np.ones(len(comparisons)))
        psi0 = basis.design_batch(units, np.zeros(len(comparisons)))
        cbits = np.array([c.c for c in comparisons], dtype=float)
    else:
        psi1 = psi0 = np.zeros((0, k))
        cbits = np.zeros(0)

    starts = [warm_start if warm_start is not None else np.zeros(k)]
    rng = np.random.default_rng(seed)
    starts.append(0.1 * rng.standard_normal(k))  # fallback start on non-convergence
    last_gnorm = np.inf
    for w0 in starts:
        w, cov, gnorm = _newton_map(
            design, y, psi1, psi0, cbits, prior_variance, noise_scale, w0, max_iter, tol
        )
        if w is not None:
            return WeightLaplacePosterior(map_mean=w, covariance=cov)
        last_gnorm = gnorm
    raise FitError("Newton did not converge", gradient_max_norm=last_gnorm)


def logistic_rbf_fit(
    data: Dataset,
    basis: BasisConfig,
    prior_variance: float,
    seed: int = 0,
    warm_start: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> WeightLaplacePosterior:
    """Laplace posterior from direct binary observations only."""
    return comparative_augmented_fit(
        data, (), basis, prior_variance, seed=seed, warm_start=warm_start,
        max_iter=max_iter, tol=tol,
    )


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def logistic_theta_draws(
    post: WeightLaplacePosterior,
    basis: BasisConfig,
    x,
    action: int,
    n_draws: int,
    seed: int,
) -> np.ndarray:
    """Success-probability draws at (x, action) from the Laplace Gaussian.

    The same seed consumes the same weight draws regardless of `action`, so
    draws for the two arms are paired by index.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_draws, post.map_mean.size))
    weights = post.map_mean + z @ _psd_sqrt(post.covariance).T
    return expit(weights @ basis.design(x, action))
