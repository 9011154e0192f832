"""Exact Gaussian process regression with ARD kernel and per-source noise.

The kernel is the exponentiated quadratic with one lengthscale per input
dimension.  Observation noise is heteroscedastic by row provenance: factual
rows use one noise variance, elicited rows another (mixed-noise likelihood).
Hyperparameters are set by MAP type II: log marginal likelihood plus Gamma
log-priors, maximized by L-BFGS-B in log space with multi-restart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.special import gammaln

from .data import Dataset, Source
from .predictive import GaussianPredictive

LOG_LOWER = math.log(1e-3)
LOG_UPPER = math.log(1e3)
JITTER_MAX = 1e-3


class FitError(RuntimeError):
    """Model fitting failed; carries diagnostics for the caller to log."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class GPHyperparams:
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance_factual: float
    noise_variance_elicited: float

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float).ravel()
        if ls.size < 1 or not (ls > 0).all():
            raise ValueError("lengthscales must be positive")
        for v in (self.signal_variance, self.noise_variance_factual, self.noise_variance_elicited):
            if not v > 0:
                raise ValueError("variances must be strictly positive")
        ls.flags.writeable = False
        object.__setattr__(self, "lengthscales", ls)

    def noise_for(self, source_codes: np.ndarray) -> np.ndarray:
        return np.where(
            np.asarray(source_codes) == Source.ELICITED,
            self.noise_variance_elicited,
            self.noise_variance_factual,
        )

    def to_log_vector(self) -> np.ndarray:
        return np.log(
            np.concatenate(
                [
                    self.lengthscales,
                    [self.signal_variance, self.noise_variance_factual, self.noise_variance_elicited],
                ]
            )
        )

    @staticmethod
    def from_log_vector(t: np.ndarray, dim: int) -> "GPHyperparams":
        v = np.exp(np.asarray(t, dtype=float))
        return GPHyperparams(
            lengthscales=v[:dim],
            signal_variance=float(v[dim]),
            noise_variance_factual=float(v[dim + 1]),
            noise_variance_elicited=float(v[dim + 2]),
        )


@dataclass(frozen=True)
class HyperPrior:
    """Gamma prior shared by lengthscales, signal variance, and noise variances."""

    shape: float = 1.5
    rate: float = 3.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")

    def log_density(self, v: float) -> float:
        return (
            self.shape * math.log(self.rate)
            - float(gammaln(self.shape))
            + (self.shape - 1.0) * math.log(v)
            - self.rate * v
        )

    def dlog_density_dlog(self, v: float) -> float:
        # Derivative of log density w.r.t. log v.
        return (self.shape - 1.0) - self.rate * v

    def mode(self) -> float:
        if self.shape >= 1.0:
            return max((self.shape - 1.0) / self.rate, 1e-3)
        return 1e-3

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


def kernel_ard(x, x2, hp: GPHyperparams) -> float:
    """Exponentiated quadratic kernel with per-dimension lengthscales."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape or x.shape[0] != hp.lengthscales.shape[0]:
        raise ValueError("dimension mismatch between inputs and lengthscales")
    sq = np.sum(((x - x2) / hp.lengthscales) ** 2)
    return hp.signal_variance * math.exp(-0.5 * sq)


def kernel_matrix(X: np.ndarray, X2: np.ndarray, hp: GPHyperparams) -> np.ndarray:
    Xs = np.asarray(X, float) / hp.lengthscales
    X2s = np.asarray(X2, float) / hp.lengthscales
    sq = (
        np.sum(Xs**2, axis=1)[:, None]
        + np.sum(X2s**2, axis=1)[None, :]
        - 2.0 * Xs @ X2s.T
    )
    return hp.signal_variance * np.exp(-0.5 * np.maximum(sq, 0.0))


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter on failure."""
    n = K.shape[0]
    try:
        return cholesky(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-9 * float(np.trace(K)) / n
    while jitter <= JITTER_MAX:
        try:
            return cholesky(K + jitter * np.eye(n), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FitError("kernel matrix not positive definite after jitter escalation", jitter=jitter, n=n)


def _neg_map_objective(t: np.ndarray, X: np.ndarray, y: np.ndarray, src: np.ndarray, prior: HyperPrior):
    """Negative (log marginal likelihood + log hyperprior) and its gradient in log space."""
    n, d = X.shape
    hp = GPHyperparams.from_log_vector(t, d)
    Kf = kernel_matrix(X, X, hp)
    noise = hp.noise_for(src)
    K = Kf + np.diag(noise)
    try:
        L, _ = _chol_with_jitter(K)
    except FitError:
        return 1e25, np.zeros_like(t)
    alpha = cho_solve((L, True), y)
    nlml = 0.5 * float(y @ alpha) + float(np.sum(np.log(np.diag(L)))) + 0.5 * n * math.log(2 * math.pi)

    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv  # d lml / dK = 0.5 * W

    grad = np.zeros_like(t)
    for j in range(d):
        Dj = (X[:, j][:, None] - X[:, j][None, :]) ** 2
        dK = Kf * Dj / hp.lengthscales[j] ** 2
        grad[j] = 0.5 * float(np.sum(W * dK))
    grad[d] = 0.5 * float(np.sum(W * Kf))
    fact = np.asarray(src) == Source.FACTUAL
    grad[d + 1] = 0.5 * float(np.sum(np.diag(W)[fact])) * hp.noise_variance_factual
    grad[d + 2] = 0.5 * float(np.sum(np.diag(W)[~fact])) * hp.noise_variance_elicited

    values = np.concatenate(
        [hp.lengthscales, [hp.signal_variance, hp.noise_variance_factual, hp.noise_variance_elicited]]
    )
    log_prior = sum(prior.log_density(v) for v in values)
    grad_prior = np.array([prior.dlog_density_dlog(v) for v in values])

    return nlml - log_prior, -(grad + grad_prior)


@dataclass(frozen=True)
class GPFit:
    """Immutable fitted GP for one action arm; safe to share across threads."""

    X: np.ndarray
    y: np.ndarray
    source: np.ndarray
    hyperparams: GPHyperparams
    prior: HyperPrior
    seed: int
    chol: np.ndarray | None
    alpha: np.ndarray | None
    log_evidence: float

    @staticmethod
    def build(X, y, source, hp: GPHyperparams, prior: HyperPrior, seed: int, log_evidence: float = math.nan) -> "GPFit":
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(y, dtype=float).ravel()
        source = np.asarray(source, dtype=np.int8).ravel()
        if X.shape[0] == 0:
            chol, alpha = None, None
        else:
            K = kernel_matrix(X, X, hp) + np.diag(hp.noise_for(source))
            L, _ = _chol_with_jitter(K)
            chol, alpha = L, cho_solve((L, True), y)
        for a in (X, y, source):
            a.flags.writeable = False
        return GPFit(
            X=X, y=y, source=source, hyperparams=hp, prior=prior, seed=seed,
            chol=chol, alpha=alpha, log_evidence=log_evidence,
        )

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"input has dimension {x.shape[0]}, model expects {self.dim}")
        return x

    def predict(self, x, noise: str = "factual") -> GaussianPredictive:
        """Posterior predictive at one point; `noise` is 'factual', 'elicited' or 'none'."""
        mean, var = self.predict_batch(self._check_dim(x)[None, :], noise=noise)
        return GaussianPredictive(mean=float(mean[0]), variance=float(var[0]))

    def predict_batch(self, X: np.ndarray, noise: str = "factual") -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        hp = self.hyperparams
        noise_var = {
            "factual": hp.noise_variance_factual,
            "elicited": hp.noise_variance_elicited,
            "none": 0.0,
        }[noise]
        if self.chol is None:
            mean = np.zeros(X.shape[0])
            var = np.full(X.shape[0], hp.signal_variance + noise_var)
            return mean, var
        Ks = kernel_matrix(self.X, X, hp)
        mean = Ks.T @ self.alpha
        V = solve_triangular(self.chol, Ks, lower=True)
        var = hp.signal_variance + noise_var - np.sum(V**2, axis=0)
        return mean, np.maximum(var, 1e-15)

    def with_observation(self, x, y: float, source: Source) -> "GPFit":
        """Refit with one appended row, hyperparameters frozen."""
        x = self._check_dim(x)
        return GPFit.build(
            np.vstack([self.X, x[None, :]]),
            np.append(self.y, y),
            np.append(self.source, int(source)),
            self.hyperparams,
            self.prior,
            self.seed,
            self.log_evidence,
        )


def gp_fit(
    data: Dataset,
    action: int,
    prior: HyperPrior = HyperPrior(),
    seed: int = 0,
    n_restarts: int = 5,
    hyperparams: GPHyperparams | None = None,
    fixed_noise_elicited: float | None = None,
) -> GPFit:
    """MAP-II fit of one arm's GP on the rows with the given action.

    Passing `hyperparams` skips optimization and conditions on them as given.
    `fixed_noise_elicited` pins the elicited-source noise variance instead of
    learning it (for operator-set answer noise).  Zero rows for the arm falls
    back to the hyperprior mode (prior predictive).
    """
    sub = data.for_action(action)
    X, y, src = sub.units, sub.outcomes, sub.source
    if np.isnan(y).any():
        raise ValueError("GP fit requires observed outcomes (no NaN)")
    d = data.dim

    if hyperparams is not None:
        return GPFit.build(X, y, src, hyperparams, prior, seed)

    if len(sub) == 0:
        m = prior.mode()
        noise_l = fixed_noise_elicited if fixed_noise_elicited is not None else m
        hp = GPHyperparams(np.full(d, m), m, m, noise_l)
        return GPFit.build(X, y, src, hp, prior, seed)

    n_params = d + 3
    bounds = [(LOG_LOWER, LOG_UPPER)] * n_params
    if fixed_noise_elicited is not None:
        pinned = math.log(fixed_noise_elicited)
        bounds[-1] = (pinned, pinned)
    rng = np.random.default_rng(seed)
    best = None
    failures = []
    for _ in range(max(n_restarts, 1)):
        start = np.clip(prior.sample(rng, n_params), 1e-3, 1e3)
        if fixed_noise_elicited is not None:
            start[-1] = fixed_noise_elicited
        try:
            res = minimize(
                _neg_map_objective,
                np.log(start),
                args=(X, y, src, prior),
                method="L-BFGS-B",
                jac=True,
                bounds=bounds,
            )
        except (np.linalg.LinAlgError, FitError) as exc:  # pragma: no cover - defensive
            failures.append(str(exc))
            continue
        if not np.isfinite(res.fun):
            failures.append("non-finite objective")
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError("all restarts failed during GP hyperparameter search", failures=failures)
    hp = GPHyperparams.from_log_vector(best.x, d)
    return GPFit.build(X, y, src, hp, prior, seed, log_evidence=-float(best.fun))


def gp_predict(model: GPFit, x) -> GaussianPredictive:
    """Predictive including the factual-source observation noise."""
    return model.predict(x, noise="factual")
