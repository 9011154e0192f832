"""Two-arm potential-outcome models behind one surface for the query loop.

All three families expose the same duck-typed methods:

- ``predict(x, action)``: Gaussian predictive of the outcome (continuous) or
  of the latent log-odds (binary);
- ``type_s_at(x, orient)``: estimated Type S error rate of the decision at x;
- ``recommend(x, orient)``: the action the decision policy picks at x;
- ``with_point_observation`` / ``with_comparison``: posterior-only update with
  one hypothetical elicited answer (hyperparameters frozen), returning a new
  immutable model;
- ``refit(factual, elicited, comparisons, seed)``: full refit, including
  hyperparameter re-optimization where the family has any.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .basis import BasisConfig
from .blr import BLRConfig, WeightPosterior, blr_fit, blr_predict, blr_update
from .data import Dataset, Source
from .gp import GPFit, HyperPrior, gp_fit
from .logistic import ComparativeAnswer, WeightLaplacePosterior, comparative_augmented_fit
from .predictive import GaussianPredictive, ite_predictive
from .quadrature import QuadratureRule, gauss_hermite, gaussian_means_expect
from .reliability import (
    DecisionOrientation,
    TypeSEstimate,
    bernoulli_entropy,
    decide,
    estimate_type_s_gaussian,
    std_normal_cdf,
)

CONTINUOUS = "continuous"
BINARY = "binary"

_GH_DEFAULT = gauss_hermite(32)


def _merge(factual: Dataset, elicited: Dataset | None) -> Dataset:
    if elicited is None or len(elicited) == 0:
        return factual
    return factual.concat(elicited)


@dataclass(frozen=True)
class GPOutcomeModel:
    """Independent exact GPs per arm with mixed factual/elicited noise."""

    arm0: GPFit
    arm1: GPFit
    prior: HyperPrior
    seed: int
    n_restarts: int = 5
    reoptimize_on_refit: bool = True
    fixed_noise_elicited: float | None = None

    kind = CONTINUOUS

    @classmethod
    def fit(cls, data: Dataset, prior: HyperPrior = HyperPrior(), seed: int = 0,
            n_restarts: int = 5, reoptimize_on_refit: bool = True,
            fixed_noise_elicited: float | None = None) -> "GPOutcomeModel":
        return cls(
            arm0=gp_fit(data, 0, prior, seed=seed, n_restarts=n_restarts,
                        fixed_noise_elicited=fixed_noise_elicited),
            arm1=gp_fit(data, 1, prior, seed=seed + 1, n_restarts=n_restarts,
                        fixed_noise_elicited=fixed_noise_elicited),
            prior=prior,
            seed=seed,
            n_restarts=n_restarts,
            reoptimize_on_refit=reoptimize_on_refit,
            fixed_noise_elicited=fixed_noise_elicited,
        )

    def _arm(self, action: int) -> GPFit:
        return self.arm1 if action == 1 else self.arm0

    def predict(self, x, action: int) -> GaussianPredictive:
        return self._arm(action).predict(x, noise="factual")

    def predict_batch(self, X, action: int) -> tuple[np.ndarray, np.ndarray]:
        return self._arm(action).predict_batch(X, noise="factual")

    def answer_predictive(self, x, action: int) -> GaussianPredictive:
        """Predictive of an elicited answer at (x, action): latent + elicited noise."""
        return self._arm(action).predict(x, noise="elicited")

    def effect(self, x) -> GaussianPredictive:
        return ite_predictive(self.predict(x, 1), self.predict(x, 0))

    def type_s_at(self, x, orient: DecisionOrientation) -> TypeSEstimate:
        return estimate_type_s_gaussian(self.effect(x), orient)

    def recommend(self, x, orient: DecisionOrientation) -> int:
        return decide(self.predict(x, 1), self.predict(x, 0), orient)

    def uncertainty(self, x, action: int) -> float:
        return self.predict(x, action).variance

    def with_point_observation(self, x, action: int, y: float) -> "GPOutcomeModel":
        arm = self._arm(action).with_observation(x, y, Source.ELICITED)
        return replace(self, arm1=arm) if action == 1 else replace(self, arm0=arm)

    def with_comparison(self, unit_index: int, c: int) -> "GPOutcomeModel":
        raise TypeError("comparative answers are not supported by continuous GP models")

    def refit(self, factual: Dataset, elicited: Dataset | None, comparisons=(), seed: int = 0) -> "GPOutcomeModel":
        if comparisons:
            raise TypeError("comparative answers are not supported by continuous GP models")
        data = _merge(factual, elicited)
        if self.reoptimize_on_refit:
            return GPOutcomeModel.fit(
                data, self.prior, seed=seed, n_restarts=self.n_restarts,
                reoptimize_on_refit=self.reoptimize_on_refit,
                fixed_noise_elicited=self.fixed_noise_elicited,
            )
        return replace(
            self,
            arm0=gp_fit(data, 0, self.prior, seed=seed, hyperparams=self.arm0.hyperparams),
            arm1=gp_fit(data, 1, self.prior, seed=seed + 1, hyperparams=self.arm1.hyperparams),
        )

    def intrinsic_distance(self, u, v, action: int | None = None) -> float:
        ls = self._arm(action if action is not None else 1).hyperparams.lengthscales
        diff = (np.asarray(u, float).ravel() - np.asarray(v, float).ravel()) / ls
        return float(np.sqrt(diff @ diff))


@dataclass(frozen=True)
class BLROutcomeModel:
    """Independent conjugate Bayesian linear regressions per arm."""

    post0: WeightPosterior
    post1: WeightPosterior
    basis: BasisConfig
    cfg: BLRConfig

    kind = CONTINUOUS

    @classmethod
    def fit(cls, data: Dataset, basis: BasisConfig, cfg: BLRConfig) -> "BLROutcomeModel":
        return cls(
            post0=blr_fit(data, 0, basis, cfg),
            post1=blr_fit(data, 1, basis, cfg),
            basis=basis,
            cfg=cfg,
        )

    def _post(self, action: int) -> WeightPosterior:
        return self.post1 if action == 1 else self.post0

    def predict(self, x, action: int) -> GaussianPredictive:
        return blr_predict(self._post(action), self.basis, self.cfg, x, action)

    def predict_batch(self, X, action: int) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, float)
        post = self._post(action)
        design = self.basis.design_batch(X, np.full(X.shape[0], action))
        mean = design @ post.mean
        var = self.cfg.noise_variance + np.sum(design @ post.covariance * design, axis=1)
        return mean, var

    def answer_predictive(self, x, action: int) -> GaussianPredictive:
        return self.predict(x, action)

    def effect(self, x) -> GaussianPredictive:
        return ite_predictive(self.predict(x, 1), self.predict(x, 0))

    def type_s_at(self, x, orient: DecisionOrientation) -> TypeSEstimate:
        return estimate_type_s_gaussian(self.effect(x), orient)

    def recommend(self, x, orient: DecisionOrientation) -> int:
        return decide(self.predict(x, 1), self.predict(x, 0), orient)

    def uncertainty(self, x, action: int) -> float:
        return self.predict(x, action).variance

    def with_point_observation(self, x, action: int, y: float) -> "BLROutcomeModel":
        post = blr_update(self._post(action), self.basis, self.cfg, x, action, y)
        return replace(self, post1=post) if action == 1 else replace(self, post0=post)

    def with_comparison(self, unit_index: int, c: int) -> "BLROutcomeModel":
        raise TypeError("comparative answers are not supported by BLR models")

    def refit(self, factual: Dataset, elicited: Dataset | None, comparisons=(), seed: int = 0) -> "BLROutcomeModel":
        if comparisons:
            raise TypeError("comparative answers are not supported by BLR models")
        return BLROutcomeModel.fit(_merge(factual, elicited), self.basis, self.cfg)

    def intrinsic_distance(self, u, v, action: int | None = None) -> float:
        diff = np.asarray(u, float).ravel() - np.asarray(v, float).ravel()
        return float(np.sqrt(diff @ diff)) / self.basis.lengthscale


@dataclass(frozen=True)
class LogisticOutcomeModel:
    """Joint logistic model over both arms via an interaction basis.

    Decisions compare posterior-mean success probabilities (Gauss-Hermite over
    the latent Gaussian).  The Type S estimate is exact under the Laplace
    approximation: the latent difference eta(x,1) - eta(x,0) is Gaussian and
    the sigmoid is monotone, so P(theta_1 > theta_0) has closed form.
    """

    posterior: WeightLaplacePosterior
    basis: BasisConfig
    prior_variance: float
    noise_scale: float
    train: Dataset
    comparisons: tuple[ComparativeAnswer, ...]
    rule: QuadratureRule = _GH_DEFAULT

    kind = BINARY

    @classmethod
    def fit(cls, data: Dataset, basis: BasisConfig, prior_variance: float,
            noise_scale: float = 0.1, comparisons=(), seed: int = 0,
            rule: QuadratureRule = _GH_DEFAULT, warm_start=None) -> "LogisticOutcomeModel":
        comparisons = tuple(comparisons)
        post = comparative_augmented_fit(
            data, comparisons, basis, prior_variance, noise_scale, seed=seed, warm_start=warm_start
        )
        return cls(
            posterior=post, basis=basis, prior_variance=prior_variance,
            noise_scale=noise_scale, train=data, comparisons=comparisons, rule=rule,
        )

    def latent(self, x, action: int) -> GaussianPredictive:
        psi = self.basis.design(x, action)
        return GaussianPredictive(
            mean=float(psi @ self.posterior.map_mean),
            variance=max(float(psi @ self.posterior.covariance @ psi), 0.0),
        )

    # The latent Gaussian is this family's analogue of an outcome predictive.
    predict = latent

    def effect_latent(self, x) -> GaussianPredictive:
        psi1 = self.basis.design(x, 1)
        psi0 = self.basis.design(x, 0)
        d = psi1 - psi0
        return GaussianPredictive(
            mean=float(d @ self.posterior.map_mean),
            variance=max(float(d @ self.posterior.covariance @ d), 1e-300),
        )

    def theta_mean(self, x, action: int) -> float:
        return float(self.theta_mean_batch(np.asarray(x, float).reshape(1, -1), action)[0])

    def theta_mean_batch(self, X, action: int) -> np.ndarray:
        X = np.asarray(X, float)
        if X.ndim == 1:
            X = X[:, None]
        design = self.basis.design_batch(X, np.full(X.shape[0], action))
        means = design @ self.posterior.map_mean
        vars_ = np.maximum(np.sum(design @ self.posterior.covariance * design, axis=1), 0.0)
        return gaussian_means_expect(means, np.sqrt(vars_), expit, self.rule)

    def answer_probability(self, x, action: int) -> float:
        """Posterior predictive probability that an elicited outcome is 1."""
        return self.theta_mean(x, action)

    def comparison_probability(self, x) -> float:
        """P(comparative answer c = 1) under the current posterior.

        The pair (eta1, eta0) is jointly Gaussian under the Laplace
        approximation; the expectation of expit((theta1 - theta0) / scale)
        is taken by a tensorized 2-D Gauss-Hermite rule.
        """
        psi1 = self.basis.design(x, 1)
        psi0 = self.basis.design(x, 0)
        mean = np.array([psi1 @ self.posterior.map_mean, psi0 @ self.posterior.map_mean])
        P = np.vstack([psi1, psi0])
        cov = P @ self.posterior.covariance @ P.T
        vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        t = self.rule.nodes
        grid = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
        w = np.outer(self.rule.weights, self.rule.weights).ravel()
        pts = mean + np.sqrt(2.0) * grid @ root.T
        delta = expit(pts[:, 0]) - expit(pts[:, 1])
        return float(w @ expit(delta / self.noise_scale)) / np.pi

    def type_s_at(self, x, orient: DecisionOrientation) -> TypeSEstimate:
        rec = self.recommend(x, orient)
        eff = self.effect_latent(x)
        sd = max(eff.sd, 1e-150)
        # P(the chosen arm is actually the worse one), on the latent scale.
        if orient is DecisionOrientation.HIGHER_IS_BETTER:
            wrong = std_normal_cdf(-eff.mean / sd) if rec == 1 else std_normal_cdf(eff.mean / sd)
        else:
            wrong = std_normal_cdf(eff.mean / sd) if rec == 1 else std_normal_cdf(-eff.mean / sd)
        return TypeSEstimate(
            gamma_hat=min(max(wrong, 0.0), 0.5),
            recommended_action=rec,
            effect_mean=eff.mean,
            effect_sd=sd,
        )

    def recommend(self, x, orient: DecisionOrientation) -> int:
        t1 = self.theta_mean(x, 1)
        t0 = self.theta_mean(x, 0)
        if orient is DecisionOrientation.HIGHER_IS_BETTER:
            return 1 if t1 > t0 else 0
        return 1 if t1 < t0 else 0

    def uncertainty(self, x, action: int) -> float:
        return bernoulli_entropy(self.theta_mean(x, action))

    def with_point_observation(self, x, action: int, y: float) -> "LogisticOutcomeModel":
        if float(y) not in (0.0, 1.0):
            raise ValueError("binary models take answers in {0, 1}")
        data = self.train.append(x, action, float(y), Source.ELICITED)
        return LogisticOutcomeModel.fit(
            data, self.basis, self.prior_variance, self.noise_scale,
            comparisons=self.comparisons, rule=self.rule, warm_start=self.posterior.map_mean,
        )

    def with_comparison(self, unit_index: int, c: int) -> "LogisticOutcomeModel":
        comps = self.comparisons + (ComparativeAnswer(unit_index=unit_index, c=int(c)),)
        return LogisticOutcomeModel.fit(
            self.train, self.basis, self.prior_variance, self.noise_scale,
            comparisons=comps, rule=self.rule, warm_start=self.posterior.map_mean,
        )

    def refit(self, factual: Dataset, elicited: Dataset | None, comparisons=(), seed: int = 0) -> "LogisticOutcomeModel":
        return LogisticOutcomeModel.fit(
            _merge(factual, elicited), self.basis, self.prior_variance, self.noise_scale,
            comparisons=tuple(comparisons), seed=seed, rule=self.rule,
        )

    def intrinsic_distance(self, u, v, action: int | None = None) -> float:
        diff = np.asarray(u, float).ravel() - np.asarray(v, float).ravel()
        return float(np.sqrt(diff @ diff)) / self.basis.lengthscale
