"""Synthetic data generators and a tabular loader for external datasets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .basis import BasisConfig
from .data import Dataset, Source


class TabularError(ValueError):
    """Parse or schema failure with row/column diagnostics."""


@dataclass(frozen=True)
class SigmoidGenConfig:
    """Continuous-outcome generator with a sigmoid base response and a linear
    interaction effect; imbalance is controlled by the propensity.

    The treated probability is `propensity` for units with x <= 0 and
    1 - propensity for x > 0, so propensity 0.5 is balanced and 0.0 splits
    the arms perfectly at the origin.
    """

    propensity: float = 0.1
    noise_sd: float = 0.5
    seed: int = 0
    n_train: int = 50
    n_test: int = 500
    param_seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.propensity <= 0.5:
            raise ValueError("propensity must lie in [0, 0.5]")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class GeneratedContinuous:
    train: Dataset
    test_units: np.ndarray
    true_effects: np.ndarray
    beta0: float
    beta1: float
    b: int
    noise_sd: float

    def expected_outcome(self, x, action: int) -> float:
        x = float(np.asarray(x).ravel()[0])
        base = 2.0 * (1.0 / (1.0 + math.exp(-x + self.b)) - 0.5)
        return base + (self.beta0 + self.beta1 * x) * action

    def oracle_truth(self, query) -> float:
        return self.expected_outcome(query.x, query.action)


def gen_sigmoid_continuous(cfg: SigmoidGenConfig) -> GeneratedContinuous:
    """Draw one outcome model and one training set from it.

    `param_seed`, when given, draws the outcome-model parameters from their
    own stream so several training sets (e.g. different propensities) can
    share a single response surface.
    """
    param_rng = np.random.default_rng(cfg.seed if cfg.param_seed is None else cfg.param_seed)
    beta0, beta1 = param_rng.normal(0.0, math.sqrt(0.5), size=2)
    b = int(param_rng.integers(0, 2)) * 2 - 1

    rng = np.random.default_rng([cfg.seed, 1])
    x = rng.normal(0.0, 1.0, size=cfg.n_train)
    treat_prob = np.where(x <= 0, cfg.propensity, 1.0 - cfg.propensity)
    actions = (rng.random(cfg.n_train) < treat_prob).astype(int)
    base = 2.0 * (expit(x - b) - 0.5)
    mean = base + (beta0 + beta1 * x) * actions
    y = mean + rng.normal(0.0, cfg.noise_sd, size=cfg.n_train)

    x_test = rng.normal(0.0, 1.0, size=cfg.n_test)
    effects = beta0 + beta1 * x_test

    train = Dataset(x[:, None], actions, y, np.full(cfg.n_train, Source.FACTUAL))
    return GeneratedContinuous(
        train=train,
        test_units=x_test[:, None],
        true_effects=effects,
        beta0=float(beta0),
        beta1=float(beta1),
        b=b,
        noise_sd=cfg.noise_sd,
    )


@dataclass(frozen=True)
class BernoulliRbfConfig:
    """Binary-outcome generator: logistic response over 3 RBFs with an
    action interaction, deterministic action assignment by threshold."""

    w0: tuple[float, ...] = (0.5, 1.5, 1.5)
    w1: tuple[float, ...] = (1.0, -1.0, -3.0)
    centers: tuple[float, ...] = (-3.0, 0.0, 3.0)
    lengthscale: float = 1.0
    x_range: tuple[float, float] = (-4.5, 4.5)
    assignment_threshold: float = -1.5
    n_train: int = 30
    n_test: int = 9
    test_margin: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if len(self.w0) != len(self.centers) or len(self.w1) != len(self.centers):
            raise ValueError("w0, w1 and centers must have equal length")
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")

    def basis(self) -> BasisConfig:
        return BasisConfig(
            centers=np.asarray(self.centers, float)[:, None],
            lengthscale=self.lengthscale,
            includes_interaction=True,
        )


@dataclass(frozen=True)
class GeneratedBernoulli:
    train: Dataset
    test_units: np.ndarray
    true_theta: np.ndarray  # (n_test, 2): columns are actions 0 and 1
    config: BernoulliRbfConfig
    _weights: np.ndarray = field(repr=False, default=None)

    def theta(self, x, action: int) -> float:
        psi = self.config.basis().design(np.atleast_1d(x), action)
        return float(expit(psi @ self._weights))

    def oracle_truth(self, query) -> float:
        return self.theta(query.x, query.action)

    def region_slices(self) -> tuple[slice, ...]:
        third = self.config.n_test // 3
        return (slice(0, third), slice(third, 2 * third), slice(2 * third, self.config.n_test))


def gen_bernoulli_rbf(cfg: BernoulliRbfConfig) -> GeneratedBernoulli:
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.x_range
    x = rng.uniform(lo, hi, size=cfg.n_train)
    actions = (x < cfg.assignment_threshold).astype(int)
    weights = np.concatenate([cfg.w0, cfg.w1])
    basis = cfg.basis()
    theta_train = expit(basis.design_batch(x[:, None], actions) @ weights)
    y = (rng.random(cfg.n_train) < theta_train).astype(float)
    train = Dataset(x[:, None], actions, y, np.full(cfg.n_train, Source.FACTUAL))

    pad = cfg.test_margin * (hi - lo) / 2.0
    test = np.linspace(lo + pad, hi - pad, cfg.n_test)
    theta = np.column_stack(
        [
            expit(basis.design_batch(test[:, None], np.zeros(cfg.n_test)) @ weights),
            expit(basis.design_batch(test[:, None], np.ones(cfg.n_test)) @ weights),
        ]
    )
    return GeneratedBernoulli(
        train=train, test_units=test[:, None], true_theta=theta, config=cfg, _weights=weights
    )


@dataclass(frozen=True)
class TabularSchema:
    covariates: tuple[str, ...]
    action: str = "action"
    outcome: str = "outcome"
    mu0: str | None = None
    mu1: str | None = None

    def __post_init__(self):
        if len(self.covariates) < 1:
            raise ValueError("schema needs at least one covariate column")
        object.__setattr__(self, "covariates", tuple(self.covariates))


def _parse_cell(raw, row_num: int, column: str) -> float:
    if raw is None or raw == "":
        raise TabularError(f"row {row_num}: missing value in column {column!r}")
    try:
        return float(raw)
    except ValueError as exc:
        raise TabularError(f"row {row_num}: cannot parse {raw!r} in column {column!r}") from exc


def load_tabular(path, schema: TabularSchema, standardize: bool = False):
    """Load a comma-separated file with a header row into a Dataset.

    Returns ``(dataset, truth)`` where ``truth`` is an (n, 2) array of the
    true expected outcomes per action when the schema names mu0/mu1 columns,
    else None.  Row numbers in errors are 1-based over data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = list(schema.covariates) + [schema.action, schema.outcome]
        needed += [c for c in (schema.mu0, schema.mu1) if c is not None]
        missing = [c for c in needed if c not in header]
        if missing:
            raise TabularError(f"schema mismatch: missing columns {missing}")
        units, actions, outcomes, truth = [], [], [], []
        for row_num, row in enumerate(reader, start=1):
            units.append([_parse_cell(row.get(c), row_num, c) for c in schema.covariates])
            a = _parse_cell(row.get(schema.action), row_num, schema.action)
            if a not in (0.0, 1.0):
                raise TabularError(f"row {row_num}: action must be 0 or 1, got {a}")
            actions.append(int(a))
            outcomes.append(_parse_cell(row.get(schema.outcome), row_num, schema.outcome))
            if schema.mu0 is not None and schema.mu1 is not None:
                truth.append(
                    [
                        _parse_cell(row.get(schema.mu0), row_num, schema.mu0),
                        _parse_cell(row.get(schema.mu1), row_num, schema.mu1),
                    ]
                )
    if not units:
        raise TabularError("file contains no data rows")
    X = np.asarray(units, dtype=float)
    if standardize:
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        X = (X - X.mean(axis=0)) / sd
    dataset = Dataset(X, actions, outcomes, np.full(len(actions), Source.FACTUAL))
    return dataset, (np.asarray(truth, dtype=float) if truth else None)


def save_tabular(path, dataset: Dataset, schema: TabularSchema, truth=None) -> None:
    """Write a dataset (and optional truth columns) in the loader's format."""
    columns = list(schema.covariates) + [schema.action, schema.outcome]
    if truth is not None:
        if schema.mu0 is None or schema.mu1 is None:
            raise TabularError("schema must name mu0/mu1 columns to save truth")
        columns += [schema.mu0, schema.mu1]
    if len(schema.covariates) != dataset.dim:
        raise TabularError(
            f"schema has {len(schema.covariates)} covariates, dataset has {dataset.dim}"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(len(dataset)):
            row = [f"{v:.17g}" for v in dataset.units[i]]
            row.append(str(int(dataset.actions[i])))
            row.append(f"{dataset.outcomes[i]:.17g}")
            if truth is not None:
                row += [f"{truth[i, 0]:.17g}", f"{truth[i, 1]:.17g}"]
            writer.writerow(row)


def standin_schema(d: int = 25) -> TabularSchema:
    return TabularSchema(
        covariates=tuple(f"x{j}" for j in range(d)),
        action="action",
        outcome="outcome",
        mu0="mu0",
        mu1="mu1",
    )


def gen_tabular_standin(n: int = 747, d: int = 25, seed: int = 0):
    """Synthetic stand-in shaped like a 747 x 25 semi-synthetic medical set.

    Six continuous covariates plus binary ones, imbalance induced by dropping
    part of the treated population in one covariate region, nonlinear
    outcome surfaces with interactions, and a sign-varying effect.
    Returns (dataset, truth) matching :func:`standin_schema`.
    """
    if d < 8:
        raise ValueError("stand-in generator needs d >= 8")
    rng = np.random.default_rng(seed)
    n_cont = 6
    pool = int(n * 1.6)
    Xc = rng.normal(0.0, 1.0, size=(pool, n_cont))
    pb = rng.uniform(0.1, 0.5, size=d - n_cont)
    Xb = (rng.random((pool, d - n_cont)) < pb).astype(float)
    X = np.hstack([Xc, Xb])

    logits = 0.8 * X[:, 0] - 0.5 * X[:, 1] + 0.6 * X[:, n_cont] - 0.9
    a = (rng.random(pool) < expit(logits)).astype(int)
    # Non-overlap: thin out treated units on one side of the first covariate.
    drop = (a == 1) & (X[:, 0] < 0.0) & (rng.random(pool) < 0.85)
    keep = ~drop
    X, a = X[keep][:n], a[keep][:n]
    if X.shape[0] < n:
        raise ValueError("stand-in pool too small after imbalance thinning")

    mu0 = 2.0 * expit(X[:, 0] + 0.5 * X[:, 1] * X[:, 2]) + 0.4 * X[:, n_cont] + 0.2 * X[:, 3]
    tau = 0.6 + 1.2 * X[:, 0] - 0.9 * X[:, n_cont + 1] + 0.5 * np.sin(X[:, 2])
    mu1 = mu0 + tau
    y = np.where(a == 1, mu1, mu0) + rng.normal(0.0, 0.5, size=n)

    dataset = Dataset(X, a, y, np.full(n, Source.FACTUAL))
    return dataset, np.column_stack([mu0, mu1])
