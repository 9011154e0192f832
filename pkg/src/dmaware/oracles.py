"""Simulated answer sources for counterfactual and comparative queries.

Oracles see only the ground truth, the query, and their own config — never a
model handle — so answers cannot depend on model state.  Answers are
deterministic given (seed, query identity, config): the RNG is keyed on the
seed together with the queried unit index and action.

The ground-truth contract is a callable ``truth(query: PointQuery) -> float``
returning the true expected outcome (continuous) or the true success
probability (binary) of the queried unit under the queried action.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .reliability import DecisionOrientation


class OracleKind(Enum):
    POINT_NOISY = "point_noisy"
    POINT_BERNOULLI = "point_bernoulli"
    COMPARATIVE_FLIP = "comparative_flip"
    HUMAN = "human"


@dataclass(frozen=True)
class OracleConfig:
    kind: OracleKind
    point_noise_sd: float = 0.0
    flip_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.point_noise_sd < 0:
            raise ValueError("point_noise_sd must be nonnegative")
        if not 0.0 <= self.flip_probability < 0.5:
            raise ValueError("flip_probability must lie in [0, 0.5)")


@dataclass(frozen=True)
class PointQuery:
    unit_index: int
    x: np.ndarray
    action: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        x.flags.writeable = False
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class ComparisonQuery:
    unit_index: int
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        x.flags.writeable = False
        object.__setattr__(self, "x", x)


def _rng_for(cfg: OracleConfig, unit_index: int, action: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, unit_index, action])


def answer_point(truth, query: PointQuery, cfg: OracleConfig) -> float:
    """Noisy point answer about one counterfactual outcome.

    POINT_NOISY returns truth plus Gaussian noise; POINT_BERNOULLI draws a
    binary outcome with the true success probability.
    """
    if cfg.kind is OracleKind.POINT_NOISY:
        rng = _rng_for(cfg, query.unit_index, query.action)
        return float(truth(query)) + float(rng.normal(0.0, cfg.point_noise_sd))
    if cfg.kind is OracleKind.POINT_BERNOULLI:
        rng = _rng_for(cfg, query.unit_index, query.action)
        return float(rng.random() < float(truth(query)))
    raise ValueError(f"oracle kind {cfg.kind} does not answer point queries")


def answer_comparison(
    truth,
    query: ComparisonQuery,
    cfg: OracleConfig,
    orient: DecisionOrientation = DecisionOrientation.HIGHER_IS_BETTER,
) -> int:
    """Possibly-flipped bit: 1 iff arm 1 is truly better under `orient`.

    Ties count arm 0 as better (c = 0) before any flip.
    """
    if cfg.kind is not OracleKind.COMPARATIVE_FLIP:
        raise ValueError(f"oracle kind {cfg.kind} does not answer comparison queries")
    e1 = float(truth(PointQuery(query.unit_index, query.x, 1)))
    e0 = float(truth(PointQuery(query.unit_index, query.x, 0)))
    if orient is DecisionOrientation.HIGHER_IS_BETTER:
        c = 1 if e1 > e0 else 0
    else:
        c = 1 if e1 < e0 else 0
    rng = _rng_for(cfg, query.unit_index, 2)
    if rng.random() < cfg.flip_probability:
        c = 1 - c
    return c
