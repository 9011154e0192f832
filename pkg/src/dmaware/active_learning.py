"""Acquisition criteria and one-step-lookahead machinery for elicitation.

A pool state tracks the factual data D, the unanswered query pool U, the
elicited answers L, the target unit, and the current fitted model.  Scoring a
counterfactual candidate takes an expectation of a post-update quantity over
the candidate's answer distribution: 32-node Gauss-Hermite for continuous
outcomes (with elicited-source noise), exact two-branch enumeration for
binary and comparative answers.  Lookahead updates freeze hyperparameters;
``apply_answer`` does the full refit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .data import Dataset, Source
from .logistic import ComparativeAnswer
from .quadrature import QuadratureRule, gauss_hermite, gauss_hermite_expect
from .reliability import DecisionOrientation, bernoulli_entropy

_GH32 = gauss_hermite(32)


class Criterion(Enum):
    DM_AWARE = "dm_aware"
    DM_AWARE_EXPLORE = "dm_aware_explore"
    TARGETED_IG = "targeted_ig"
    EIG = "eig"
    UNCERTAINTY = "uncertainty"
    RANDOM = "random"


@dataclass(frozen=True)
class Candidate:
    """A query the oracle could answer: counterfactual (unit, action) or,
    with ``action=None``, a comparison of the two arms at the unit."""

    unit_index: int
    action: int | None = None

    @property
    def is_comparative(self) -> bool:
        return self.action is None


def _candidate_key(c: Candidate):
    return (c.unit_index, -1 if c.action is None else c.action)


@dataclass(frozen=True)
class KnnConfig:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class AcquisitionScore:
    scores: tuple[tuple[Candidate, float], ...]
    selected: Candidate
    criterion: Criterion


@dataclass(frozen=True)
class PoolState:
    factual: Dataset
    pool: tuple[Candidate, ...]
    elicited: Dataset
    comparisons: tuple[ComparativeAnswer, ...]
    target: np.ndarray
    model: object
    orientation: DecisionOrientation
    base_seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.target, dtype=float).ravel()
        t.flags.writeable = False
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "pool", tuple(self.pool))
        object.__setattr__(self, "comparisons", tuple(self.comparisons))

    def unit(self, unit_index: int) -> np.ndarray:
        return self.factual.units[unit_index]

    @property
    def n_answered(self) -> int:
        return len(self.elicited) + len(self.comparisons)


def initial_state(
    factual: Dataset,
    target,
    model,
    orientation: DecisionOrientation,
    query_kind: str = "counterfactual",
    base_seed: int = 0,
) -> PoolState:
    """Pool of one candidate per factual row: its unobserved arm, or its
    arm comparison for ``query_kind='comparative'``."""
    if query_kind == "counterfactual":
        pool = tuple(
            Candidate(unit_index=i, action=1 - int(a)) for i, a in enumerate(factual.actions)
        )
    elif query_kind == "comparative":
        pool = tuple(Candidate(unit_index=i, action=None) for i in range(len(factual)))
    else:
        raise ValueError(f"unknown query kind {query_kind!r}")
    return PoolState(
        factual=factual,
        pool=pool,
        elicited=Dataset.empty(factual.dim),
        comparisons=(),
        target=target,
        model=model,
        orientation=orientation,
        base_seed=base_seed,
    )


def gaussian_kl(p_new, p_old) -> float:
    """KL(N_new || N_old) in nats."""
    if p_old.variance <= 0 or p_new.variance < 0:
        raise ValueError("variances must be positive")
    return (
        0.5 * math.log(p_old.variance / p_new.variance)
        + (p_new.variance + (p_new.mean - p_old.mean) ** 2) / (2.0 * p_old.variance)
        - 0.5
    )


def bernoulli_kl(p_new: float, p_old: float) -> float:
    eps = 1e-12
    p = min(max(p_new, eps), 1.0 - eps)
    q = min(max(p_old, eps), 1.0 - eps)
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


def _updated_model(state: PoolState, candidate: Candidate, answer):
    x = state.unit(candidate.unit_index)
    if candidate.is_comparative:
        return state.model.with_comparison(candidate.unit_index, int(answer))
    return state.model.with_point_observation(x, candidate.action, float(answer))


def lookahead_type_s(state: PoolState, candidate: Candidate, hypothetical_answer) -> float:
    """Estimated Type S error rate at the target after hypothetically
    observing the candidate's answer (hyperparameters frozen)."""
    if candidate not in state.pool:
        raise ValueError("candidate is not in the pool")
    updated = _updated_model(state, candidate, hypothetical_answer)
    return updated.type_s_at(state.target, state.orientation).gamma_hat


def _expect_over_answers(state: PoolState, candidate: Candidate, fn, rule: QuadratureRule) -> float:
    model = state.model
    x = state.unit(candidate.unit_index)
    if candidate.is_comparative:
        p1 = model.comparison_probability(x)
        return p1 * fn(1) + (1.0 - p1) * fn(0)
    if model.kind == "binary":
        p1 = model.answer_probability(x, candidate.action)
        return p1 * fn(1.0) + (1.0 - p1) * fn(0.0)
    pred = model.answer_predictive(x, candidate.action)
    return gauss_hermite_expect(pred, fn, rule)


def score_dm_aware(state: PoolState, candidate: Candidate, rule: QuadratureRule = _GH32) -> float:
    """Expected post-query Type S error rate at the target; lower is better."""
    return _expect_over_answers(
        state, candidate, lambda y: lookahead_type_s(state, candidate, y), rule
    )


def score_dm_aware_explore(state: PoolState, candidate: Candidate, rule: QuadratureRule = _GH32) -> float:
    """Expected entropy reduction of Bern(gamma_hat); higher is better."""
    current = state.model.type_s_at(state.target, state.orientation).gamma_hat
    expected_entropy = _expect_over_answers(
        state,
        candidate,
        lambda y: bernoulli_entropy(lookahead_type_s(state, candidate, y)),
        rule,
    )
    return bernoulli_entropy(current) - expected_entropy


def _kl_at(model_new, model_old, x, action: int) -> float:
    if model_old.kind == "binary":
        return bernoulli_kl(model_new.theta_mean(x, action), model_old.theta_mean(x, action))
    return gaussian_kl(model_new.predict(x, action), model_old.predict(x, action))


def score_targeted_ig(state: PoolState, candidate: Candidate, rule: QuadratureRule = _GH32) -> float:
    """Expected KL from current to updated predictive at the target.

    Summed over both arms; with independent per-arm models only the queried
    arm moves, so the sum reduces to the queried arm's KL.
    """
    model = state.model
    target = state.target

    def gain(answer):
        updated = _updated_model(state, candidate, answer)
        return sum(_kl_at(updated, model, target, a) for a in (0, 1))

    return _expect_over_answers(state, candidate, gain, rule)


def _mean_kl_profile(model_new, model_old, X: np.ndarray) -> float:
    total = 0.0
    if model_old.kind == "binary":
        for a in (0, 1):
            p_new = model_new.theta_mean_batch(X, a)
            p_old = model_old.theta_mean_batch(X, a)
            total += sum(bernoulli_kl(pn, po) for pn, po in zip(p_new, p_old))
    else:
        for a in (0, 1):
            m_new, v_new = model_new.predict_batch(X, a)
            m_old, v_old = model_old.predict_batch(X, a)
            total += float(
                np.sum(
                    0.5 * np.log(v_old / v_new)
                    + (v_new + (m_new - m_old) ** 2) / (2.0 * v_old)
                    - 0.5
                )
            )
    # Per-location information is the sum over the two arms; average over
    # locations so pools of different sizes stay comparable.
    return total / X.shape[0]


def score_eig(state: PoolState, candidate: Candidate, rule: QuadratureRule = _GH32) -> float:
    """Expected KL averaged over all training locations and both arms."""
    model = state.model
    X = state.factual.units

    def gain(answer):
        updated = _updated_model(state, candidate, answer)
        return _mean_kl_profile(updated, model, X)

    return _expect_over_answers(state, candidate, gain, rule)


def score_uncertainty(state: PoolState, candidate: Candidate) -> float:
    """Predictive variance (continuous) or Bernoulli entropy (binary)."""
    model = state.model
    x = state.unit(candidate.unit_index)
    if candidate.is_comparative:
        return bernoulli_entropy(model.comparison_probability(x))
    return model.uncertainty(x, candidate.action)


_SCORERS = {
    Criterion.DM_AWARE: (score_dm_aware, min),
    Criterion.DM_AWARE_EXPLORE: (score_dm_aware_explore, max),
    Criterion.TARGETED_IG: (score_targeted_ig, max),
    Criterion.EIG: (score_eig, max),
    Criterion.UNCERTAINTY: (lambda s, c, rule=None: score_uncertainty(s, c), max),
}


def knn_filter(state: PoolState, knn: KnnConfig) -> tuple[Candidate, ...]:
    """Keep the k pool candidates nearest the target in the model's
    intrinsic (lengthscale-scaled) distance."""
    ranked = sorted(
        state.pool,
        key=lambda c: (
            state.model.intrinsic_distance(state.unit(c.unit_index), state.target, c.action),
            _candidate_key(c),
        ),
    )
    return tuple(sorted(ranked[: knn.k], key=_candidate_key))


def select_query(
    state: PoolState,
    criterion: Criterion,
    knn: KnnConfig | None = None,
    seed: int = 0,
    rule: QuadratureRule = _GH32,
) -> AcquisitionScore:
    """Score every (kNN-filtered) candidate and return the optimizer.

    Ties break toward the lowest unit index, then the lowest action.
    """
    if not state.pool:
        raise ValueError("query pool is empty")
    candidates = knn_filter(state, knn) if knn is not None else tuple(sorted(state.pool, key=_candidate_key))

    if criterion is Criterion.RANDOM:
        rng = np.random.default_rng(seed)
        scores = tuple((c, 0.0) for c in candidates)
        return AcquisitionScore(
            scores=scores,
            selected=candidates[int(rng.integers(len(candidates)))],
            criterion=criterion,
        )

    scorer, optimum = _SCORERS[criterion]
    scores = tuple((c, float(scorer(state, c, rule=rule))) for c in candidates)
    best_value = optimum(v for _, v in scores)
    selected = next(c for c, v in scores if v == best_value)
    return AcquisitionScore(scores=scores, selected=selected, criterion=criterion)


def apply_answer(state: PoolState, query: Candidate, answer) -> PoolState:
    """Commit an answered query: move it from U to L and refit the model
    (full refit, including hyperparameter re-optimization where applicable)."""
    if query not in state.pool:
        raise ValueError("query is not in the pool (already answered or never offered)")
    pool = tuple(c for c in state.pool if c != query)
    elicited = state.elicited
    comparisons = state.comparisons
    if query.is_comparative:
        comparisons = comparisons + (ComparativeAnswer(unit_index=query.unit_index, c=int(answer)),)
    else:
        elicited = elicited.append(
            state.unit(query.unit_index), query.action, float(answer), Source.ELICITED
        )
    refit_seed = state.base_seed + state.n_answered + 1
    model = state.model.refit(state.factual, elicited, comparisons, seed=refit_seed)
    return replace(
        state, pool=pool, elicited=elicited, comparisons=comparisons, model=model
    )
