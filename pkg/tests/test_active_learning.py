"""Acquisition scoring, lookahead, and pool bookkeeping."""

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from dmaware.active_learning import (
    Candidate,
    Criterion,
    KnnConfig,
    apply_answer,
    bernoulli_kl,
    gaussian_kl,
    initial_state,
    knn_filter,
    lookahead_type_s,
    score_dm_aware,
    score_dm_aware_explore,
    score_eig,
    score_targeted_ig,
    score_uncertainty,
    select_query,
)
from dmaware.basis import BasisConfig
from dmaware.blr import BLRConfig
from dmaware.data import Dataset, Source
from dmaware.datagen import BernoulliRbfConfig, gen_bernoulli_rbf
from dmaware.gp import GPHyperparams, HyperPrior, gp_fit
from dmaware.outcome import BLROutcomeModel, GPOutcomeModel, LogisticOutcomeModel
from dmaware.predictive import GaussianPredictive
from dmaware.quadrature import gauss_hermite
from dmaware.reliability import DecisionOrientation, bernoulli_entropy, estimate_type_s_gaussian

HIGHER = DecisionOrientation.HIGHER_IS_BETTER
LOWER = DecisionOrientation.LOWER_IS_BETTER
GH32 = gauss_hermite(32)


def blr_fixture(seed=0, n=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1))
    a = np.resize([0, 1], n)
    y = np.where(a == 1, 0.8, 0.0) + 0.4 * X[:, 0] + 0.2 * rng.normal(size=n)
    data = Dataset(X, a, y, np.full(n, Source.FACTUAL))
    basis = BasisConfig(np.array([[-1.0], [0.0], [1.0]]), 1.0, includes_interaction=True)
    model = BLROutcomeModel.fit(data, basis, BLRConfig(1.0, 0.25))
    return initial_state(data, np.array([0.2]), model, HIGHER, base_seed=seed)


def gp_fixture(seed=0, n=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1))
    a = np.resize([0, 1], n)
    y = rng.normal(size=n)
    data = Dataset(X, a, y, np.full(n, Source.FACTUAL))
    hp = GPHyperparams(np.array([0.8]), 1.0, 0.1, 0.2)
    model = GPOutcomeModel(
        arm0=gp_fit(data, 0, hyperparams=hp),
        arm1=gp_fit(data, 1, hyperparams=hp),
        prior=HyperPrior(),
        seed=seed,
        reoptimize_on_refit=False,
    )
    return initial_state(data, np.array([0.1]), model, HIGHER, base_seed=seed)


def binary_fixture(seed=0):
    gen = gen_bernoulli_rbf(BernoulliRbfConfig(seed=seed))
    model = LogisticOutcomeModel.fit(gen.train, gen.config.basis(), 10.0)
    return gen, initial_state(gen.train, gen.test_units[0], model, LOWER, base_seed=seed)


def comparative_fixture(seed=0):
    gen = gen_bernoulli_rbf(BernoulliRbfConfig(seed=seed))
    model = LogisticOutcomeModel.fit(gen.train, gen.config.basis(), 10.0)
    return gen, initial_state(
        gen.train, gen.test_units[4], model, LOWER, query_kind="comparative", base_seed=seed
    )


@dataclass(frozen=True)
class StubModel:
    """Minimal outcome-model double with a controllable answer predictive."""

    gamma: float
    answer_mean: float = 0.5
    answer_var: float = 0.0
    kind = "continuous"

    def type_s_at(self, x, orient):
        return estimate_type_s_gaussian(GaussianPredictive(1.0, 1.0), orient)

    def answer_predictive(self, x, action):
        return GaussianPredictive(self.answer_mean, self.answer_var)

    def with_point_observation(self, x, action, y):
        return self

    def uncertainty(self, x, action):
        return self.answer_var

    def intrinsic_distance(self, u, v, action=None):
        return float(np.linalg.norm(np.asarray(u) - np.asarray(v)))


def model_checksum(model) -> str:
    h = hashlib.sha256()
    for arm in (model.arm0, model.arm1):
        for a in (arm.X, arm.y, arm.source, arm.chol, arm.alpha):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(arm.hyperparams.lengthscales.tobytes())
    return h.hexdigest()


class TestLookahead:
    def test_confirming_answer_contracts_gamma(self):
        state = blr_fixture()
        for cand in state.pool:
            x = state.unit(cand.unit_index)
            mean_answer = state.model.predict(x, cand.action).mean
            before = state.model.type_s_at(state.target, HIGHER).gamma_hat
            after = lookahead_type_s(state, cand, mean_answer)
            assert after <= before + 1e-9

    def test_binary_branches_stay_in_range(self):
        _, state = binary_fixture()
        for cand in state.pool[:5]:
            for y in (0.0, 1.0):
                assert 0.0 <= lookahead_type_s(state, cand, y) <= 0.5

    def test_gp_lookahead_matches_from_scratch_refit(self):
        state = gp_fixture(n=3)
        cand = state.pool[0]
        x = state.unit(cand.unit_index)
        answer = 0.37
        got = lookahead_type_s(state, cand, answer)

        arm = state.model._arm(cand.action)
        X2 = np.vstack([arm.X, x[None, :]])
        y2 = np.append(arm.y, answer)
        src2 = np.append(arm.source, Source.ELICITED)
        data2 = Dataset(X2, np.full(len(y2), cand.action), y2, src2)
        refit_arm = gp_fit(data2, cand.action, hyperparams=arm.hyperparams)
        other = state.model._arm(1 - cand.action)
        p_new = refit_arm.predict(state.target)
        p_other = other.predict(state.target)
        if cand.action == 1:
            tau = GaussianPredictive(p_new.mean - p_other.mean, p_new.variance + p_other.variance)
        else:
            tau = GaussianPredictive(p_other.mean - p_new.mean, p_new.variance + p_other.variance)
        want = estimate_type_s_gaussian(tau, HIGHER).gamma_hat
        assert got == pytest.approx(want, abs=1e-8)

    def test_lookahead_never_mutates_state(self):
        state = gp_fixture()
        before = model_checksum(state.model)
        for cand in state.pool:
            lookahead_type_s(state, cand, 0.9)
        assert model_checksum(state.model) == before

    def test_candidate_outside_pool_rejected(self):
        state = blr_fixture()
        with pytest.raises(ValueError):
            lookahead_type_s(state, Candidate(unit_index=999, action=0), 0.0)


class TestDmAware:
    def test_zero_variance_candidate_equals_mean_lookahead(self):
        base = blr_fixture()
        stub = StubModel(gamma=0.2, answer_mean=0.7, answer_var=0.0)
        state = replace(base, model=stub)
        cand = state.pool[0]
        score = score_dm_aware(state, cand)
        assert score == pytest.approx(lookahead_type_s(state, cand, 0.7), abs=1e-12)

    def test_binary_scores_equal_exact_enumeration(self):
        _, state = binary_fixture()
        for cand in state.pool[:8]:
            x = state.unit(cand.unit_index)
            p1 = state.model.answer_probability(x, cand.action)
            want = p1 * lookahead_type_s(state, cand, 1.0) + (1 - p1) * lookahead_type_s(
                state, cand, 0.0
            )
            assert score_dm_aware(state, cand) == pytest.approx(want, abs=1e-12)

    def test_comparative_scores_equal_exact_enumeration(self):
        _, state = comparative_fixture()
        for cand in state.pool[:5]:
            x = state.unit(cand.unit_index)
            pc = state.model.comparison_probability(x)
            want = pc * lookahead_type_s(state, cand, 1) + (1 - pc) * lookahead_type_s(
                state, cand, 0
            )
            assert score_dm_aware(state, cand) == pytest.approx(want, abs=1e-12)

    def test_degenerate_pool_returns_single_candidate(self):
        state = blr_fixture()
        single = replace(state, pool=(state.pool[3],))
        sel = select_query(single, Criterion.DM_AWARE)
        assert sel.selected == state.pool[3]

    def test_local_candidate_beats_far_one_on_monotone_fixture(self):
        # Monotone 1-D fixture: a candidate near the target reduces the
        # expected Type S error at least as much as the farthest one.
        rng = np.random.default_rng(42)
        X = np.linspace(-2, 2, 8)[:, None]
        a = np.resize([0, 1], 8)
        y = 0.5 * X[:, 0] + np.where(a == 1, 0.3, 0.0) + 0.1 * rng.normal(size=8)
        data = Dataset(X, a, y, np.full(8, Source.FACTUAL))
        basis = BasisConfig(np.array([[-1.5], [0.0], [1.5]]), 1.2, includes_interaction=True)
        model = BLROutcomeModel.fit(data, basis, BLRConfig(1.0, 0.25))
        target = np.array([0.0])
        state = initial_state(data, target, model, HIGHER, base_seed=0)
        dists = [abs(float(state.unit(c.unit_index)[0])) for c in state.pool]
        near = state.pool[int(np.argmin(dists))]
        far = state.pool[int(np.argmax(dists))]
        assert score_dm_aware(state, near) <= score_dm_aware(state, far) + 1e-12


class TestExplore:
    def test_unchanged_branches_score_zero(self):
        base = blr_fixture()
        stub = StubModel(gamma=0.3)  # with_point_observation returns self
        state = replace(base, model=stub)
        assert score_dm_aware_explore(state, state.pool[0]) == pytest.approx(0.0, abs=1e-15)

    def test_zero_entropy_start_cannot_gain(self):
        state = blr_fixture()
        # Overwhelm one arm so gamma_hat underflows to exactly 0.
        strong = state.factual
        for _ in range(60):
            strong = strong.append([0.2], 1, 5.0, Source.FACTUAL)
            strong = strong.append([0.2], 0, -5.0, Source.FACTUAL)
        model = BLROutcomeModel.fit(strong, state.model.basis, BLRConfig(1.0, 0.01))
        sure = initial_state(strong, state.target, model, HIGHER, base_seed=0)
        assert sure.model.type_s_at(sure.target, HIGHER).gamma_hat == 0.0
        for cand in sure.pool[:4]:
            assert score_dm_aware_explore(sure, cand) <= 0.0

    def test_matches_brute_force_enumeration(self):
        _, state = binary_fixture()
        cand = state.pool[2]
        x = state.unit(cand.unit_index)
        p1 = state.model.answer_probability(x, cand.action)
        g0 = state.model.type_s_at(state.target, LOWER).gamma_hat
        want = bernoulli_entropy(g0) - (
            p1 * bernoulli_entropy(lookahead_type_s(state, cand, 1.0))
            + (1 - p1) * bernoulli_entropy(lookahead_type_s(state, cand, 0.0))
        )
        assert score_dm_aware_explore(state, cand) == pytest.approx(want, abs=1e-12)


class TestTargetedIG:
    def test_gaussian_kl_matches_numeric_integration(self):
        p_new = GaussianPredictive(0.4, 0.6)
        p_old = GaussianPredictive(-0.2, 1.3)
        closed = gaussian_kl(p_new, p_old)

        def integrand(x):
            lp = norm.logpdf(x, p_new.mean, p_new.sd)
            lq = norm.logpdf(x, p_old.mean, p_old.sd)
            return math.exp(lp) * (lp - lq)

        numeric, _ = quad(integrand, -12, 12, limit=200)
        assert closed == pytest.approx(numeric, abs=1e-8)

    def test_nonnegative_for_every_candidate(self):
        state = blr_fixture()
        for cand in state.pool:
            assert score_targeted_ig(state, cand) >= -1e-12

    def test_uncoupled_candidate_scores_nearly_zero(self):
        state = gp_fixture(n=4)
        # Distant unit in arm 0 while the target sits at 0.1: kernel ~ 0.
        far = state.factual.append([60.0], 1, 0.0, Source.FACTUAL)
        model = replace(
            state.model,
            arm0=gp_fit(far, 0, hyperparams=state.model.arm0.hyperparams),
            arm1=gp_fit(far, 1, hyperparams=state.model.arm1.hyperparams),
        )
        state2 = initial_state(far, state.target, model, HIGHER, base_seed=0)
        cand = next(c for c in state2.pool if float(state2.unit(c.unit_index)[0]) == 60.0)
        assert cand.action == 0
        assert abs(score_targeted_ig(state2, cand)) < 1e-12


class TestEIG:
    def test_single_location_reduces_to_targeted(self):
        rng = np.random.default_rng(1)
        X = np.array([[0.1]])
        data = Dataset(X, [0], [0.3], [Source.FACTUAL])
        basis = BasisConfig(np.array([[0.0]]), 1.0, includes_interaction=True)
        model = BLROutcomeModel.fit(data, basis, BLRConfig(1.0, 0.25))
        state = initial_state(data, X[0], model, HIGHER, base_seed=0)
        cand = state.pool[0]
        assert score_eig(state, cand) == pytest.approx(score_targeted_ig(state, cand), abs=1e-12)

    def test_nonnegative(self):
        state = blr_fixture()
        for cand in state.pool:
            assert score_eig(state, cand) >= -1e-12

    def test_matches_per_location_kl_sum_oracle(self):
        state = gp_fixture(n=4)
        cand = state.pool[1]
        rule = GH32
        x_c = state.unit(cand.unit_index)
        pred = state.model.answer_predictive(x_c, cand.action)
        pts = pred.mean + math.sqrt(2) * pred.sd * rule.nodes
        total = 0.0
        for w, y_hyp in zip(rule.weights, pts):
            updated = state.model.with_point_observation(x_c, cand.action, float(y_hyp))
            kl_sum = 0.0
            for u in state.factual.units:
                for a in (0, 1):
                    kl_sum += gaussian_kl(updated.predict(u, a), state.model.predict(u, a))
            total += w * (kl_sum / len(state.factual))
        want = total / math.sqrt(math.pi)
        assert score_eig(state, cand) == pytest.approx(want, abs=1e-8)


class TestUncertainty:
    def test_far_candidate_scores_higher_than_duplicate(self):
        state = gp_fixture(n=4)
        data = state.factual.append([30.0], 0, 0.0, Source.FACTUAL)
        dup_x = data.units[0]
        data = data.append(dup_x, 1 - int(data.actions[0]), 0.1, Source.FACTUAL)
        model = replace(
            state.model,
            arm0=gp_fit(data, 0, hyperparams=state.model.arm0.hyperparams),
            arm1=gp_fit(data, 1, hyperparams=state.model.arm1.hyperparams),
        )
        st = initial_state(data, state.target, model, HIGHER, base_seed=0)
        far = next(c for c in st.pool if float(st.unit(c.unit_index)[0]) == 30.0)
        dup = st.pool[0]
        assert score_uncertainty(st, far) > score_uncertainty(st, dup)

    def test_binary_entropy_extremes(self):
        _, state = binary_fixture()

        @dataclass(frozen=True)
        class FixedTheta:
            theta: float
            kind = "binary"

            def theta_mean(self, x, action):
                return self.theta

            def uncertainty(self, x, action):
                return bernoulli_entropy(self.theta)

        half = replace(state, model=FixedTheta(0.5))
        zero = replace(state, model=FixedTheta(0.0))
        one = replace(state, model=FixedTheta(1.0))
        cand = state.pool[0]
        assert score_uncertainty(half, cand) == pytest.approx(math.log(2), abs=1e-12)
        assert score_uncertainty(zero, cand) == 0.0
        assert score_uncertainty(one, cand) == 0.0


class TestSelectQuery:
    def test_every_criterion_attains_its_optimum(self):
        _, bstate = binary_fixture()
        cstates = [blr_fixture(seed=3), gp_fixture(seed=4, n=4)]
        _, compstate = comparative_fixture(seed=2)
        scorers = {
            Criterion.DM_AWARE: (score_dm_aware, min),
            Criterion.DM_AWARE_EXPLORE: (score_dm_aware_explore, max),
            Criterion.TARGETED_IG: (score_targeted_ig, max),
            Criterion.EIG: (score_eig, max),
            Criterion.UNCERTAINTY: (lambda s, c: score_uncertainty(s, c), max),
        }
        for state in [bstate, compstate] + cstates:
            for crit, (fn, opt) in scorers.items():
                sel = select_query(state, crit, seed=0)
                values = [fn(state, c) for c in sorted(state.pool, key=lambda c: (c.unit_index, -1 if c.action is None else c.action))]
                assert dict(sel.scores)[sel.selected] == opt(values)

    def test_single_candidate_pool(self):
        state = blr_fixture()
        single = replace(state, pool=(state.pool[2],))
        for crit in Criterion:
            assert select_query(single, crit, seed=1).selected == state.pool[2]

    def test_knn_with_large_k_is_identity(self):
        _, state = binary_fixture()
        unrestricted = select_query(state, Criterion.DM_AWARE)
        filtered = select_query(state, Criterion.DM_AWARE, knn=KnnConfig(k=len(state.pool)))
        assert unrestricted.selected == filtered.selected
        assert unrestricted.scores == filtered.scores

    def test_knn_restricts_to_nearest(self):
        _, state = binary_fixture()
        subset = knn_filter(state, KnnConfig(k=3))
        assert len(subset) == 3
        dists = sorted(
            state.model.intrinsic_distance(state.unit(c.unit_index), state.target, c.action)
            for c in state.pool
        )
        got = sorted(
            state.model.intrinsic_distance(state.unit(c.unit_index), state.target, c.action)
            for c in subset
        )
        assert got == dists[:3]

    def test_bit_identical_scores_tie_break_to_lowest_index(self):
        state = blr_fixture()
        # Duplicate covariate rows produce bit-identical scores.
        data = Dataset(
            np.array([[0.5], [0.5]]), [0, 0], [0.2, 0.2], np.full(2, Source.FACTUAL)
        )
        basis = state.model.basis
        model = BLROutcomeModel.fit(data, basis, BLRConfig(1.0, 0.25))
        st = initial_state(data, np.array([0.5]), model, HIGHER, base_seed=0)
        sel = select_query(st, Criterion.DM_AWARE)
        assert sel.scores[0][1] == sel.scores[1][1]
        assert sel.selected.unit_index == 0

    def test_empty_pool_rejected(self):
        state = blr_fixture()
        empty = replace(state, pool=())
        with pytest.raises(ValueError):
            select_query(empty, Criterion.DM_AWARE)

    def test_random_criterion_is_seed_deterministic(self):
        state = blr_fixture()
        a = select_query(state, Criterion.RANDOM, seed=5).selected
        b = select_query(state, Criterion.RANDOM, seed=5).selected
        assert a == b


class TestApplyAnswer:
    def test_bookkeeping(self):
        state = blr_fixture()
        query = state.pool[1]
        before_d = state.factual
        new = apply_answer(state, query, 0.42)
        assert len(new.pool) == len(state.pool) - 1
        assert len(new.elicited) == 1
        assert new.factual is before_d
        assert new.elicited.source[0] == Source.ELICITED

    def test_double_answer_rejected(self):
        state = blr_fixture()
        query = state.pool[0]
        new = apply_answer(state, query, 0.1)
        with pytest.raises(ValueError):
            apply_answer(new, query, 0.1)

    def test_conservation_over_sequences(self):
        state = blr_fixture(n=8)
        total = len(state.pool)
        rng = np.random.default_rng(0)
        seen = set()
        for _ in range(5):
            query = state.pool[int(rng.integers(len(state.pool)))]
            state = apply_answer(state, query, float(rng.normal()))
            assert (query.unit_index, query.action) not in seen
            seen.add((query.unit_index, query.action))
            assert len(state.pool) + state.n_answered == total

    def test_comparative_bookkeeping(self):
        _, state = comparative_fixture()
        query = state.pool[0]
        new = apply_answer(state, query, 1)
        assert len(new.comparisons) == 1
        assert new.comparisons[0].unit_index == query.unit_index
        assert len(new.elicited) == 0

    def test_binary_point_answer_validated(self):
        _, state = binary_fixture()
        with pytest.raises(ValueError):
            apply_answer(state, state.pool[0], 0.5)


def test_bernoulli_kl_nonnegative_and_zero_on_equal():
    assert bernoulli_kl(0.3, 0.3) == 0.0
    for p, q in ((0.1, 0.9), (0.5, 0.2), (0.99, 0.01)):
        assert bernoulli_kl(p, q) > 0.0
