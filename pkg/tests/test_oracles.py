"""Simulated oracle behavior: determinism, noise calibration, flips."""

import math

import numpy as np
import pytest

from dmaware.oracles import (
    ComparisonQuery,
    OracleConfig,
    OracleKind,
    PointQuery,
    answer_comparison,
    answer_point,
)
from dmaware.reliability import DecisionOrientation

HIGHER = DecisionOrientation.HIGHER_IS_BETTER
LOWER = DecisionOrientation.LOWER_IS_BETTER


def linear_truth(query: PointQuery) -> float:
    return float(query.x[0]) + 2.0 * query.action


class TestPoint:
    def test_noiseless_returns_exact_truth(self):
        cfg = OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=0.0, seed=1)
        q = PointQuery(3, [0.7], 1)
        assert answer_point(linear_truth, q, cfg) == pytest.approx(2.7, abs=1e-15)

    def test_same_seed_same_query_identical(self):
        cfg = OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=0.5, seed=42)
        q = PointQuery(5, [1.0], 0)
        assert answer_point(linear_truth, q, cfg) == answer_point(linear_truth, q, cfg)

    def test_different_queries_decorrelate(self):
        cfg = OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=0.5, seed=42)
        a = answer_point(linear_truth, PointQuery(1, [0.0], 0), cfg)
        b = answer_point(linear_truth, PointQuery(2, [0.0], 0), cfg)
        assert a != b

    def test_noise_sd_calibrated(self):
        q = PointQuery(0, [0.0], 0)
        answers = [
            answer_point(
                linear_truth, q, OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=0.8, seed=s)
            )
            for s in range(10**4)
        ]
        sd = np.std(answers, ddof=1)
        assert abs(sd - 0.8) / 0.8 < 0.05

    def test_bernoulli_kind_draws_binary(self):
        cfg = OracleConfig(OracleKind.POINT_BERNOULLI, seed=3)
        theta_truth = lambda q: 0.7  # noqa: E731
        answers = {
            answer_point(theta_truth, PointQuery(i, [0.0], 1), cfg) for i in range(50)
        }
        assert answers <= {0.0, 1.0}

    def test_bernoulli_frequency(self):
        theta_truth = lambda q: 0.3  # noqa: E731
        answers = [
            answer_point(
                theta_truth,
                PointQuery(0, [0.0], 1),
                OracleConfig(OracleKind.POINT_BERNOULLI, seed=s),
            )
            for s in range(10**4)
        ]
        se = math.sqrt(0.3 * 0.7 / 10**4)
        assert abs(np.mean(answers) - 0.3) < 3 * se

    def test_kind_mismatch_rejected(self):
        cfg = OracleConfig(OracleKind.COMPARATIVE_FLIP, seed=0)
        with pytest.raises(ValueError):
            answer_point(linear_truth, PointQuery(0, [0.0], 0), cfg)


class TestComparison:
    def test_exact_when_flip_probability_zero(self):
        cfg = OracleConfig(OracleKind.COMPARATIVE_FLIP, flip_probability=0.0, seed=0)
        assert answer_comparison(linear_truth, ComparisonQuery(0, [0.0]), cfg, HIGHER) == 1
        assert answer_comparison(linear_truth, ComparisonQuery(0, [0.0]), cfg, LOWER) == 0

    def test_tie_resolves_to_zero(self):
        tie_truth = lambda q: 1.0  # noqa: E731
        cfg = OracleConfig(OracleKind.COMPARATIVE_FLIP, flip_probability=0.0, seed=0)
        assert answer_comparison(tie_truth, ComparisonQuery(0, [0.0]), cfg, HIGHER) == 0
        assert answer_comparison(tie_truth, ComparisonQuery(0, [0.0]), cfg, LOWER) == 0

    def test_flip_frequency(self):
        flips = 0
        n = 10**4
        for s in range(n):
            cfg = OracleConfig(OracleKind.COMPARATIVE_FLIP, flip_probability=0.2, seed=s)
            if answer_comparison(linear_truth, ComparisonQuery(0, [0.0]), cfg, HIGHER) == 0:
                flips += 1
        se = math.sqrt(0.2 * 0.8 / n)
        assert abs(flips / n - 0.2) < 3 * se

    def test_determinism(self):
        cfg = OracleConfig(OracleKind.COMPARATIVE_FLIP, flip_probability=0.3, seed=11)
        q = ComparisonQuery(4, [0.5])
        assert answer_comparison(linear_truth, q, cfg) == answer_comparison(linear_truth, q, cfg)

    def test_kind_mismatch_rejected(self):
        cfg = OracleConfig(OracleKind.POINT_NOISY, seed=0)
        with pytest.raises(ValueError):
            answer_comparison(linear_truth, ComparisonQuery(0, [0.0]), cfg)

    def test_human_kind_never_answers(self):
        cfg = OracleConfig(OracleKind.HUMAN, seed=0)
        with pytest.raises(ValueError):
            answer_point(linear_truth, PointQuery(0, [0.0], 0), cfg)
        with pytest.raises(ValueError):
            answer_comparison(linear_truth, ComparisonQuery(0, [0.0]), cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(OracleKind.POINT_NOISY, point_noise_sd=-1.0)
    with pytest.raises(ValueError):
        OracleConfig(OracleKind.COMPARATIVE_FLIP, flip_probability=0.5)
