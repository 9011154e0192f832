"""Gauss-Hermite quadrature for expectations under Gaussian predictives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .predictive import GaussianPredictive

SQRT_PI = math.sqrt(math.pi)
SQRT_2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Physicists' Gauss-Hermite rule: weights sum to sqrt(pi), nodes symmetric."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != (self.order,) or weights.shape != (self.order,):
            raise ValueError("nodes and weights must both have length `order`")
        if not (weights > 0).all():
            raise ValueError("weights must be positive")
        if abs(weights.sum() - SQRT_PI) > 1e-12:
            raise ValueError("weights must sum to sqrt(pi)")
        if not np.allclose(nodes, -nodes[::-1], atol=1e-12):
            raise ValueError("nodes must be symmetric about 0")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)


def gauss_hermite(order: int) -> QuadratureRule:
    if order < 1:
        raise ValueError("order must be >= 1")
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def gauss_hermite_expect(predictive: GaussianPredictive, integrand, rule: QuadratureRule) -> float:
    """E[f(Y)] for Y ~ N(mean, variance) by Gauss-Hermite quadrature.

    The integrand may be scalar-valued or vectorized over a 1-D array of
    evaluation points.
    """
    pts = predictive.mean + SQRT_2 * predictive.sd * rule.nodes
    try:
        vals = np.asarray(integrand(pts), dtype=float)
        if vals.shape != pts.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(integrand(p)) for p in pts])
    return float(rule.weights @ vals) / SQRT_PI


def gaussian_means_expect(means: np.ndarray, sds: np.ndarray, vec_fn, rule: QuadratureRule) -> np.ndarray:
    """Vectorized E[f(Y_i)] for a batch of Gaussians; `vec_fn` must broadcast."""
    pts = np.asarray(means, float)[:, None] + SQRT_2 * np.asarray(sds, float)[:, None] * rule.nodes[None, :]
    return vec_fn(pts) @ rule.weights / SQRT_PI
