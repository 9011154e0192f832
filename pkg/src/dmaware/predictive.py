"""Gaussian posterior predictive of a single potential outcome."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GaussianPredictive:
    mean: float
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))
        if not self.variance >= 0.0:
            raise ValueError(f"variance must be nonnegative, got {self.variance}")

    @property
    def sd(self) -> float:
        return self.variance**0.5


def ite_predictive(p1: GaussianPredictive, p0: GaussianPredictive) -> GaussianPredictive:
    """Predictive of the treatment effect for independent per-action models.

    The effect is outcome-under-1 minus outcome-under-0, so the mean is the
    difference of means and the variance the sum of variances.
    """
    return GaussianPredictive(p1.mean - p0.mean, p1.variance + p0.variance)
