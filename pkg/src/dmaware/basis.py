"""Radial basis features, optionally duplicated with an action multiplier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BasisConfig:
    """RBF feature map phi_j(x) = exp(-||x - c_j||^2 / (2 l^2)).

    With ``includes_interaction`` the design for (x, a) is
    [phi(x), a * phi(x)], which lets one weight vector carry both a base
    response and an action interaction.
    """

    centers: np.ndarray
    lengthscale: float
    includes_interaction: bool = False

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim == 1:
            centers = centers[:, None]
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("need at least one center, shaped (m, d)")
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        centers.flags.writeable = False
        object.__setattr__(self, "centers", centers)

    @property
    def n_features(self) -> int:
        return self.centers.shape[0]

    @property
    def n_weights(self) -> int:
        return 2 * self.n_features if self.includes_interaction else self.n_features

    def features(self, x) -> np.ndarray:
        return self.features_batch(np.asarray(x, dtype=float).reshape(1, -1))[0]

    def features_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.centers.shape[1]:
            raise ValueError(
                f"input dimension {X.shape[1]} does not match centers {self.centers.shape[1]}"
            )
        sq = ((X[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-sq / (2.0 * self.lengthscale**2))

    def design(self, x, action: int) -> np.ndarray:
        phi = self.features(x)
        if not self.includes_interaction:
            return phi
        return np.concatenate([phi, float(action) * phi])

    def design_batch(self, X: np.ndarray, actions) -> np.ndarray:
        phi = self.features_batch(X)
        if not self.includes_interaction:
            return phi
        a = np.asarray(actions, dtype=float).reshape(-1, 1)
        if a.shape[0] == 1 and phi.shape[0] > 1:
            a = np.repeat(a, phi.shape[0], axis=0)
        return np.hstack([phi, a * phi])
