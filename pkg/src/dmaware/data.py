"""Dataset container for observational treatment-outcome data."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Source(IntEnum):
    """Provenance of a row: observed in the original data, or elicited later."""

    FACTUAL = 0
    ELICITED = 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Rows of (covariates, binary action, outcome, provenance).

    Arrays are stored read-only, so fitted models can share a dataset
    across threads without copying.  Outcomes may be NaN for rows that
    exist only as covariate referents (e.g. comparison-only units).
    """

    units: np.ndarray
    actions: np.ndarray
    outcomes: np.ndarray
    source: np.ndarray

    def __post_init__(self):
        units = np.asarray(self.units, dtype=float)
        if units.ndim == 1:
            units = units[:, None]
        if units.ndim != 2 or units.shape[1] < 1:
            raise ValueError("units must be an (n, d) array with d >= 1")
        actions = np.asarray(self.actions, dtype=np.int8).ravel()
        outcomes = np.asarray(self.outcomes, dtype=float).ravel()
        source = np.asarray(self.source, dtype=np.int8).ravel()
        n = units.shape[0]
        if not (actions.shape[0] == outcomes.shape[0] == source.shape[0] == n):
            raise ValueError(
                f"length mismatch: units={n}, actions={actions.shape[0]}, "
                f"outcomes={outcomes.shape[0]}, source={source.shape[0]}"
            )
        if n and not np.isin(actions, (0, 1)).all():
            raise ValueError("actions must be binary (0 or 1)")
        if n and not np.isin(source, (Source.FACTUAL, Source.ELICITED)).all():
            raise ValueError("source tags must be Source.FACTUAL or Source.ELICITED")
        object.__setattr__(self, "units", _frozen(units))
        object.__setattr__(self, "actions", _frozen(actions))
        object.__setattr__(self, "outcomes", _frozen(outcomes))
        object.__setattr__(self, "source", _frozen(source))

    @staticmethod
    def empty(dim: int) -> "Dataset":
        return Dataset(np.empty((0, dim)), np.empty(0), np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return self.units.shape[0]

    @property
    def dim(self) -> int:
        return self.units.shape[1]

    def is_binary_outcomes(self) -> bool:
        obs = self.outcomes[~np.isnan(self.outcomes)]
        return bool(np.isin(obs, (0.0, 1.0)).all())

    def for_action(self, action: int) -> "Dataset":
        m = self.actions == action
        return Dataset(self.units[m], self.actions[m], self.outcomes[m], self.source[m])

    def append(self, x, action: int, outcome: float, source: Source) -> "Dataset":
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"appended unit has dimension {x.shape[0]}, expected {self.dim}")
        return Dataset(
            np.vstack([self.units, x[None, :]]),
            np.append(self.actions, action),
            np.append(self.outcomes, outcome),
            np.append(self.source, int(source)),
        )

    def concat(self, other: "Dataset") -> "Dataset":
        if other.dim != self.dim:
            raise ValueError("cannot concatenate datasets of different dimension")
        return Dataset(
            np.vstack([self.units, other.units]),
            np.concatenate([self.actions, other.actions]),
            np.concatenate([self.outcomes, other.outcomes]),
            np.concatenate([self.source, other.source]),
        )
