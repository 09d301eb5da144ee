"""Post-hoc model explanation: partial dependence and top-k importance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ExplainError(Exception):
    pass


@dataclass(frozen=True)
class PdpCurve:
    feature: str
    grid: np.ndarray
    mean_score: np.ndarray

    def to_json(self) -> dict:
        return {"feature": self.feature, "grid": self.grid.tolist(),
                "mean_score": self.mean_score.tolist()}


def pdp_grid(values: np.ndarray, max_grid: int = 20) -> np.ndarray:
    """Quantile grid at 0.05..0.95; all distinct values when few; {0,1}
    for dummy columns."""
    distinct = np.unique(values)
    if set(distinct.tolist()) <= {0.0, 1.0}:
        return np.array([0.0, 1.0])
    if len(distinct) < max_grid:
        return distinct
    probs = np.arange(0.05, 0.951, 0.05)
    return np.unique(np.quantile(values, probs))


def pdp(model, reference: np.ndarray, feature: str, max_grid: int = 20) -> PdpCurve:
    """Average model probability as one feature sweeps its grid while all
    other features keep their observed values."""
    if feature not in model.feature_names:
        raise ExplainError(f"unknown feature: {feature}")
    j = model.feature_names.index(feature)
    X = np.ascontiguousarray(reference, dtype=np.float64)
    grid = pdp_grid(X[:, j], max_grid)
    means = np.empty(len(grid))
    work = X.copy()
    for g, v in enumerate(grid):
        work[:, j] = v
        means[g] = float(model.score(work).mean())
    return PdpCurve(feature=feature, grid=grid, mean_score=means)


def top_features(model, k: int) -> list[str]:
    """Top-k features by importance, ties broken by feature order."""
    imp = model.importance()
    order = sorted(range(len(model.feature_names)),
                   key=lambda i: (-imp[model.feature_names[i]], i))
    return [model.feature_names[i] for i in order[:k]]
