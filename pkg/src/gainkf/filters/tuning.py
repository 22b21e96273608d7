"""Grid search over filter covariance levels."""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..data import Dataset
from ..exceptions import FilterDivergedError
from ..metrics import evaluate_estimator


def expand_grid(grid) -> list[tuple[float, float]]:
    """Accepts a list of (q2, r2) pairs or a dict {"q2": [...], "r2": [...]}."""
    if isinstance(grid, dict):
        return [(float(q2), float(r2)) for q2 in grid["q2"] for r2 in grid["r2"]]
    points = [(float(q2), float(r2)) for q2, r2 in grid]
    if not points:
        raise ValueError("covariance grid is empty")
    return points


def tune_covariances(factory: Callable[[float, float], object],
                     dataset: Dataset,
                     grid,
                     prefer: tuple[float, float] | None = None,
                     tol: float = 1e-12) -> tuple[float, float]:
    """Pick the (q2, r2) grid point minimizing MSE on the given split.

    Filters that diverge at a grid point are scored +inf.  Ties within
    ``tol`` break toward ``prefer`` when given, else toward the earlier
    grid point.
    """
    points = expand_grid(grid)
    scores = []
    for q2, r2 in points:
        try:
            result = evaluate_estimator(factory(q2, r2), dataset, stopwatch=False)
            scores.append(result["mse"])
        except FilterDivergedError:
            scores.append(float("inf"))
    best = min(scores)
    candidates = [i for i, s in enumerate(scores) if s <= best + tol]
    if prefer is not None and len(candidates) > 1:
        candidates.sort(key=lambda i: (np.hypot(points[i][0] - prefer[0],
                                                points[i][1] - prefer[1]), i))
    return points[candidates[0]]
