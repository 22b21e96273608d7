"""Shared estimator surface: fit/predict plus scikit-learn parameter plumbing."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import Dataset, Trajectory
from .validation import as_matrix, as_vector


class StateEstimator(BaseEstimator):
    """Base class for trajectory filters.

    Subclasses implement :meth:`filter_trajectory`, mapping an
    observation matrix (n, T) plus the known initial state to state
    estimates (m, T).  ``predict`` accepts a Trajectory, a Dataset, or a
    list of Trajectories and dispatches accordingly.  ``get_params`` /
    ``set_params`` come from scikit-learn, so estimators compose with
    the wider ecosystem (cloning, grid utilities, reprs).
    """

    def fit(self, dataset: Dataset, validation: Dataset | None = None):
        """Default: nothing to learn.  Returns self."""
        return self

    def filter_trajectory(self, Y: np.ndarray, x0: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, data):
        if isinstance(data, Trajectory):
            return self.filter_trajectory(data.Y, data.x0)
        if isinstance(data, Dataset):
            return [self.filter_trajectory(tr.Y, tr.x0) for tr in data]
        if isinstance(data, (list, tuple)):
            return [self.filter_trajectory(tr.Y, tr.x0) for tr in data]
        raise TypeError(f"cannot predict from {type(data).__name__}")

    def _check_inputs(self, Y, x0, n: int, m: int):
        Y = as_matrix(np.atleast_2d(np.asarray(Y, dtype=np.float64)), name="Y")
        if Y.shape[0] != n:
            raise ValueError(f"Y must have {n} rows, got {Y.shape[0]}")
        x0 = as_vector(x0, m, name="x0")
        return Y, x0


def check_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit() first")
