"""Kalman filter and its Jacobian-linearized extension."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..base import StateEstimator
from ..exceptions import FilterDivergedError
from ..ssm import SSModel
from .linalg import solve_spd, symmetrize


@dataclass
class GaussianBelief:
    """Posterior mean and covariance of the state at one time step."""

    mean: np.ndarray          # (m,)
    cov: np.ndarray           # (m, m), kept symmetric

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = symmetrize(np.asarray(self.cov, dtype=np.float64))


@dataclass
class FilterStepRecord:
    """Everything one filtering step computed.

    ``prior_cov`` and ``posterior_cov`` are None for filters that do not
    maintain second moments (the learned-gain filter).  The innovation
    is stored exactly as y_t - predicted_obs.
    """

    prior_mean: np.ndarray
    prior_cov: Optional[np.ndarray]
    predicted_obs: np.ndarray
    innovation: np.ndarray
    gain: np.ndarray
    posterior_mean: np.ndarray
    posterior_cov: Optional[np.ndarray]


def kf_predict(belief: GaussianBelief, F: np.ndarray, H: np.ndarray,
               Q: np.ndarray, R: np.ndarray):
    """Linear prediction of state and observation moments.

    Returns the prior belief, the predicted observation, and the
    innovation covariance S = H Sigma H^T + R.
    """
    prior_mean = F @ belief.mean
    prior_cov = symmetrize(F @ belief.cov @ F.T + Q)
    yhat = H @ prior_mean
    S = symmetrize(H @ prior_cov @ H.T + R)
    return GaussianBelief(prior_mean, prior_cov), yhat, S


def kf_update(prior: GaussianBelief, y: np.ndarray, S: np.ndarray,
              H: np.ndarray, yhat: Optional[np.ndarray] = None):
    """Gain, mean, and covariance update given the innovation covariance.

    K = Sigma H^T S^{-1} is computed by solving against S rather than
    forming an explicit inverse.  Returns (posterior, K, innovation).
    """
    if yhat is None:
        yhat = H @ prior.mean
    innovation = y - yhat
    PHt = prior.cov @ H.T
    K = solve_spd(S, PHt.T).T
    mean = prior.mean + K @ innovation
    cov = symmetrize(prior.cov - K @ S @ K.T)
    return GaussianBelief(mean, cov), K, innovation


def ekf_step(belief: GaussianBelief, y: np.ndarray, model: SSModel,
             Q: np.ndarray, R: np.ndarray) -> FilterStepRecord:
    """One predict+update step with first moments through f/h and second
    moments through the Jacobians evaluated at the linearization points."""
    F_t = model.jac_f(belief.mean)
    if not np.all(np.isfinite(F_t)):
        raise FilterDivergedError("non-finite evolution Jacobian")
    prior_mean = model.f(belief.mean)
    prior_cov = symmetrize(F_t @ belief.cov @ F_t.T + Q)
    H_t = model.jac_h(prior_mean)
    if not np.all(np.isfinite(H_t)):
        raise FilterDivergedError("non-finite observation Jacobian")
    yhat = model.h(prior_mean)
    S = symmetrize(H_t @ prior_cov @ H_t.T + R)
    prior = GaussianBelief(prior_mean, prior_cov)
    posterior, K, innovation = kf_update(prior, y, S, H_t, yhat=yhat)
    return FilterStepRecord(
        prior_mean=prior.mean, prior_cov=prior.cov, predicted_obs=yhat,
        innovation=innovation, gain=K,
        posterior_mean=posterior.mean, posterior_cov=posterior.cov)


def _extract_linear_maps(model: SSModel) -> tuple[np.ndarray, np.ndarray]:
    """Recover F and H from a linear model and verify linearity."""
    zero = np.zeros(model.m)
    F = model.jac_f(zero)
    H = model.jac_h(zero)
    probe = np.linspace(-1.0, 1.0, model.m)
    if (np.max(np.abs(model.f(probe) - F @ probe)) > 1e-9
            or np.max(np.abs(model.h(probe) - H @ probe)) > 1e-9):
        raise ValueError("model is not linear; use ExtendedKalmanFilter")
    return F, H


class _CovarianceMixin:
    """Shared handling of the (q2, r2) / (Q, R) covariance parameters."""

    def _resolve_covariances(self, model: SSModel):
        Q = np.asarray(self.Q, dtype=np.float64) if self.Q is not None else None
        R = np.asarray(self.R, dtype=np.float64) if self.R is not None else None
        q2 = self.q2_ if hasattr(self, "q2_") else self.q2
        r2 = self.r2_ if hasattr(self, "r2_") else self.r2
        if Q is None:
            if q2 is None:
                raise ValueError("either q2 or Q must be set (or fit() with a grid)")
            Q = q2 * np.eye(model.m)
        if R is None:
            if r2 is None:
                raise ValueError("either r2 or R must be set (or fit() with a grid)")
            R = r2 * np.eye(model.n)
        return Q, R

    def fit(self, dataset, validation=None):
        """Grid-search q2/r2 on the validation split when a grid is configured."""
        if self.grid is not None:
            from .tuning import tune_covariances

            target = validation if validation is not None else dataset
            q2, r2 = tune_covariances(
                lambda q2, r2: self._with_covariances(q2, r2), target, self.grid)
            self.q2_, self.r2_ = q2, r2
        return self

    def _with_covariances(self, q2: float, r2: float):
        clone = self.__class__(**{**self.get_params(deep=False),
                                  "q2": q2, "r2": r2, "grid": None})
        return clone


class KalmanFilter(_CovarianceMixin, StateEstimator):
    """Optimal linear filter for a known linear-Gaussian system.

    The initial belief takes the dataset's x0 as exact (zero initial
    covariance) unless ``init_cov`` says otherwise.
    """

    def __init__(self, model: SSModel, q2: float | None = None, r2: float | None = None,
                 Q=None, R=None, grid=None, init_cov: float = 0.0):
        self.model = model
        self.q2 = q2
        self.r2 = r2
        self.Q = Q
        self.R = R
        self.grid = grid
        self.init_cov = init_cov

    def filter_steps(self, Y, x0) -> list[FilterStepRecord]:
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        F, H = _extract_linear_maps(self.model)
        Q, R = self._resolve_covariances(self.model)
        belief = GaussianBelief(x0, self.init_cov * np.eye(self.model.m))
        records = []
        for t in range(Y.shape[1]):
            prior, yhat, S = kf_predict(belief, F, H, Q, R)
            belief, K, innovation = kf_update(prior, Y[:, t], S, H, yhat=yhat)
            records.append(FilterStepRecord(
                prior_mean=prior.mean, prior_cov=prior.cov, predicted_obs=yhat,
                innovation=innovation, gain=K,
                posterior_mean=belief.mean, posterior_cov=belief.cov))
        return records

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        return np.column_stack([r.posterior_mean for r in self.filter_steps(Y, x0)])


class ExtendedKalmanFilter(_CovarianceMixin, StateEstimator):
    """Jacobian-linearized filter for nonlinear models.

    Coincides with :class:`KalmanFilter` when the model happens to be
    linear.
    """

    def __init__(self, model: SSModel, q2: float | None = None, r2: float | None = None,
                 Q=None, R=None, grid=None, init_cov: float = 0.0):
        self.model = model
        self.q2 = q2
        self.r2 = r2
        self.Q = Q
        self.R = R
        self.grid = grid
        self.init_cov = init_cov

    def filter_steps(self, Y, x0) -> list[FilterStepRecord]:
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        Q, R = self._resolve_covariances(self.model)
        belief = GaussianBelief(x0, self.init_cov * np.eye(self.model.m))
        records = []
        for t in range(Y.shape[1]):
            rec = ekf_step(belief, Y[:, t], self.model, Q, R)
            belief = GaussianBelief(rec.posterior_mean, rec.posterior_cov)
            records.append(rec)
        return records

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        return np.column_stack([r.posterior_mean for r in self.filter_steps(Y, x0)])
