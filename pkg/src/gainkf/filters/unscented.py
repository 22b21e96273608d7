"""Sigma-point filter: deterministic moment propagation through f and h."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..base import StateEstimator
from ..exceptions import FilterDivergedError
from ..ssm import SSModel
from .kalman import FilterStepRecord, GaussianBelief, _CovarianceMixin
from .linalg import chol_with_jitter, solve_spd, symmetrize


@dataclass(frozen=True)
class SigmaPointParams:
    """Scaled sigma-point set.  kappa defaults to 3 - m."""

    alpha: float = 0.5
    beta: float = 2.0
    kappa: float | None = None

    def resolved_kappa(self, m: int) -> float:
        return (3.0 - m) if self.kappa is None else self.kappa


def sigma_points(mean: np.ndarray, cov: np.ndarray, params: SigmaPointParams):
    """2m+1 scaled sigma points plus mean/covariance weights."""
    m = mean.shape[0]
    kappa = params.resolved_kappa(m)
    lam = params.alpha ** 2 * (m + kappa) - m
    scale = m + lam
    if scale <= 0:
        raise ValueError("alpha/kappa give a non-positive sigma-point scale")
    L = chol_with_jitter(cov) * np.sqrt(scale)
    points = np.empty((m, 2 * m + 1))
    points[:, 0] = mean
    for i in range(m):
        points[:, 1 + i] = mean + L[:, i]
        points[:, 1 + m + i] = mean - L[:, i]
    wm = np.full(2 * m + 1, 1.0 / (2.0 * scale))
    wc = wm.copy()
    wm[0] = lam / scale
    wc[0] = lam / scale + (1.0 - params.alpha ** 2 + params.beta)
    return points, wm, wc


def _transform(points: np.ndarray, wm: np.ndarray, wc: np.ndarray,
               propagated: np.ndarray, noise: np.ndarray):
    mean = propagated @ wm
    dev = propagated - mean[:, None]
    cov = symmetrize((dev * wc) @ dev.T + noise)
    return mean, cov, dev


def ukf_step(belief: GaussianBelief, y: np.ndarray, model: SSModel,
             Q: np.ndarray, R: np.ndarray,
             params: SigmaPointParams = SigmaPointParams()) -> FilterStepRecord:
    """One unscented predict+update step.

    Cross-covariance between prior-state and predicted-observation sigma
    deviations gives the gain; the mean/covariance update then follows
    the standard correction form.
    """
    pts, wm, wc = sigma_points(belief.mean, belief.cov, params)
    through_f = model.apply_f(pts)
    prior_mean, prior_cov, _ = _transform(pts, wm, wc, through_f, Q)

    pts2, wm2, wc2 = sigma_points(prior_mean, prior_cov, params)
    through_h = model.apply_h(pts2)
    yhat, S, dev_y = _transform(pts2, wm2, wc2, through_h, R)
    dev_x = pts2 - prior_mean[:, None]
    cross = (dev_x * wc2) @ dev_y.T

    K = solve_spd(S, cross.T).T
    innovation = y - yhat
    mean = prior_mean + K @ innovation
    cov = symmetrize(prior_cov - K @ S @ K.T)
    if not np.all(np.isfinite(mean)):
        raise FilterDivergedError("unscented update produced non-finite mean")
    return FilterStepRecord(
        prior_mean=prior_mean, prior_cov=prior_cov, predicted_obs=yhat,
        innovation=innovation, gain=K, posterior_mean=mean, posterior_cov=cov)


class UnscentedKalmanFilter(_CovarianceMixin, StateEstimator):
    def __init__(self, model: SSModel, q2: float | None = None, r2: float | None = None,
                 Q=None, R=None, grid=None, init_cov: float = 0.0,
                 alpha: float = 0.5, beta: float = 2.0, kappa: float | None = None):
        self.model = model
        self.q2 = q2
        self.r2 = r2
        self.Q = Q
        self.R = R
        self.grid = grid
        self.init_cov = init_cov
        self.alpha = alpha
        self.beta = beta
        self.kappa = kappa

    def _with_covariances(self, q2, r2):
        params = {**self.get_params(deep=False), "q2": q2, "r2": r2, "grid": None}
        return self.__class__(**params)

    def filter_steps(self, Y, x0) -> list[FilterStepRecord]:
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        Q, R = self._resolve_covariances(self.model)
        params = SigmaPointParams(self.alpha, self.beta, self.kappa)
        belief = GaussianBelief(x0, self.init_cov * np.eye(self.model.m))
        records = []
        for t in range(Y.shape[1]):
            rec = ukf_step(belief, Y[:, t], self.model, Q, R, params)
            belief = GaussianBelief(rec.posterior_mean, rec.posterior_cov)
            records.append(rec)
        return records

    def filter_trajectory(self, Y, x0) -> np.ndarray:
        return np.column_stack([r.posterior_mean for r in self.filter_steps(Y, x0)])
