"""Model-based filters: Kalman, extended, unscented, and bootstrap particle."""

from .kalman import (
    ExtendedKalmanFilter,
    FilterStepRecord,
    GaussianBelief,
    KalmanFilter,
    ekf_step,
    kf_predict,
    kf_update,
)
from .particle import ParticleBelief, ParticleFilter, pf_step, systematic_resample
from .tuning import tune_covariances
from .unscented import SigmaPointParams, UnscentedKalmanFilter, sigma_points, ukf_step

__all__ = [
    "ExtendedKalmanFilter",
    "FilterStepRecord",
    "GaussianBelief",
    "KalmanFilter",
    "ParticleBelief",
    "ParticleFilter",
    "SigmaPointParams",
    "UnscentedKalmanFilter",
    "ekf_step",
    "kf_predict",
    "kf_update",
    "pf_step",
    "sigma_points",
    "systematic_resample",
    "tune_covariances",
    "ukf_step",
]
