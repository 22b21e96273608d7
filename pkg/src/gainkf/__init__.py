"""gainkf: classic state estimation plus a trainable recurrent Kalman gain.

The library pairs model-based filters (Kalman, extended, unscented,
bootstrap particle) with a hybrid filter whose gain is produced by a
small recurrent network trained end-to-end through the filtering
recursion.  Synthetic benchmark systems, dataset tooling, and a CLI for
reproducible experiments live in the submodules.
"""

from . import autodiff, data, filters, gainnet, metrics, ssm, trainer
from .data import Dataset, Trajectory
from .filters import (
    ExtendedKalmanFilter,
    KalmanFilter,
    ParticleFilter,
    UnscentedKalmanFilter,
)
from .gainnet import LearnedGainFilter, ModelBasedRnnFilter, VanillaRnnFilter
from .ssm import NoiseSpec, SSModel
from .trainer import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExtendedKalmanFilter",
    "KalmanFilter",
    "LearnedGainFilter",
    "ModelBasedRnnFilter",
    "NoiseSpec",
    "ParticleFilter",
    "SSModel",
    "TrainConfig",
    "Trajectory",
    "UnscentedKalmanFilter",
    "VanillaRnnFilter",
    "autodiff",
    "data",
    "filters",
    "gainnet",
    "metrics",
    "ssm",
    "trainer",
]
