"""End-to-end training: losses, the optimizer, the loop, evaluation."""

from ..metrics import evaluate_estimator as evaluate
from .adam import AdamState, adam_step
from .loss import batch_loss, batch_loss_var, trajectory_loss, trajectory_loss_tape
from .train import Checkpoint, TrainConfig, config_fingerprint, prepare_trajectories, train

__all__ = [
    "AdamState",
    "Checkpoint",
    "TrainConfig",
    "adam_step",
    "batch_loss",
    "batch_loss_var",
    "config_fingerprint",
    "evaluate",
    "prepare_trajectories",
    "train",
    "trajectory_loss",
    "trajectory_loss_tape",
]
