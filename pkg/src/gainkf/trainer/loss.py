"""End-to-end losses computed on a tape through the filter recursion."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..data import Trajectory
from ..gainnet.layers import bind_params


def _group_by_length(batch: list[Trajectory]) -> dict[int, list[Trajectory]]:
    groups: dict[int, list[Trajectory]] = {}
    for tr in batch:
        groups.setdefault(tr.T, []).append(tr)
    return groups


def _stack(trajs: list[Trajectory]):
    Y = np.stack([tr.Y for tr in trajs], axis=2)      # (n, T, B)
    X = np.stack([tr.X for tr in trajs], axis=2)      # (m, T, B)
    x0 = np.stack([tr.x0 for tr in trajs], axis=1)    # (m, B)
    return Y, X, x0


def batch_loss_var(tape: ad.Tape, estimator, pvars: dict[str, ad.Var],
                   batch: list[Trajectory], gamma: float,
                   feature_scales=None) -> ad.Var:
    """Mean over the batch of per-trajectory losses, on the tape.

    Per trajectory: (1/T) * sum_t ||xhat_t - x_t||^2, plus one shared
    gamma*||theta||^2 term.  Same-length trajectories roll out batched
    as columns; the result equals the sequential per-trajectory mean
    exactly because the column sums commute with the grouping.
    """
    if not batch:
        raise ValueError("batch must contain at least one trajectory")
    total: ad.Var | None = None
    for T, trajs in _group_by_length(batch).items():
        Y, X, x0 = _stack(trajs)
        estimates = estimator._training_rollout(tape, pvars, Y, x0,
                                                feature_scales=feature_scales)
        group_sq: ad.Var | None = None
        for t, est in enumerate(estimates):
            sq = ad.l2_norm_sq(ad.subtract(est, tape.leaf(X[:, t, :])))
            group_sq = sq if group_sq is None else ad.add(group_sq, sq)
        group_loss = ad.scalar_multiply(1.0 / T, group_sq)
        total = group_loss if total is None else ad.add(total, group_loss)
    loss = ad.scalar_multiply(1.0 / len(batch), total)
    if gamma > 0.0:
        reg: ad.Var | None = None
        for var in pvars.values():
            term = ad.l2_norm_sq(var)
            reg = term if reg is None else ad.add(reg, term)
        loss = ad.add(loss, ad.scalar_multiply(gamma, reg))
    return loss


def trajectory_loss(estimator, traj: Trajectory, gamma: float = 0.0,
                    feature_scales=None) -> float:
    """Scalar loss of one rollout: (1/T) sum_t ||xhat_t - x_t||^2 + gamma*||theta||^2."""
    value, _, _ = trajectory_loss_tape(estimator, traj, gamma, feature_scales)
    return value


def trajectory_loss_tape(estimator, traj: Trajectory, gamma: float = 0.0,
                         feature_scales=None):
    """Like :func:`trajectory_loss` but exposes the tape for gradient work."""
    params = (estimator.params_ if hasattr(estimator, "params_")
              else estimator.initial_parameters())
    tape = ad.Tape()
    pvars = bind_params(tape, params)
    loss = batch_loss_var(tape, estimator, pvars, [traj], gamma, feature_scales)
    return float(loss.value[0, 0]), loss, pvars


def batch_loss(estimator, batch: list[Trajectory], gamma: float = 0.0,
               feature_scales=None) -> float:
    """Scalar mini-batch loss: mean of per-trajectory losses."""
    params = (estimator.params_ if hasattr(estimator, "params_")
              else estimator.initial_parameters())
    tape = ad.Tape()
    pvars = bind_params(tape, params)
    loss = batch_loss_var(tape, estimator, pvars, list(batch), gamma, feature_scales)
    return float(loss.value[0, 0])
