"""Loss metrics shared by filter evaluation and training."""

from __future__ import annotations

import math
import time

import numpy as np

from .data import Dataset

DB_FLOOR = -300.0  # guard for log10 of an exactly-zero error


def trajectory_mse(estimates: np.ndarray, X: np.ndarray) -> float:
    """Linear MSE per scalar entry: mean over time steps and state dims."""
    err = np.asarray(estimates) - np.asarray(X)
    return float(np.mean(err ** 2))


def to_db(value: float) -> float:
    if value <= 0.0:
        return DB_FLOOR
    return max(10.0 * math.log10(value), DB_FLOOR)


def evaluate_estimator(estimator, dataset: Dataset, stopwatch: bool = True) -> dict:
    """Run a filter over a dataset split and aggregate its error.

    Returns mse_db = 10*log10(mean of per-trajectory linear MSEs),
    sigma_db = std of the per-trajectory dB values (the cross-trajectory
    spread estimator), the per-trajectory numbers, and the wall-clock
    inference time (0.0 when ``stopwatch`` is off, which keeps report
    files byte-reproducible).
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty split")
    start = time.perf_counter() if stopwatch else None
    per_traj = []
    for tr in dataset:
        est = estimator.filter_trajectory(tr.Y, tr.x0)
        per_traj.append(trajectory_mse(est, tr.X))
    runtime = (time.perf_counter() - start) if stopwatch else 0.0
    per_traj = np.array(per_traj)
    per_traj_db = np.array([to_db(v) for v in per_traj])
    return {
        "mse": float(np.mean(per_traj)),
        "mse_db": to_db(float(np.mean(per_traj))),
        "sigma_db": float(np.std(per_traj_db)),
        "per_trajectory_mse": per_traj.tolist(),
        "per_trajectory_db": per_traj_db.tolist(),
        "runtime_s": runtime,
    }
