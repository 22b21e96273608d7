"""Bootstrap sequential Monte Carlo filter with systematic resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..base import StateEstimator
from ..exceptions import DegenerateWeightsError
from ..ssm import SSModel
from .linalg import chol_with_jitter, solve_spd


@dataclass
class ParticleBelief:
    particles: np.ndarray     # (m, N)
    weights: np.ndarray       # (N,), on the simplex

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.particles.ndim != 2:
            raise ValueError("particles must be (m, N)")
        if self.weights.shape != (self.particles.shape[1],):
            raise ValueError("weights must have one entry per particle")

    @property
    def N(self) -> int:
        return self.particles.shape[1]

    def effective_sample_size(self) -> float:
        return 1.0 / float(np.sum(self.weights ** 2))

    def mean(self) -> np.ndarray:
        return self.particles @ self.weights


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Low-variance resampling: one uniform offset, N evenly spaced positions."""
    N = weights.shape[0]
    positions = (rng.random() + np.arange(N)) / N
    return np.searchsorted(np.cumsum(weights), positions).clip(max=N - 1)


def pf_step(belief: ParticleBelief, y: np.ndarray, model: SSModel,
            Q: np.ndarray, R: np.ndarray, rng: np.random.Generator,
            resample_threshold: float = 0.5,
            recover_degenerate: bool = False):
    """Bootstrap proposal, Gaussian likelihood weighting, conditional resampling.

    Returns (belief, mean estimate, degenerate flag).  When every weight
    underflows, either raises DegenerateWeightsError or (with
    ``recover_degenerate``) resets to uniform weights and flags it.
    """
    N = belief.N
    Lq = chol_with_jitter(Q) if np.any(Q) else np.zeros_like(Q)
    particles = model.apply_f(belief.particles) + Lq @ rng.standard_normal((model.m, N))

    residual = y[:, None] - model.apply_h(particles)      # (n, N)
    quad = np.sum(residual * solve_spd(R, residual), axis=0)
    log_w = np.log(belief.weights, out=np.full(N, -np.inf), where=belief.weights > 0)
    log_w = log_w - 0.5 * quad

    peak = np.max(log_w)
    degenerate = not np.isfinite(peak)
    if degenerate:
        if not recover_degenerate:
            raise DegenerateWeightsError()
        weights = np.full(N, 1.0 / N)
    else:
        w = np.exp(log_w - peak)
        weights = w / np.sum(w)

    new_belief = ParticleBelief(particles, weights)
    if new_belief.effective_sample_size() < resample_threshold * N:
        idx = systematic_resample(weights, rng)
        new_belief = ParticleBelief(particles[:, idx], np.full(N, 1.0 / N))
    return new_belief, new_belief.mean(), degenerate


class ParticleFilter(StateEstimator):
    """Bootstrap filter; estimates are posterior-weighted particle means.

    Each trajectory gets its own RNG stream derived from ``seed``, so
    predictions over a dataset are order-independent and reproducible.
    """

    def __init__(self, model: SSModel, q2: float | None = None, r2: float | None = None,
                 Q=None, R=None, grid=None, n_particles: int = 100, seed: int = 0,
                 resample_threshold: float = 0.5, recover_degenerate: bool = True):
        self.model = model
        self.q2 = q2
        self.r2 = r2
        self.Q = Q
        self.R = R
        self.grid = grid
        self.n_particles = n_particles
        self.seed = seed
        self.resample_threshold = resample_threshold
        self.recover_degenerate = recover_degenerate

    def _resolve_covariances(self):
        Q = np.asarray(self.Q, dtype=np.float64) if self.Q is not None else None
        R = np.asarray(self.R, dtype=np.float64) if self.R is not None else None
        q2 = getattr(self, "q2_", None) or self.q2
        r2 = getattr(self, "r2_", None) or self.r2
        if Q is None:
            if q2 is None:
                raise ValueError("either q2 or Q must be set")
            Q = q2 * np.eye(self.model.m)
        if R is None:
            if r2 is None:
                raise ValueError("either r2 or R must be set")
            R = r2 * np.eye(self.model.n)
        return Q, R

    def fit(self, dataset, validation=None):
        if self.grid is not None:
            from .tuning import tune_covariances

            target = validation if validation is not None else dataset
            q2, r2 = tune_covariances(
                lambda q2, r2: self.__class__(**{**self.get_params(deep=False),
                                                 "q2": q2, "r2": r2, "grid": None}),
                target, self.grid)
            self.q2_, self.r2_ = q2, r2
        return self

    def filter_trajectory(self, Y, x0, seed=None) -> np.ndarray:
        Y, x0 = self._check_inputs(Y, x0, self.model.n, self.model.m)
        Q, R = self._resolve_covariances()
        rng = np.random.default_rng(self.seed if seed is None else seed)
        belief = ParticleBelief(np.tile(x0[:, None], (1, self.n_particles)),
                                np.full(self.n_particles, 1.0 / self.n_particles))
        estimates = np.empty((self.model.m, Y.shape[1]))
        self.degenerate_steps_ = 0
        for t in range(Y.shape[1]):
            belief, mean, degenerate = pf_step(
                belief, Y[:, t], self.model, Q, R, rng,
                resample_threshold=self.resample_threshold,
                recover_degenerate=self.recover_degenerate)
            self.degenerate_steps_ += int(degenerate)
            estimates[:, t] = mean
        return estimates

    def predict(self, data):
        from ..data import Dataset, Trajectory

        if isinstance(data, Trajectory):
            return self.filter_trajectory(data.Y, data.x0)
        items = data.trajectories if isinstance(data, Dataset) else list(data)
        seeds = np.random.SeedSequence(self.seed).spawn(len(items))
        return [self.filter_trajectory(tr.Y, tr.x0, seed=s) for tr, s in zip(items, seeds)]
