"""Supervised end-to-end training of recurrent filters.

Three ways of presenting trajectories to backpropagation-through-time:

* v1: gradients over each whole trajectory;
* v2: long trajectories pre-split into shuffled fixed-length segments,
  estimates and hidden state re-initialized per segment (each segment
  restarts from the ground-truth state preceding it);
* v3: each trajectory truncated to a fixed prefix.

Batches are sampled uniformly without replacement and reshuffled each
epoch; the best-validation parameters are what training returns.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import autodiff as ad
from ..data import Dataset, Trajectory, atomic_write_text
from ..exceptions import FilterDivergedError
from ..gainnet.checkpoint import load_checkpoint, save_checkpoint
from ..gainnet.layers import bind_params, collect_gradients
from ..metrics import evaluate_estimator
from .adam import AdamState, adam_step
from .loss import batch_loss_var

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    gamma: float = 1e-4               # l2 regularization coefficient
    batch_size: int = 8
    epochs: int = 40
    bptt: Optional[str] = None        # "v1" | "v2" | "v3"; None = estimator default
    truncation: Optional[int] = None  # segment/prefix length for v2/v3
    seed: int = 0
    val_every: Optional[int] = None   # steps between validations; None = per epoch
    patience: Optional[int] = None    # validations without improvement before stopping
    loss_clamp: float = 1e6
    max_lr_halvings: int = 2
    log_path: Optional[str] = None    # training-curve CSV

    def replace(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)

    def fingerprint_payload(self) -> dict:
        return {k: getattr(self, k) for k in
                ("lr", "gamma", "batch_size", "epochs", "bptt", "truncation",
                 "seed", "val_every", "patience", "loss_clamp", "max_lr_halvings")}


@dataclass
class Checkpoint:
    """Best-validation snapshot of a training run."""

    params: dict[str, np.ndarray]
    adam_state: AdamState
    config_fingerprint: str
    best_val_mse_db: float
    epoch: int
    step: int
    header: dict = field(default_factory=dict)

    def save(self, path) -> Path:
        tensors = dict(self.params)
        for name, m in self.adam_state.m.items():
            tensors[f"adam.m.{name}"] = m
        for name, v in self.adam_state.v.items():
            tensors[f"adam.v.{name}"] = v
        header = {
            **self.header,
            "config_fingerprint": self.config_fingerprint,
            "best_val_mse_db": self.best_val_mse_db,
            "epoch": self.epoch,
            "step": self.step,
            "adam": {"step": self.adam_state.step, "beta1": self.adam_state.beta1,
                     "beta2": self.adam_state.beta2, "eps": self.adam_state.eps},
            "param_names": sorted(self.params.keys()),
        }
        return save_checkpoint(path, header, tensors)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        header, tensors = load_checkpoint(path)
        names = header["param_names"]
        params = {k: tensors[k] for k in names}
        adam_meta = header["adam"]
        state = AdamState(
            m={k: tensors[f"adam.m.{k}"] for k in names},
            v={k: tensors[f"adam.v.{k}"] for k in names},
            step=adam_meta["step"], beta1=adam_meta["beta1"],
            beta2=adam_meta["beta2"], eps=adam_meta["eps"])
        return cls(params=params, adam_state=state,
                   config_fingerprint=header["config_fingerprint"],
                   best_val_mse_db=header["best_val_mse_db"],
                   epoch=header["epoch"], step=header["step"], header=header)


def prepare_trajectories(dataset: Dataset, cfg: TrainConfig) -> list[Trajectory]:
    """Materialize the training samples implied by the BPTT variant."""
    bptt = cfg.bptt or "v1"
    if bptt == "v1":
        return list(dataset.trajectories)
    if cfg.truncation is None or cfg.truncation < 1:
        raise ValueError(f"bptt {bptt!r} requires a positive truncation length")
    if bptt == "v2":
        out: list[Trajectory] = []
        for tr in dataset:
            out.extend(tr.segments(cfg.truncation))
        if not out:
            raise ValueError("no segments produced; truncation longer than trajectories")
        return out
    if bptt == "v3":
        return [tr.prefix(min(cfg.truncation, tr.T)) for tr in dataset]
    raise ValueError(f"unknown bptt variant {cfg.bptt!r}")


def config_fingerprint(cfg: TrainConfig, estimator, model) -> str:
    payload = {
        "train": cfg.fingerprint_payload(),
        "estimator": type(estimator).__name__,
        "estimator_params": {k: repr(v) for k, v in sorted(
            estimator.get_params(deep=False).items()) if k not in ("model", "train_config")},
        "model": model.fingerprint() if model is not None else None,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _evaluation_clone(estimator, params, feature_scales):
    clone = copy.copy(estimator)
    clone.set_network_parameters(params, feature_scales) if _takes_scales(clone) \
        else clone.set_network_parameters(params)
    return clone


def _takes_scales(estimator) -> bool:
    return "feature_scales" in estimator.set_network_parameters.__func__.__code__.co_varnames


def train(dataset: Dataset, model, estimator, cfg: TrainConfig,
          validation: Optional[Dataset] = None,
          feature_scales: Optional[dict] = None) -> Checkpoint:
    """Adam on the mini-batch loss; returns the best-validation checkpoint.

    Divergent batches (non-finite or clamped loss) are skipped; three
    consecutive divergences roll parameters back to the current best and
    halve the learning rate, up to ``max_lr_halvings`` times.
    """
    samples = prepare_trajectories(dataset, cfg)
    if validation is None:
        validation = dataset
    rng = np.random.default_rng(cfg.seed)
    params = estimator.initial_parameters()
    adam = AdamState.for_params(params)
    lr = cfg.lr
    steps_per_epoch = max(1, (len(samples) + cfg.batch_size - 1) // cfg.batch_size)
    val_every = cfg.val_every if cfg.val_every else steps_per_epoch

    best_params = {k: v.copy() for k, v in params.items()}
    best_val = float("inf")
    best_epoch, best_step = 0, 0
    bad_validations = 0
    consecutive_divergences = 0
    halvings = 0
    step = 0
    log_rows = [["step", "train_loss", "val_mse_db", "lr", "wall_clock"]]
    t_start = time.perf_counter()
    stop = False

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(samples), cfg.batch_size):
            batch = [samples[i] for i in order[start:start + cfg.batch_size]]
            tape = ad.Tape()
            pvars = bind_params(tape, params)
            try:
                loss = batch_loss_var(tape, estimator, pvars, batch, cfg.gamma,
                                      feature_scales=feature_scales)
                loss_value = float(loss.value[0, 0])
                diverged = not np.isfinite(loss_value) or loss_value > cfg.loss_clamp
            except (FilterDivergedError, FloatingPointError):
                loss_value = float("nan")
                diverged = True

            if diverged:
                consecutive_divergences += 1
                logger.warning("skipping diverged batch at step %d (loss=%s)", step, loss_value)
                if consecutive_divergences >= 3 and halvings < cfg.max_lr_halvings:
                    params = {k: v.copy() for k, v in best_params.items()}
                    adam = AdamState.for_params(params)
                    lr *= 0.5
                    halvings += 1
                    consecutive_divergences = 0
                    logger.warning("restarted from best checkpoint at lr=%g", lr)
                step += 1
                continue
            consecutive_divergences = 0

            ad.backward(loss)
            grads = collect_gradients(pvars)
            params = adam_step(params, grads, adam, lr)
            step += 1

            if step % val_every == 0:
                clone = _evaluation_clone(estimator, params, feature_scales)
                result = evaluate_estimator(clone, validation, stopwatch=False)
                val_db = result["mse_db"]
                log_rows.append([str(step), f"{loss_value:.8e}", f"{val_db:.6f}",
                                 f"{lr:.3e}", f"{time.perf_counter() - t_start:.3f}"])
                if val_db < best_val:
                    best_val = val_db
                    best_params = {k: v.copy() for k, v in params.items()}
                    best_epoch, best_step = epoch, step
                    bad_validations = 0
                else:
                    bad_validations += 1
                    if cfg.patience is not None and bad_validations >= cfg.patience:
                        logger.info("early stop at step %d (no improvement in %d validations)",
                                    step, bad_validations)
                        stop = True
                        break
        if stop:
            break

    if cfg.log_path:
        atomic_write_text(cfg.log_path, "\n".join(",".join(r) for r in log_rows) + "\n")

    header = {"kind": getattr(estimator, "arch", None) or type(estimator).__name__,
              "trained_with": cfg.fingerprint_payload()}
    if hasattr(estimator, "build_arch"):
        arch = estimator.build_arch()
        from ..gainnet.layers import GRU_CONVENTION

        header = {"kind": arch.kind, "m": arch.m, "n": arch.n,
                  "rho": getattr(arch, "rho", None),
                  "features": list(arch.mask.names()),
                  "gru_convention": GRU_CONVENTION,
                  "seed": cfg.seed,
                  "trained_with": cfg.fingerprint_payload()}
    return Checkpoint(params=best_params, adam_state=adam,
                      config_fingerprint=config_fingerprint(cfg, estimator, model),
                      best_val_mse_db=best_val, epoch=best_epoch, step=best_step,
                      header=header)
