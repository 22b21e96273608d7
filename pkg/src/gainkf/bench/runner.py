"""Experiment execution: dataset generation, training, evaluation."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from ..data import Dataset, atomic_write_text, load_dataset, save_dataset
from ..exceptions import ConfigError, MissingArtifactError
from ..filters import (
    ExtendedKalmanFilter,
    KalmanFilter,
    ParticleFilter,
    UnscentedKalmanFilter,
)
from ..gainnet import LearnedGainFilter, ModelBasedRnnFilter, VanillaRnnFilter
from ..gainnet.checkpoint import load_checkpoint
from ..metrics import evaluate_estimator
from ..trainer import Checkpoint, TrainConfig
from .config import TRAINABLE_METHODS, ExperimentConfig, noise_tag
from .reports import ReportRow

logger = logging.getLogger(__name__)


def experiment_manifest_path(out_dir) -> Path:
    return Path(out_dir) / "experiment.json"


def generate_experiment(cfg: ExperimentConfig, out_dir) -> Path:
    """Write every (noise point, split) dataset plus the experiment manifest."""
    out_dir = Path(out_dir)
    for point in cfg.inv_r2_db:
        for split in ("train", "validation", "test"):
            ds = cfg.generate_split(split, point)
            save_dataset(ds, out_dir / noise_tag(point), name=split)
    manifest = {
        "scenario": cfg.scenario,
        "config_hash": cfg.config_hash(),
        "inv_r2_db": cfg.inv_r2_db,
        "nu_db": cfg.nu_db,
        "full_information": cfg.is_full_information(),
        "data_model": cfg.data_model().fingerprint(),
        "filter_model": cfg.filter_model().fingerprint(),
        "seed": cfg.data_seed,
    }
    path = experiment_manifest_path(out_dir)
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_split(out_dir, inv_r2_db: float, split: str) -> Dataset:
    manifest = Path(out_dir) / noise_tag(inv_r2_db) / f"{split}.manifest.json"
    return load_dataset(manifest)


def assert_information_mode(cfg: ExperimentConfig) -> None:
    """Mismatch must be explicit: generating == design exactly when no
    mismatch knob is set."""
    mm = cfg.model.get("mismatch", {}) or {}
    knobs_clean = (float(mm.get("evolution_rotation_deg", 0.0)) == 0.0
                   and float(mm.get("observation_rotation_deg", 0.0)) == 0.0
                   and int(mm.get("decimation", 1)) == 1
                   and mm.get("data_taylor_order", 5) == mm.get("filter_taylor_order", 5)
                   and cfg.model.get("params", "full") == cfg.model.get(
                       "filter_params", cfg.model.get("params", "full")))
    if knobs_clean != cfg.is_full_information():
        raise ConfigError(
            "information mode is inconsistent: mismatch knobs say "
            f"full_information={knobs_clean} but model fingerprints say "
            f"{cfg.is_full_information()}")


def make_train_config(cfg: ExperimentConfig, bptt_default: str | None = None) -> TrainConfig:
    kw = dict(cfg.train)
    bptt = kw.pop("bptt", None) or bptt_default
    allowed = {"lr", "gamma", "batch_size", "epochs", "truncation", "seed",
               "val_every", "patience", "loss_clamp", "max_lr_halvings", "log_path"}
    unknown = set(kw) - allowed
    if unknown:
        raise ConfigError(f"unknown train keys: {sorted(unknown)}")
    return TrainConfig(bptt=bptt, **kw)


def build_trainable(cfg: ExperimentConfig, method: str, log_path=None):
    """Instantiate an untrained learned estimator for one method name."""
    filter_model = cfg.filter_model()
    gain = cfg.gain
    if method == "knet":
        train_cfg = make_train_config(cfg)  # bptt defaults from the gain config
        estimator = LearnedGainFilter(
            filter_model,
            config=gain.get("config", "C1"),
            rho=int(gain.get("rho", 10)),
            gru_layers=int(gain.get("gru_layers", 1)),
            in_mult=int(gain.get("in_mult", 5)),
            seed=int(gain.get("seed", 0)),
            standardize=bool(gain.get("standardize", False)),
            train_config=train_cfg.replace(log_path=str(log_path) if log_path else None),
        )
        return estimator
    train_cfg = make_train_config(cfg, bptt_default="v1")
    train_cfg = train_cfg.replace(log_path=str(log_path) if log_path else None)
    if method == "vanilla-rnn":
        return VanillaRnnFilter(m=filter_model.m, n=filter_model.n,
                                rho=int(gain.get("rho", 10)),
                                seed=int(gain.get("seed", 0)),
                                train_config=train_cfg)
    if method == "mb-rnn":
        return ModelBasedRnnFilter(filter_model, use_differences=False,
                                   rho=int(gain.get("rho", 10)),
                                   seed=int(gain.get("seed", 0)),
                                   train_config=train_cfg)
    if method == "mb-rnn-diff":
        return ModelBasedRnnFilter(filter_model, use_differences=True,
                                   rho=int(gain.get("rho", 10)),
                                   seed=int(gain.get("seed", 0)),
                                   train_config=train_cfg)
    raise ConfigError(f"{method!r} is not a trainable method")


def checkpoint_path(out_dir, inv_r2_db: float, method: str) -> Path:
    return Path(out_dir) / noise_tag(inv_r2_db) / f"{method}.ckpt"


def train_experiment(cfg: ExperimentConfig, out_dir, methods=None) -> dict:
    """Train every requested learnable method at every noise point."""
    assert_information_mode(cfg)
    out_dir = Path(out_dir)
    methods = [m for m in (methods or cfg.methods) if m in TRAINABLE_METHODS]
    results = {}
    for point in cfg.inv_r2_db:
        train_ds = load_split(out_dir, point, "train")
        val_ds = load_split(out_dir, point, "validation")
        for method in methods:
            tag_dir = out_dir / noise_tag(point)
            curve = tag_dir / f"{method}.curve.csv"
            estimator = build_trainable(cfg, method, log_path=curve)
            logger.info("training %s at 1/r^2=%g dB", method, point)
            estimator.fit(train_ds, validation=val_ds)
            path = checkpoint_path(out_dir, point, method)
            estimator.checkpoint_.save(path)
            results[(point, method)] = path
    return results


def load_trained(cfg: ExperimentConfig, method: str, path) -> tuple[object, str]:
    """Rebuild an estimator from its checkpoint; returns (estimator, checkpoint id)."""
    if not Path(path).exists():
        raise MissingArtifactError(f"missing checkpoint for {method!r}: {path}")
    checkpoint = Checkpoint.load(path)
    estimator = build_trainable(cfg, method)
    scales = None
    if method == "knet" and cfg.gain.get("standardize"):
        header, _ = load_checkpoint(path)
        scales = header.get("feature_scales")
    estimator.set_network_parameters(checkpoint.params, scales) \
        if method == "knet" else estimator.set_network_parameters(checkpoint.params)
    return estimator, checkpoint.config_fingerprint


def build_model_based(cfg: ExperimentConfig, method: str, inv_r2_db: float,
                      validation: Dataset | None):
    """Model-based filter at one noise point, grid-tuned when configured."""
    filter_model = cfg.filter_model()
    noise = cfg.noise_spec(inv_r2_db)
    grid = cfg.filters.get("tune_grid")
    common = dict(q2=noise.q2, r2=noise.r2, grid=grid)
    if method == "kf":
        est = KalmanFilter(filter_model, **common)
    elif method == "ekf":
        est = ExtendedKalmanFilter(filter_model, **common)
    elif method == "ukf":
        est = UnscentedKalmanFilter(filter_model, **common)
    elif method == "pf":
        est = ParticleFilter(filter_model, **common,
                             n_particles=int(cfg.filters.get("pf_particles", 100)),
                             seed=int(cfg.filters.get("pf_seed", 0)))
    else:
        raise ConfigError(f"{method!r} is not a model-based method")
    if grid is not None and validation is not None:
        est.fit(validation)
    return est


def eval_experiment(cfg: ExperimentConfig, out_dir, methods=None) -> list[ReportRow]:
    """One report row per (method, noise point) over the test split."""
    assert_information_mode(cfg)
    out_dir = Path(out_dir)
    methods = methods or cfg.methods
    rows = []
    for point in cfg.inv_r2_db:
        test_ds = load_split(out_dir, point, "test")
        validation = (load_split(out_dir, point, "validation")
                      if cfg.filters.get("tune_grid") is not None else None)
        for method in methods:
            ckpt_id = "-"
            if method in TRAINABLE_METHODS:
                estimator, ckpt_id = load_trained(
                    cfg, method, checkpoint_path(out_dir, point, method))
            elif method == "dead-reckoning":
                from .nclt import DeadReckoning

                estimator = DeadReckoning(dtau=float(cfg.model.get("dtau", 1.0)))
            else:
                estimator = build_model_based(cfg, method, point, validation)
            result = evaluate_estimator(estimator, test_ds,
                                        stopwatch=cfg.measure_runtime)
            rows.append(ReportRow(
                scenario=cfg.scenario, method=method, inv_r2_db=point,
                mse_db=result["mse_db"], sigma_db=result["sigma_db"],
                runtime_s=result["runtime_s"], checkpoint=ckpt_id))
    return rows
