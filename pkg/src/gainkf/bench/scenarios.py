"""Built-in desk-scale experiment configurations.

Each entry regenerates one benchmark family at a size that completes in
minutes on one CPU; counts, lengths, and noise grids are deliberately
smaller than the original studies.  Entries are plain dicts in the
config schema, so ``ExperimentConfig.from_dict`` validates them like
any user file.
"""

from __future__ import annotations

import copy

from .config import ExperimentConfig

_LINEAR_DATA = {
    "train": {"count": 256, "T": 20},
    "validation": {"count": 64, "T": 20},
    "test": {"count": 100, "T": 20},
    "x0": {"kind": "standard_normal", "scale": 1.0},
    "seed": 1234,
}

SCENARIOS: dict[str, dict] = {
    "linear-full": {
        "scenario": "linear-full",
        "model": {"kind": "linear", "m": 2, "n": 2, "observation": "exchange"},
        "noise": {"nu_db": 0.0, "inv_r2_db": [10.0, 20.0, 30.0]},
        "data": copy.deepcopy(_LINEAR_DATA),
        "methods": ["kf", "knet"],
        "gain": {"config": "C1", "rho": 10, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 60,
                  "truncation": 20, "seed": 0},
    },
    "linear-transfer": {
        "scenario": "linear-transfer",
        "model": {"kind": "linear", "m": 2, "n": 2, "observation": "exchange"},
        "noise": {"nu_db": 0.0, "inv_r2_db": [20.0]},
        "data": {**copy.deepcopy(_LINEAR_DATA),
                 "test": {"count": 100, "T": 200}},
        "methods": ["kf", "knet", "vanilla-rnn", "mb-rnn", "mb-rnn-diff"],
        "gain": {"config": "C1", "rho": 10, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 60,
                  "truncation": 20, "seed": 0},
    },
    "linear-evol-mismatch": {
        "scenario": "linear-evol-mismatch",
        "model": {"kind": "linear", "m": 2, "n": 2, "observation": "exchange",
                  "mismatch": {"evolution_rotation_deg": 10.0}},
        "noise": {"nu_db": -10.0, "inv_r2_db": [10.0]},
        "data": copy.deepcopy(_LINEAR_DATA),
        "methods": ["kf", "knet"],
        "gain": {"config": "C2", "rho": 10, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 80, "seed": 0},
    },
    "linear-obs-mismatch": {
        "scenario": "linear-obs-mismatch",
        "model": {"kind": "linear", "m": 2, "n": 2, "observation": "identity",
                  "mismatch": {"observation_rotation_deg": 10.0}},
        "noise": {"nu_db": -20.0, "inv_r2_db": [20.0]},
        "data": {**copy.deepcopy(_LINEAR_DATA),
                 "train": {"count": 256, "T": 100},
                 "validation": {"count": 64, "T": 100},
                 "test": {"count": 100, "T": 100}},
        "methods": ["kf", "knet"],
        "gain": {"config": "C2", "rho": 10, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 60, "seed": 0},
    },
    "toy-full": {
        "scenario": "toy-full",
        "model": {"kind": "toy", "params": "full"},
        "noise": {"nu_db": -20.0, "inv_r2_db": [0.0, 20.0]},
        "data": {"train": {"count": 128, "T": 100},
                 "validation": {"count": 32, "T": 100},
                 "test": {"count": 50, "T": 100},
                 "x0": {"kind": "standard_normal", "scale": 1.0},
                 "seed": 4321},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C4", "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 40, "seed": 0},
    },
    "toy-partial": {
        "scenario": "toy-partial",
        "model": {"kind": "toy", "params": "full", "filter_params": "partial"},
        "noise": {"nu_db": -20.0, "inv_r2_db": [0.0, 20.0]},
        "data": {"train": {"count": 128, "T": 100},
                 "validation": {"count": 32, "T": 100},
                 "test": {"count": 50, "T": 100},
                 "x0": {"kind": "standard_normal", "scale": 1.0},
                 "seed": 4321},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C4", "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 40, "seed": 0},
    },
    "lorenz-full": {
        "scenario": "lorenz-full",
        "model": {"kind": "lorenz", "dtau": 0.02, "observation_kind": "identity"},
        "noise": {"nu_db": -20.0, "inv_r2_db": [0.0, 10.0, 20.0]},
        "data": {"train": {"count": 20, "T": 400},
                 "validation": {"count": 8, "T": 200},
                 "test": {"count": 20, "T": 200},
                 "x0": {"kind": "fixed", "value": [1.0, 1.0, 1.0]},
                 "seed": 2357},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C3", "rho": 5, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 12,
                  "truncation": 100, "seed": 0},
        "filters": {"tune_grid": {"q2": [1e-5, 1e-4, 1e-3, 1e-2], "r2": [1e-2, 1e-1, 1.0]},
                    "pf_particles": 100},
    },
    "lorenz-spherical": {
        "scenario": "lorenz-spherical",
        "model": {"kind": "lorenz", "dtau": 0.02, "observation_kind": "spherical"},
        "noise": {"nu_db": 0.0, "inv_r2_db": [0.0, 10.0, 20.0]},
        "data": {"train": {"count": 200, "T": 20},
                 "validation": {"count": 50, "T": 20},
                 "test": {"count": 50, "T": 20},
                 "x0": {"kind": "fixed", "value": [1.0, 1.0, 1.0]},
                 "seed": 97},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C4", "seed": 1, "standardize": True},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 30, "seed": 0},
        "filters": {"pf_particles": 100},
    },
    "lorenz-evol-j2": {
        "scenario": "lorenz-evol-j2",
        "model": {"kind": "lorenz", "dtau": 0.02, "observation_kind": "identity",
                  "mismatch": {"data_taylor_order": 5, "filter_taylor_order": 2}},
        "noise": {"nu_db": -20.0, "inv_r2_db": [20.0]},
        "data": {"train": {"count": 40, "T": 100},
                 "validation": {"count": 10, "T": 100},
                 "test": {"count": 20, "T": 200},
                 "x0": {"kind": "fixed", "value": [1.0, 1.0, 1.0]},
                 "seed": 31},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C4", "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 25, "seed": 0},
        "filters": {"tune_grid": {"q2": [1e-5, 1e-4, 1e-3, 1e-2], "r2": [1e-3, 1e-2, 1e-1]},
                    "pf_particles": 100},
    },
    "lorenz-obs-rot": {
        "scenario": "lorenz-obs-rot",
        "model": {"kind": "lorenz", "dtau": 0.02, "observation_kind": "identity",
                  "mismatch": {"observation_rotation_deg": 1.0}},
        "noise": {"nu_db": -20.0, "inv_r2_db": [20.0]},
        "data": {"train": {"count": 20, "T": 400},
                 "validation": {"count": 8, "T": 200},
                 "test": {"count": 20, "T": 200},
                 "x0": {"kind": "fixed", "value": [1.0, 1.0, 1.0]},
                 "seed": 53},
        "methods": ["ekf", "ukf", "pf", "knet"],
        "gain": {"config": "C3", "rho": 5, "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 15,
                  "truncation": 100, "seed": 0},
        "filters": {"tune_grid": {"q2": [1e-5, 1e-4, 1e-3, 1e-2], "r2": [1e-3, 1e-2, 1e-1]},
                    "pf_particles": 100},
    },
    "lorenz-decimation": {
        "scenario": "lorenz-decimation",
        "model": {"kind": "lorenz", "dtau": 0.02, "observation_kind": "identity",
                  "mismatch": {"decimation": 50}},
        "noise": {"nu_db": 0.0, "inv_r2_db": [0.0]},
        "data": {"train": {"count": 24, "T": 100},
                 "validation": {"count": 8, "T": 100},
                 "test": {"count": 10, "T": 200},
                 "x0": {"kind": "fixed", "value": [1.0, 1.0, 1.0]},
                 "seed": 77},
        "methods": ["ekf", "ukf", "pf", "knet", "mb-rnn"],
        "gain": {"config": "C4", "seed": 1},
        "train": {"lr": 1e-3, "gamma": 1e-4, "batch_size": 8, "epochs": 25, "seed": 0},
        "filters": {"tune_grid": {"q2": [1e-5, 1e-4, 1e-3, 1e-2], "r2": [1e-2, 1e-1, 1.0]},
                    "pf_particles": 100},
    },
}


def scenario_names() -> list[str]:
    return sorted(SCENARIOS)


def get_scenario(name: str) -> ExperimentConfig:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; available: {scenario_names()}")
    return ExperimentConfig.from_dict(copy.deepcopy(SCENARIOS[name]))
