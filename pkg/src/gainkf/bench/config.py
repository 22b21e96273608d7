"""Experiment configuration: schema, validation, model construction.

A configuration fully determines one reproducible experiment: which
system generates the data, which (possibly mismatched) system the
filters design against, the noise grid, split sizes, methods, training
hyperparameters, and seeds.  The data-generating model and the
filter-design model are constructed separately so that mismatch is
always explicit; "full information" means their fingerprints coincide.

Config files are YAML; :data:`CONFIG_SCHEMA_DOC` documents every field.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..exceptions import ConfigError
from .. import ssm as ssm_mod
from ..ssm import (
    NoiseSpec,
    SSModel,
    TOY_FULL_PARAMS,
    TOY_PARTIAL_PARAMS,
    canonical_F,
    exchange_H,
    linear_model,
    lorenz_model,
    plane_rotation,
    rotate_matrix,
    toy_model,
    wiener_velocity_model,
)

TRAINABLE_METHODS = ("knet", "vanilla-rnn", "mb-rnn", "mb-rnn-diff")
MODEL_BASED_METHODS = ("kf", "ekf", "ukf", "pf")
ALL_METHODS = MODEL_BASED_METHODS + TRAINABLE_METHODS + ("dead-reckoning",)

CONFIG_SCHEMA_DOC = """\
scenario: str                  # experiment id (free-form, used in reports)
model:
  kind: linear | toy | lorenz | wiener
  m, n: int                    # linear only (n <= m)
  observation: exchange | identity         # linear H0
  params / filter_params: full | partial | {alpha, beta, phi, delta, a, b, c}   # toy
  dtau: float                  # lorenz / wiener sampling interval
  observation_kind: identity | spherical   # lorenz
  mismatch:
    evolution_rotation_deg: float   # data F = R(alpha) F0 (2x2 linear)
    observation_rotation_deg: float # data H = R(theta) H0 (plane rotation)
    data_taylor_order: int          # lorenz J for the generator (default 5)
    filter_taylor_order: int        # lorenz J for the filters (default 5)
    decimation: int                 # generate dense at dtau/k with q2=0, keep every k-th
noise:
  nu_db: float
  inv_r2_db: [float, ...]
data:
  train/validation/test: {count: int, T: int}
  x0: {kind: standard_normal | fixed, scale: float, value: [..]}
  test_x0: same shape, optional override for the test split
  seed: int
methods: [kf | ekf | ukf | pf | knet | vanilla-rnn | mb-rnn | mb-rnn-diff | dead-reckoning]
gain: {config: C1..C4, rho: int, gru_layers: int, in_mult: int, seed: int, standardize: bool}
train: {lr, gamma, batch_size, epochs, truncation, patience, val_every, seed}
filters: {tune_grid: {q2: [...], r2: [...]} | null, pf_particles: int, pf_seed: int}
measure_runtime: bool          # off -> runtime_s column is 0, reports byte-reproducible
"""


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


@dataclass
class SplitSpec:
    count: int
    T: int

    @classmethod
    def from_dict(cls, d: dict, name: str) -> "SplitSpec":
        _require(isinstance(d, dict), f"data.{name} must be a mapping")
        _require("count" in d and "T" in d, f"data.{name} needs count and T")
        count, T = int(d["count"]), int(d["T"])
        _require(count >= 1, f"data.{name}.count must be >= 1")
        _require(T >= 1, f"data.{name}.T must be >= 1")
        return cls(count=count, T=T)


@dataclass
class ExperimentConfig:
    scenario: str
    model: dict
    nu_db: float
    inv_r2_db: list[float]
    splits: dict[str, SplitSpec]
    x0: dict
    test_x0: Optional[dict]
    data_seed: int
    methods: list[str]
    gain: dict
    train: dict
    filters: dict
    measure_runtime: bool = True
    raw: dict = field(default_factory=dict, repr=False)

    # -- construction --------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _require(isinstance(d, dict), "config must be a mapping")
        _require("scenario" in d, "config needs a scenario id")
        model = d.get("model")
        _require(isinstance(model, dict) and "kind" in model, "config needs model.kind")
        kind = model["kind"]
        _require(kind in ("linear", "toy", "lorenz", "wiener"),
                 f"unknown model kind {kind!r}")

        noise = d.get("noise", {})
        _require("inv_r2_db" in noise, "config needs noise.inv_r2_db (list of dB points)")
        points = noise["inv_r2_db"]
        if not isinstance(points, (list, tuple)):
            points = [points]
        points = [float(p) for p in points]
        _require(len(points) >= 1, "noise.inv_r2_db must be non-empty")

        data = d.get("data", {})
        splits = {}
        for name in ("train", "validation", "test"):
            _require(name in data, f"config needs data.{name}")
            splits[name] = SplitSpec.from_dict(data[name], name)

        methods = list(d.get("methods", []))
        _require(len(methods) >= 0, "methods must be a list")
        for mth in methods:
            _require(mth in ALL_METHODS, f"unknown method {mth!r}; choose from {ALL_METHODS}")

        x0 = data.get("x0", {"kind": "standard_normal", "scale": 1.0})
        _require(x0.get("kind", "standard_normal") in ("standard_normal", "fixed"),
                 "data.x0.kind must be standard_normal or fixed")

        mismatch = model.get("mismatch", {}) or {}
        for key in mismatch:
            _require(key in ("evolution_rotation_deg", "observation_rotation_deg",
                             "data_taylor_order", "filter_taylor_order", "decimation"),
                     f"unknown mismatch key {key!r}")
        if mismatch.get("decimation", 1) != 1:
            _require(kind == "lorenz", "decimation mismatch applies to the lorenz model")

        return cls(
            scenario=str(d["scenario"]),
            model=model,
            nu_db=float(noise.get("nu_db", 0.0)),
            inv_r2_db=points,
            splits=splits,
            x0=x0,
            test_x0=data.get("test_x0"),
            data_seed=int(data.get("seed", 0)),
            methods=methods,
            gain=d.get("gain", {}),
            train=d.get("train", {}),
            filters=d.get("filters", {}),
            measure_runtime=bool(d.get("measure_runtime", True)),
            raw=d,
        )

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"no such config file: {path}")
        try:
            payload = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}")
        return cls.from_dict(payload)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, default=repr).encode()).hexdigest()[:16]

    # -- model construction ---------------------------------------------

    def _mismatch(self) -> dict:
        return self.model.get("mismatch", {}) or {}

    def data_model(self) -> SSModel:
        """The system trajectories are generated from."""
        kind = self.model["kind"]
        mm = self._mismatch()
        if kind == "linear":
            m = int(self.model.get("m", 2))
            n = int(self.model.get("n", m))
            F = canonical_F(m)
            H = np.eye(m)[:n] if self.model.get("observation") == "identity" \
                else exchange_H(m, n)
            alpha = float(mm.get("evolution_rotation_deg", 0.0))
            theta = float(mm.get("observation_rotation_deg", 0.0))
            if alpha:
                _require(m == 2, "evolution rotation mismatch requires a 2x2 system")
                F = rotate_matrix(F, alpha)
            if theta:
                H = plane_rotation(n, theta) @ H
            return linear_model(F, H)
        if kind == "toy":
            return toy_model(self._toy_params(self.model.get("params", "full")))
        if kind == "lorenz":
            J = int(mm.get("data_taylor_order", self.model.get("J", 5)))
            theta = float(mm.get("observation_rotation_deg", 0.0))
            obs_matrix = plane_rotation(3, theta) if theta else None
            k = int(mm.get("decimation", 1))
            dtau = float(self.model.get("dtau", 0.02))
            if k != 1:
                # effective generator: dense noiseless path, decimated by k
                dense = lorenz_model(dtau=dtau / k, J=J,
                                     observation=self.model.get("observation_kind",
                                                                "identity"))
                dense.meta["decimation"] = k
                return dense
            return lorenz_model(dtau=dtau, J=J,
                                observation=self.model.get("observation_kind", "identity"),
                                observation_matrix=obs_matrix)
        if kind == "wiener":
            model, _ = wiener_velocity_model(float(self.model.get("dtau", 1.0)),
                                             float(self.model.get("q2", 1.0)))
            return model
        raise ConfigError(f"unknown model kind {kind!r}")

    def filter_model(self) -> SSModel:
        """The (possibly mismatched) system the filters design against."""
        kind = self.model["kind"]
        mm = self._mismatch()
        if kind == "linear":
            m = int(self.model.get("m", 2))
            n = int(self.model.get("n", m))
            F = canonical_F(m)
            H = np.eye(m)[:n] if self.model.get("observation") == "identity" \
                else exchange_H(m, n)
            return linear_model(F, H)
        if kind == "toy":
            return toy_model(self._toy_params(
                self.model.get("filter_params", self.model.get("params", "full"))))
        if kind == "lorenz":
            J = int(mm.get("filter_taylor_order", self.model.get("J", 5)))
            return lorenz_model(dtau=float(self.model.get("dtau", 0.02)), J=J,
                                observation=self.model.get("observation_kind", "identity"))
        if kind == "wiener":
            return self.data_model()
        raise ConfigError(f"unknown model kind {kind!r}")

    @staticmethod
    def _toy_params(spec) -> dict:
        if spec == "full":
            return dict(TOY_FULL_PARAMS)
        if spec == "partial":
            return dict(TOY_PARTIAL_PARAMS)
        if isinstance(spec, dict):
            return spec
        raise ConfigError(f"toy params must be 'full', 'partial', or a mapping, got {spec!r}")

    def is_full_information(self) -> bool:
        return self.data_model().fingerprint() == self.filter_model().fingerprint()

    def noise_spec(self, inv_r2_db: float) -> NoiseSpec:
        return NoiseSpec.from_db(inv_r2_db, self.nu_db)

    # -- dataset synthesis ----------------------------------------------

    def generate_split(self, split: str, inv_r2_db: float):
        """Simulate one split at one noise point, honoring mismatch knobs."""
        from ..data import Dataset

        spec = self.splits[split]
        point_index = self.inv_r2_db.index(inv_r2_db)
        root = np.random.SeedSequence([self.data_seed, point_index,
                                       ("train", "validation", "test").index(split)])
        x0 = self.test_x0 if (split == "test" and self.test_x0) else self.x0
        kw = dict(x0_kind=x0.get("kind", "standard_normal"),
                  x0_value=x0.get("value"), x0_scale=float(x0.get("scale", 1.0)))
        noise = self.noise_spec(inv_r2_db)
        mm = self._mismatch()
        k = int(mm.get("decimation", 1))
        model = self.data_model()
        if k == 1:
            ds = ssm_mod.simulate_dataset(model, noise, spec.count, spec.T, root,
                                          split=split, **kw)
        else:
            # dense noiseless path at dtau/k, decimated, observation noise after
            dense = ssm_mod.simulate_dataset(
                model, NoiseSpec(0.0, 0.0), spec.count, spec.T * k, root,
                split=split, **kw)
            children = np.random.SeedSequence([self.data_seed, point_index, 7]).spawn(len(dense))
            trajs = [ssm_mod.add_observation_noise(ssm_mod.decimate(tr, k), noise.r2, s)
                     for tr, s in zip(dense, children)]
            ds = Dataset(trajectories=trajs, split=split)
        ds.meta.update({
            "scenario": self.scenario, "inv_r2_db": inv_r2_db, "nu_db": self.nu_db,
            "q2": noise.q2, "r2": noise.r2, "seed": self.data_seed,
            "data_model": model.fingerprint(), "filter_model": self.filter_model().fingerprint(),
        })
        return ds


def noise_tag(inv_r2_db: float) -> str:
    """Directory tag for one noise-grid point, e.g. inv_r2_20db."""
    text = f"{inv_r2_db:g}".replace("-", "m").replace(".", "p")
    return f"inv_r2_{text}db"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)
