"""Trajectory/dataset containers and their on-disk formats.

A dataset is stored as a JSON manifest plus a binary payload.  The
payload concatenates, per trajectory, three length-prefixed arrays
(x0, X, Y) of little-endian float64 values; matrices are laid out
column-major as [dim x T], so the payload streams one time step of a
given array at a time.  A plain CSV export (one row per time step)
exists for interop.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import MissingArtifactError, ShapeError

_FORMAT_NAME = "gainkf-dataset"
_FORMAT_VERSION = 1


@dataclass
class Trajectory:
    """One simulated or recorded rollout: initial state, states, observations."""

    x0: np.ndarray          # (m,)
    X: np.ndarray           # (m, T) ground-truth states
    Y: np.ndarray           # (n, T) observations

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        self.X = np.asarray(self.X, dtype=np.float64)
        self.Y = np.asarray(self.Y, dtype=np.float64)
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise ShapeError("X and Y must be 2-D [dim x T] arrays")
        if self.X.shape[1] != self.Y.shape[1]:
            raise ShapeError(f"X has T={self.X.shape[1]} but Y has T={self.Y.shape[1]}")
        if self.X.shape[1] < 1:
            raise ShapeError("trajectory must contain at least one step")
        if self.x0.shape[0] != self.X.shape[0]:
            raise ShapeError("x0 dimension does not match X")
        for name, arr in (("x0", self.x0), ("X", self.X), ("Y", self.Y)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"trajectory {name} contains non-finite entries")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def T(self) -> int:
        return self.X.shape[1]

    def prefix(self, length: int) -> "Trajectory":
        """First ``length`` steps (used by fixed-truncation training)."""
        if not 1 <= length <= self.T:
            raise ValueError(f"prefix length {length} outside [1, {self.T}]")
        return Trajectory(x0=self.x0.copy(), X=self.X[:, :length].copy(), Y=self.Y[:, :length].copy())

    def segments(self, length: int) -> list["Trajectory"]:
        """Split into contiguous segments of the given length.

        Each segment restarts from the ground-truth state preceding it,
        so a filter can be re-initialized per segment.  A trailing
        remainder shorter than ``length`` is dropped.
        """
        if length < 1:
            raise ValueError("segment length must be >= 1")
        out = []
        for start in range(0, self.T - length + 1, length):
            x0 = self.x0 if start == 0 else self.X[:, start - 1]
            out.append(Trajectory(x0=x0.copy(),
                                  X=self.X[:, start:start + length].copy(),
                                  Y=self.Y[:, start:start + length].copy()))
        return out


@dataclass
class Dataset:
    """A non-empty list of trajectories sharing dimensions, tagged by split."""

    trajectories: list[Trajectory]
    split: str = "train"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in ("train", "validation", "test"):
            raise ValueError(f"split must be train/validation/test, got {self.split!r}")
        if not self.trajectories:
            raise ValueError("dataset must contain at least one trajectory")
        m, n = self.trajectories[0].m, self.trajectories[0].n
        for i, tr in enumerate(self.trajectories):
            if tr.m != m or tr.n != n:
                raise ShapeError(f"trajectory {i} has dims ({tr.m},{tr.n}), expected ({m},{n})")

    @property
    def m(self) -> int:
        return self.trajectories[0].m

    @property
    def n(self) -> int:
        return self.trajectories[0].n

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)


# ---------------------------------------------------------------------------
# Atomic file helpers
# ---------------------------------------------------------------------------

def atomic_write_bytes(path, payload: bytes) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# Binary payload encoding
# ---------------------------------------------------------------------------

def _pack_array(arr: np.ndarray) -> bytes:
    """Length-prefixed little-endian float64 block, column-major layout."""
    flat = np.asarray(arr, dtype="<f8").flatten(order="F")
    return struct.pack("<Q", flat.size) + flat.tobytes()


def _unpack_array(buf: memoryview, offset: int, shape) -> tuple[np.ndarray, int]:
    (count,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    flat = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
    offset += count * 8
    expected = int(np.prod(shape))
    if count != expected:
        raise ValueError(f"payload block has {count} values, expected {expected}")
    return flat.reshape(shape, order="F").astype(np.float64), offset


def save_dataset(dataset: Dataset, directory, name: str | None = None) -> Path:
    """Write ``<name>.manifest.json`` + ``<name>.bin``; returns the manifest path."""
    directory = Path(directory)
    name = name or dataset.split
    payload = bytearray()
    records = []
    for tr in dataset.trajectories:
        records.append({"T": tr.T})
        payload += _pack_array(tr.x0)
        payload += _pack_array(tr.X)
        payload += _pack_array(tr.Y)
    manifest = {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "m": dataset.m,
        "n": dataset.n,
        "split": dataset.split,
        "payload": f"{name}.bin",
        "trajectories": records,
        "meta": dataset.meta,
    }
    atomic_write_bytes(directory / f"{name}.bin", bytes(payload))
    atomic_write_text(directory / f"{name}.manifest.json",
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory / f"{name}.manifest.json"


def load_dataset(manifest_path) -> Dataset:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingArtifactError(f"no such manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != _FORMAT_NAME:
        raise ValueError(f"{manifest_path} is not a {_FORMAT_NAME} manifest")
    if manifest.get("version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported dataset version {manifest.get('version')}")
    payload_path = manifest_path.parent / manifest["payload"]
    if not payload_path.exists():
        raise MissingArtifactError(f"missing payload: {payload_path}")
    buf = memoryview(payload_path.read_bytes())
    m, n = manifest["m"], manifest["n"]
    trajectories = []
    offset = 0
    for rec in manifest["trajectories"]:
        T = rec["T"]
        x0, offset = _unpack_array(buf, offset, (m,))
        X, offset = _unpack_array(buf, offset, (m, T))
        Y, offset = _unpack_array(buf, offset, (n, T))
        trajectories.append(Trajectory(x0=x0, X=X, Y=Y))
    return Dataset(trajectories=trajectories, split=manifest["split"], meta=manifest.get("meta", {}))


# ---------------------------------------------------------------------------
# CSV interop
# ---------------------------------------------------------------------------

def export_trajectory_csv(traj: Trajectory, path) -> None:
    """One row per time step: t, x_1..x_m, y_1..y_n (t starts at 1)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["t"] + [f"x_{i+1}" for i in range(traj.m)] + [f"y_{i+1}" for i in range(traj.n)]
    rows = [header]
    for t in range(traj.T):
        rows.append([str(t + 1)]
                    + [repr(float(v)) for v in traj.X[:, t]]
                    + [repr(float(v)) for v in traj.Y[:, t]])
    atomic_write_text(path, "\n".join(",".join(r) for r in rows) + "\n")


def import_trajectory_csv(path, x0=None) -> Trajectory:
    """Read a trajectory CSV back; x0 defaults to zeros (not stored in CSV)."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"no such CSV: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = sum(1 for c in header if c.startswith("x_"))
        n = sum(1 for c in header if c.startswith("y_"))
        xs, ys = [], []
        for row in reader:
            vals = [float(v) for v in row[1:]]
            xs.append(vals[:m])
            ys.append(vals[m:m + n])
    X = np.array(xs).T
    Y = np.array(ys).T
    x0 = np.zeros(m) if x0 is None else np.asarray(x0, dtype=np.float64)
    return Trajectory(x0=x0, X=X, Y=Y)
