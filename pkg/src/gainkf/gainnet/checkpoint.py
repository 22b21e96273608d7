"""Versioned binary container for network parameters and optimizer state.

Layout (all integers little-endian uint64):

    magic    8 bytes  b"GKFNET01"
    hlen     header length in bytes
    header   UTF-8 JSON: architecture kind, m, n, rho, feature mask,
             GRU convention tag, seed, plus caller extras
    count    number of named tensors
    per tensor:
        nlen, name (UTF-8), ndim, dims..., data (float64 LE, row-major)
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..data import atomic_write_bytes
from ..exceptions import MissingArtifactError

MAGIC = b"GKFNET01"


def save_checkpoint(path, header: dict, tensors: dict[str, np.ndarray]) -> Path:
    blob = bytearray(MAGIC)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob += struct.pack("<Q", len(header_bytes)) + header_bytes
    blob += struct.pack("<Q", len(tensors))
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor, dtype="<f8")
        name_bytes = name.encode("utf-8")
        blob += struct.pack("<Q", len(name_bytes)) + name_bytes
        blob += struct.pack("<Q", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}Q", *arr.shape)
        blob += arr.tobytes(order="C")
    path = Path(path)
    atomic_write_bytes(path, bytes(blob))
    return path


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"no such checkpoint: {path}")
    buf = path.read_bytes()
    if buf[:8] != MAGIC:
        raise ValueError(f"{path} is not a gainkf checkpoint")
    offset = 8
    (hlen,) = struct.unpack_from("<Q", buf, offset); offset += 8
    header = json.loads(buf[offset:offset + hlen].decode("utf-8")); offset += hlen
    (count,) = struct.unpack_from("<Q", buf, offset); offset += 8
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<Q", buf, offset); offset += 8
        name = buf[offset:offset + nlen].decode("utf-8"); offset += nlen
        (ndim,) = struct.unpack_from("<Q", buf, offset); offset += 8
        shape = struct.unpack_from(f"<{ndim}Q", buf, offset); offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        flat = np.frombuffer(buf, dtype="<f8", count=size, offset=offset)
        offset += size * 8
        tensors[name] = flat.reshape(shape).astype(np.float64)
    return header, tensors
