"""Small input-validation helpers used by the estimator API."""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a float64 1-D array, optionally enforcing its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"{name} must have length {dim}, got {arr.shape[0]}")
    return arr


def as_matrix(x, shape: tuple[int, int] | None = None, name: str = "A") -> np.ndarray:
    """Coerce to a float64 2-D array, optionally enforcing its shape."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a matrix, got ndim={arr.ndim}")
    if shape is not None and arr.shape != shape:
        raise ShapeError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive(value: float, name: str, strict: bool = False) -> float:
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)
