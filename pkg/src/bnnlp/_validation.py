"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError


def as_2d_float(X, name: str = "X") -> np.ndarray:
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be numeric") from exc
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def as_1d_float(y, name: str = "y") -> np.ndarray:
    try:
        arr = np.asarray(y, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be numeric") from exc
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def check_consistent_rows(*arrays) -> int:
    lengths = {len(a) for a in arrays}
    if len(lengths) != 1:
        raise InvalidInputError(f"inputs have inconsistent numbers of rows: {sorted(lengths)}")
    return lengths.pop()


def standardize_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and scales; constant columns keep mean 0 and scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    const = scale < 1e-12
    mean = np.where(const, 0.0, mean)
    scale = np.where(const, 1.0, scale)
    return mean, scale
