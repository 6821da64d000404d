"""Small input-validation helpers shared across estimators."""

from __future__ import annotations

import numpy as np


def check_positive_int(value, name: str) -> int:
    if int(value) != value or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_probability(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_array_2d(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_binary_labels(y, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional")
    uniques = set(np.unique(arr).tolist())
    if not uniques <= {0, 1, True, False}:
        raise ValueError(f"{name} must be binary (0/1), got values {sorted(uniques)}")
    return arr.astype(np.int64)


def check_both_classes(y, name: str = "training labels") -> np.ndarray:
    arr = check_binary_labels(y, name)
    if len(np.unique(arr)) < 2:
        raise ValueError(f"{name} contain a single class; both classes are required")
    return arr
