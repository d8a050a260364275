"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue


def check_raw_matrix(X, *, name: str = "X") -> np.ndarray:
    """Validate an activation matrix: 2-D, non-empty, finite, float32."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must have at least one sample and one feature")
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(np.asarray(X, dtype=np.float64)))[0]
        raise NonFiniteValue(f"non-finite value in {name} at sample {i}, feature {j}")
    return np.ascontiguousarray(X, dtype=np.float32)


def check_vector(x, *, name: str = "x", min_length: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue(f"non-finite value in {name}")
    return x


def check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"length mismatch: {x.shape[0]} vs {y.shape[0]}"
        )


def check_condensed(condensed, n_items: int, *, name: str = "condensed") -> np.ndarray:
    condensed = np.asarray(condensed, dtype=np.float64).ravel()
    expected = n_items * (n_items - 1) // 2
    if condensed.size != expected:
        raise DimensionMismatch(
            f"{name} has {condensed.size} entries, expected {expected} for {n_items} items"
        )
    return condensed


def condensed_index(i: int, j: int, n: int) -> int:
    """Index of pair (i, j), i < j, in a condensed upper-triangle layout."""
    if i == j or i < 0 or j < 0 or i >= n or j >= n:
        raise IndexError(f"invalid pair ({i}, {j}) for {n} items")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)
