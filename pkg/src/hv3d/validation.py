"""Small input checks used by the metric pipeline."""

from __future__ import annotations

import numpy as np

from .errors import ContractError


def as_plane(arr, name: str = "plane") -> np.ndarray:
    """Return ``arr`` as a non-empty 2-D array, without copying when possible."""
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def as_float_plane(arr, name: str = "plane") -> np.ndarray:
    return as_plane(arr, name).astype(np.float64, copy=False)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "planes") -> None:
    if a.shape != b.shape:
        raise ContractError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def check_uint8(a: np.ndarray, name: str) -> None:
    if a.dtype != np.uint8:
        raise ContractError(f"{name} must be uint8, got {a.dtype}")
