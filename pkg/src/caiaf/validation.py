"""Input validation helpers shared across estimators and metrics."""

from __future__ import annotations

import numpy as np


def as_feature_matrix(X, dim: int | None = None) -> np.ndarray:
    """Coerce X to a 2-D float64 array of finite values.

    Args:
        X: array-like of shape (n_samples, n_features), or a single sample.
        dim: expected number of features, checked when given.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-D feature matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("features contain non-finite values")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected {dim} features, got {arr.shape[1]}")
    return arr


def as_feature_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce a single sample to a 1-D float64 array of finite values."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected 1-D feature vector, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("features contain non-finite values")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected {dim} features, got {arr.shape[0]}")
    return arr


def check_coordinates(lat: float, lon: float) -> tuple[float, float]:
    """Validate a latitude/longitude pair in degrees."""
    lat = float(lat)
    lon = float(lon)
    if not (-90.0 <= lat <= 90.0):
        raise ValueError(f"latitude {lat} outside [-90, 90]")
    if not (-180.0 <= lon <= 180.0):
        raise ValueError(f"longitude {lon} outside [-180, 180]")
    return lat, lon


def check_timestamp(ts: int) -> int:
    """Validate an epoch-seconds timestamp (must be >= 0)."""
    ts = int(ts)
    if ts < 0:
        raise ValueError(f"timestamp {ts} is negative")
    return ts
