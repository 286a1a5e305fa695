from __future__ import annotations

import numpy as np


def as_observations(y) -> np.ndarray:
    """Coerce to a finite, non-empty float vector.

    A 2-D input with a single column (the sklearn ``X`` shape) is flattened.
    """
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected a vector or a single column, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("no observations")
    if not np.isfinite(arr).all():
        raise ValueError("observations must be finite")
    return arr


def check_probability(name: str, value: float, closed: bool = True) -> float:
    v = float(value)
    ok = 0.0 <= v <= 1.0 if closed else 0.0 < v < 1.0
    if not ok:
        raise ValueError(f"{name} must lie in {'[0, 1]' if closed else '(0, 1)'}, got {v}")
    return v


def check_positive_int(name: str, value) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
