"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def check_unit_value(y, name="y"):
    """A single observation in the closed unit interval, returned as float."""
    if not isinstance(y, numbers.Real) or isinstance(y, bool):
        raise TypeError(f"{name} must be a real scalar, got {type(y).__name__}")
    y = float(y)
    if not np.isfinite(y) or y < 0.0 or y > 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {y!r}")
    return y


def check_stream(X, name="X"):
    """A 1-D array of observations in [0, 1], returned as float64."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D (or a single column), got shape {arr.shape}")
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_mean_candidate(m, name="m"):
    """A candidate mean strictly inside (0, 1)."""
    m = float(m)
    if not 0.0 < m < 1.0:
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {m!r}")
    return m


def check_delta(delta):
    """Error budget delta in (0, 1]; delta = 1 yields a degenerate threshold."""
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    return delta


def check_bet_fraction(b, name="b"):
    """A bet fraction in the closed unit interval."""
    b = float(b)
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {b!r}")
    return b
