"""Small input-validation helpers shared across modules."""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError, ValidationError


def check_positive(value, name, *, strict=True, error=InvalidParameterError):
    value = float(value)
    if not math.isfinite(value) or (value <= 0 if strict else value < 0):
        rel = ">" if strict else ">="
        raise error(f"{name} must be finite and {rel} 0, got {value!r}")
    return value


def check_nonnegative(value, name, *, error=InvalidParameterError):
    return check_positive(value, name, strict=False, error=error)


def check_open_unit(value, name, *, error=ValidationError):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise error(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_grid(grid, name="freq_grid", *, min_len=1):
    """Return ``grid`` as a float array, requiring finite, strictly increasing values."""
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise ValidationError(f"{name} must be 1-D with at least {min_len} point(s)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return arr


def check_series(series, name="series", *, min_len=1):
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise ValidationError(f"{name} must be 1-D with at least {min_len} sample(s)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr
