"""Input validation helpers shared by the estimators and free functions."""

import numbers

import numpy as np

from .exceptions import DimensionMismatchError


def check_image(x, name="image"):
    """Return ``x`` as a finite complex128 2-D array.

    Raises
    ------
    ValueError
        If ``x`` is not two-dimensional, is empty or holds NaN/Inf.
    """
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_channels(t, name="channels"):
    """Return ``t`` as a finite float64 array of shape ``(2, rows, cols)``."""
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ValueError(f"{name} must have shape (2, rows, cols), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_channel_batch(X, name="X"):
    """Accept ``(2, r, c)`` or ``(n, 2, r, c)`` real arrays; return the 4-D form."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2, rows, cols), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(a, b, names=("reference", "test")):
    if np.shape(a) != np.shape(b):
        raise DimensionMismatchError(
            f"{names[0]} has shape {np.shape(a)} but {names[1]} has shape {np.shape(b)}"
        )


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def readonly(arr):
    """Mark an array read-only and return it."""
    arr.setflags(write=False)
    return arr
