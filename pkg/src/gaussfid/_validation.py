"""Small input validation helpers shared by the public API."""

import math
import numbers

import numpy as np

# eigenvalues above -EIG_TOL count as nonnegative
EIG_TOL = 1e-10


def check_finite(value, name):
    """Return ``value`` as float, raising ValueError if not finite."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise TypeError(f"{name} must be a real number, got {value!r}") from None
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_complex(value, name):
    try:
        z = complex(value)
    except (TypeError, ValueError):
        raise TypeError(f"{name} must be a complex number, got {value!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z}")
    return z


def check_nonnegative(value, name):
    value = check_finite(value, name)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_dim(dim, minimum=2):
    if isinstance(dim, bool) or not isinstance(dim, numbers.Integral):
        raise TypeError(f"dim must be an integer, got {dim!r}")
    if dim < minimum:
        raise ValueError(f"dim must be >= {minimum}, got {dim}")
    return int(dim)


def check_step(h, low=1e-4, high=1e-2):
    h = check_finite(h, "h")
    if not low <= h <= high:
        raise ValueError(f"step h must lie in [{low}, {high}], got {h}")
    return h


def check_grid(values, name, *, sorted_ascending=False, positive=False):
    """Validate a 1-D parameter grid and return it as a float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if sorted_ascending and np.any(np.diff(arr) < 0):
        raise ValueError(f"{name} must be sorted ascending")
    if positive and np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return arr


def check_square(matrix, size, name):
    arr = np.asarray(matrix)
    if arr.shape != (size, size):
        raise ValueError(f"{name} must have shape ({size}, {size}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr
