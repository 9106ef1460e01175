"""Input validation helpers shared by the public functions and estimators."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import OutOfDomain


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_open_unit(value, name):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_points(X, d, name="X"):
    """Return ``X`` as a float array of shape (n, d) inside [0, 1]^d.

    A 1-D input is read as a single point when ``d > 1`` and as ``n``
    scalar points when ``d == 1``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if d == 1 else X.reshape(1, -1)
    X = check_array(X, ensure_2d=True, dtype=float, input_name=name)
    if X.shape[1] != d:
        raise ValueError(f"{name} has {X.shape[1]} coordinates, model has d={d}")
    if np.any(X < 0.0) or np.any(X > 1.0):
        bad = np.argwhere((X < 0.0) | (X > 1.0))[0]
        raise OutOfDomain(
            f"{name}[{bad[0]}, {bad[1]}] = {X[bad[0], bad[1]]!r} is outside [0, 1]"
        )
    return X


def as_generator(rng):
    """Accept a seed, a SeedSequence or a Generator; never draw OS entropy."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or generator is required")
    return np.random.default_rng(rng)


def stream(seed, *index):
    """Independent generator for the sub-stream ``(seed, *index)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(index)))
