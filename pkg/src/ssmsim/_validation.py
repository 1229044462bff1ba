import numpy as np

from .exceptions import DimensionError, NumericError, ParameterError, RangeError


def check_probability(p, name="p"):
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_finite(a, name="array"):
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite values")
    return a


def check_unit_interval(X, name="X", error=RangeError):
    """Validate that every entry of ``X`` lies in [0, 1].

    The error message names the first offending (row, col) so CLI users can
    fix their dataset files.
    """
    X = check_finite(X, name)
    bad = np.argwhere((X < 0.0) | (X > 1.0))
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise error(f"{name} value {X[idx]!r} at index {idx} outside [0, 1]")
    return X


def check_count(n, name, minimum=1):
    if int(n) != n or n < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_same_shape(a, b, what):
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"{what}: shape {np.shape(a)} != {np.shape(b)}")
