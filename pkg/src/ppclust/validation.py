"""Input validation helpers for the estimator API.

Estimators accept a :class:`~ppclust.core.PatternDataset`, or any sequence of
point patterns where each pattern is a :class:`~ppclust.core.PointPattern`, an
``(m, d)`` array, or a nested list. These helpers normalise all of that into a
list of C-contiguous float arrays with a shared dimension.
"""
from __future__ import annotations

import numbers

import numpy as np

from .core import PatternDataset, PointPattern, _as_point_array
from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidCutoffError,
    InvalidOrderError,
    NonFiniteCoordinateError,
)


def check_patterns(X, dim=None, min_patterns=1):
    """Return ``(arrays, dim)`` for a collection of point patterns.

    Raises if patterns disagree on dimension, contain non-finite values, or
    there are fewer than ``min_patterns`` of them.
    """
    if isinstance(X, PatternDataset):
        arrays = [np.ascontiguousarray(p.points) for p in X.patterns]
        if dim is not None and X.dim != dim:
            raise DimensionMismatchError(f"data has dimension {X.dim}, expected {dim}")
        dim = X.dim
    else:
        if isinstance(X, (PointPattern, np.ndarray)) and np.ndim(X) == 2:
            raise TypeError("expected a collection of point patterns, got a single pattern; "
                            "wrap it in a list")
        raw = [p.points if isinstance(p, PointPattern) else p for p in X]
        arrays = [_as_point_array(p) for p in raw]
        if dim is None:
            dim = next((a.shape[1] for a in arrays if a.shape[0] > 0), None)
            if dim is None:
                dim = next((a.shape[1] for a in arrays if a.shape[1] > 0), 1)
        out = []
        for n, a in enumerate(arrays):
            if a.shape[0] == 0:
                a = a.reshape(0, dim)
            elif a.shape[1] != dim:
                raise DimensionMismatchError(
                    f"pattern {n} has dimension {a.shape[1]}, expected {dim}")
            out.append(np.ascontiguousarray(a, dtype=float))
        arrays = out
    if len(arrays) < min_patterns:
        raise EmptyDatasetError(f"need at least {min_patterns} pattern(s), got {len(arrays)}")
    for n, a in enumerate(arrays):
        if not np.all(np.isfinite(a)):
            raise NonFiniteCoordinateError(f"pattern {n} has a non-finite coordinate")
    return arrays, dim


def check_pattern_pair(X, Y):
    """Coerce two patterns to arrays of a common dimension.

    An empty pattern built without a dimension (shape ``(0, 0)``) adopts the
    dimension of the other operand.
    """
    x = _as_point_array(X.points if isinstance(X, PointPattern) else X)
    y = _as_point_array(Y.points if isinstance(Y, PointPattern) else Y)
    if x.shape == (0, 0):
        x = x.reshape(0, y.shape[1])
    if y.shape == (0, 0):
        y = y.reshape(0, x.shape[1])
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchError(
            f"patterns have dimensions {x.shape[1]} and {y.shape[1]}")
    return x, y


def check_order(p):
    if not isinstance(p, numbers.Real) or not np.isfinite(p) or p < 1:
        raise InvalidOrderError(f"order p must be a finite real >= 1, got {p!r}")
    return float(p)


def check_cutoff(c):
    if c is None or not isinstance(c, numbers.Real) or not np.isfinite(c) or c <= 0:
        raise InvalidCutoffError(f"cut-off c must be a finite real > 0, got {c!r}")
    return float(c)


def check_square_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M
