"""Rand index between two labelings of the same patterns."""
from __future__ import annotations

import numpy as np

from .exceptions import LengthMismatchError, TooFewError

__all__ = ["rand_index"]


def _pairs(counts):
    counts = np.asarray(counts, dtype=np.int64)
    return int(np.sum(counts * (counts - 1) // 2))


def _encode(labels):
    codes: dict = {}
    return np.array([codes.setdefault(lab, len(codes)) for lab in labels], dtype=np.int64)


def rand_index(predicted, truth) -> float:
    """Fraction of pattern pairs on which the two partitions agree.

    A pair agrees when it is co-clustered in both labelings or separated in
    both. Labels are compared only for equality, so any relabeling of either
    argument leaves the value unchanged.
    """
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise LengthMismatchError(f"{len(predicted)} predicted labels vs {len(truth)} true labels")
    n = len(truth)
    if n < 2:
        raise TooFewError("the Rand index needs at least two items")
    a = _encode(predicted)
    b = _encode(truth)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    both = _pairs(table.ravel())
    same_pred = _pairs(table.sum(axis=1))
    same_true = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    agreements = total + 2 * both - same_pred - same_true
    return agreements / total
