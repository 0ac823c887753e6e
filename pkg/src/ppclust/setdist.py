"""Distances between point patterns and all-pairs dissimilarity matrices.

Three distances are provided, all over the Euclidean base metric:

* Hausdorff: the larger of the two directed max-min distances.
* Wasserstein of order ``p``: optimal transport between the uniform empirical
  measures of the two patterns.
* OSPA of order ``p`` with cut-off ``c``: optimal sub-pattern assignment with
  base distances truncated at ``c`` and a penalty of ``c`` per unassigned point.

Two empty patterns are at distance 0 under every metric. An empty and a
non-empty pattern are infinitely far apart under Hausdorff and Wasserstein,
and exactly ``c`` apart under OSPA.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .combsolve import solve_assignment, solve_uniform_transport
from .exceptions import PairwiseDistanceError, PointPatternError
from .validation import check_cutoff, check_order, check_pattern_pair, check_patterns

__all__ = [
    "DistanceSpec",
    "DissimilarityMatrix",
    "hausdorff",
    "wasserstein",
    "ospa",
    "set_distance",
    "pairwise_dissimilarity",
    "PairwiseSetDistance",
]

METRICS = ("hausdorff", "wasserstein", "ospa")


@dataclass(frozen=True)
class DistanceSpec:
    """Which set distance to use and its parameters.

    ``p`` is ignored by Hausdorff; ``c`` is only used (and required) by OSPA.
    """

    kind: str = "ospa"
    p: float = 2.0
    c: float | None = None
    base: str = "euclidean"

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in METRICS:
            raise ValueError(f"unknown set distance {self.kind!r}; choose from {METRICS}")
        object.__setattr__(self, "kind", kind)
        if self.base != "euclidean":
            raise ValueError("only the 'euclidean' base metric is supported")
        if kind in ("wasserstein", "ospa"):
            object.__setattr__(self, "p", check_order(self.p))
        if kind == "ospa":
            object.__setattr__(self, "c", check_cutoff(self.c))

    def describe(self) -> str:
        parts = [f"kind={self.kind}"]
        if self.kind != "hausdorff":
            parts.append(f"p={self.p!r}")
        if self.kind == "ospa":
            parts.append(f"c={self.c!r}")
        parts.append(f"base={self.base}")
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "DistanceSpec":
        fields = dict(tok.split("=", 1) for tok in text.split())
        kind = fields["kind"]
        p = float(fields["p"]) if "p" in fields else 2.0
        c = float(fields["c"]) if "c" in fields else None
        return cls(kind, p, c, fields.get("base", "euclidean"))


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric, zero-diagonal matrix of pairwise set distances."""

    values: np.ndarray
    spec: DistanceSpec

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError(f"dissimilarities must be square, got shape {vals.shape}")
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise ValueError("dissimilarities must be non-negative numbers")
        if not np.array_equal(vals, vals.T):
            raise ValueError("dissimilarity matrix must be symmetric")
        if np.any(np.diag(vals) != 0):
            raise ValueError("dissimilarity matrix must have a zero diagonal")
        if self.spec.kind == "ospa" and np.any(np.isinf(vals)):
            raise ValueError("OSPA dissimilarities are always finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.shape[0]


def _base_distances(x, y):
    return cdist(x, y, metric="euclidean")


def hausdorff(X, Y) -> float:
    """Hausdorff distance between two point patterns (may be ``inf``)."""
    x, y = check_pattern_pair(X, Y)
    m, n = len(x), len(y)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return math.inf
    d = _base_distances(x, y)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def wasserstein(X, Y, p=2.0) -> float:
    """Order-``p`` Wasserstein distance between uniform weights on ``X`` and ``Y``."""
    p = check_order(p)
    x, y = check_pattern_pair(X, Y)
    m, n = len(x), len(y)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return math.inf
    cost = _base_distances(x, y) ** p
    _, total = solve_uniform_transport(cost)
    return float(max(total, 0.0) ** (1.0 / p))


def ospa(X, Y, p=2.0, c=None) -> float:
    """OSPA distance of order ``p`` with cut-off ``c``; always in ``[0, c]``."""
    p = check_order(p)
    c = check_cutoff(c)
    x, y = check_pattern_pair(X, Y)
    if len(x) > len(y):
        x, y = y, x
    m, n = len(x), len(y)
    if n == 0:
        return 0.0
    # pad the m x n truncated costs with n - m dummy rows of constant c^p
    cost = np.full((n, n), c ** p)
    if m:
        cost[:m] = np.minimum(c, _base_distances(x, y)) ** p
    _, total = solve_assignment(cost)
    value = (total / n) ** (1.0 / p)
    return float(min(value, c))


def set_distance(X, Y, spec: DistanceSpec) -> float:
    if spec.kind == "hausdorff":
        return hausdorff(X, Y)
    if spec.kind == "wasserstein":
        return wasserstein(X, Y, spec.p)
    return ospa(X, Y, spec.p, spec.c)


def _cross_distances(A, B, spec, symmetric, n_jobs):
    n_a, n_b = len(A), len(B)
    out = np.zeros((n_a, n_b))

    def row(i):
        for j in range(i + 1 if symmetric else 0, n_b):
            try:
                out[i, j] = set_distance(A[i], B[j], spec)
            except PointPatternError as exc:
                raise PairwiseDistanceError(i, j, exc) from exc

    if n_jobs is None or n_jobs == 1:
        for i in range(n_a):
            row(i)
    else:
        workers = None if n_jobs == -1 else int(n_jobs)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, range(n_a)))
    if symmetric:
        out = np.triu(out, 1)
        out = out + out.T
    return out


def pairwise_dissimilarity(dataset, spec: DistanceSpec, n_jobs=None) -> DissimilarityMatrix:
    """All-pairs set distances between the patterns of ``dataset``.

    Each cell is computed independently, so ``n_jobs`` threads give the same
    matrix as a sequential run.
    """
    arrays, _ = check_patterns(dataset)
    values = _cross_distances(arrays, arrays, spec, True, n_jobs)
    return DissimilarityMatrix(values, spec)


class PairwiseSetDistance(TransformerMixin, BaseEstimator):
    """Map point patterns to their set distances from a fitted reference collection.

    ``fit`` stores the reference patterns; ``transform(X)`` returns the
    ``(len(X), n_reference)`` matrix of distances. ``fit_transform`` returns the
    symmetric all-pairs matrix of the training patterns.

    Parameters
    ----------
    metric : {'ospa', 'wasserstein', 'hausdorff'}
    p : float, default=2.0
        Order for Wasserstein and OSPA.
    c : float or None
        OSPA cut-off; required when ``metric='ospa'``.
    n_jobs : int or None
        Number of threads used to fill the matrix.
    """

    def __init__(self, metric="ospa", p=2.0, c=None, n_jobs=None):
        self.metric = metric
        self.p = p
        self.c = c
        self.n_jobs = n_jobs

    def _spec(self):
        return DistanceSpec(self.metric, self.p, self.c)

    def fit(self, X, y=None):
        self.spec_ = self._spec()
        self.reference_, self.n_features_in_ = check_patterns(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "reference_")
        arrays, _ = check_patterns(X, dim=self.n_features_in_)
        return _cross_distances(arrays, self.reference_, self.spec_, False, self.n_jobs)

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X)
        return _cross_distances(self.reference_, self.reference_, self.spec_, True, self.n_jobs)
