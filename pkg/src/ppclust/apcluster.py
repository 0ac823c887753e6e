"""Affinity propagation over set-distance dissimilarities."""
from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .core import ClusteringResult
from .exceptions import AllInfiniteError, NoExemplarError
from .setdist import DissimilarityMatrix, DistanceSpec, _cross_distances, pairwise_dissimilarity
from .validation import check_patterns, check_square_matrix

__all__ = [
    "ApConfig",
    "similarity_from_dissimilarity",
    "run_ap",
    "net_similarity",
    "SetAffinityPropagation",
]


@dataclass(frozen=True)
class ApConfig:
    preference: float | str = "median"
    damping: float = 0.9
    max_iterations: int = 1000
    convergence_window: int = 50

    def __post_init__(self):
        pref = self.preference
        if isinstance(pref, str):
            if pref != "median":
                raise ValueError(f"preference must be a number or 'median', got {pref!r}")
        elif not isinstance(pref, numbers.Real) or not np.isfinite(pref):
            raise ValueError(f"preference must be finite, got {pref!r}")
        if not 0.5 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0.5, 1), got {self.damping}")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if int(self.convergence_window) < 1:
            raise ValueError("convergence_window must be >= 1")


def similarity_from_dissimilarity(D, preference="median") -> np.ndarray:
    """Negated dissimilarities with the preference on the diagonal.

    Infinite dissimilarities become ``10 * (s_min - 1)`` where ``s_min`` is the
    smallest finite off-diagonal similarity, i.e. strictly worse than every
    finite pair. ``preference='median'`` uses the median finite off-diagonal
    similarity.
    """
    values = D.values if isinstance(D, DissimilarityMatrix) else check_square_matrix(D)
    n = values.shape[0]
    S = -np.asarray(values, dtype=float)
    off = ~np.eye(n, dtype=bool)
    finite = off & np.isfinite(S)
    if n > 1 and not finite.any():
        raise AllInfiniteError("no finite off-diagonal dissimilarity to build similarities from")
    if finite.any():
        floor = (S[finite].min() - 1.0) * 10.0
        S[off & ~np.isfinite(S)] = floor
    if isinstance(preference, str):
        if preference != "median":
            raise ValueError(f"preference must be a number or 'median', got {preference!r}")
        pref = float(np.median(S[finite])) if finite.any() else 0.0
    else:
        pref = float(preference)
    np.fill_diagonal(S, pref)
    return S


def net_similarity(S, exemplars, labels) -> float:
    """Sum of point-to-exemplar similarities plus the exemplars' preferences."""
    S = np.asarray(S)
    exemplars = np.asarray(exemplars)
    return float(S[np.arange(len(labels)), exemplars[labels]].sum())


def _assign(S, exemplars):
    # ties resolve to the lowest exemplar index because exemplars are sorted
    labels = np.argmax(S[:, exemplars], axis=1)
    labels[exemplars] = np.arange(len(exemplars))
    return labels


def _tie_breaking_noise(S, seed=0):
    # sub-ulp jitter so exactly duplicated patterns do not oscillate
    rng = np.random.default_rng(seed)
    tiny = np.finfo(float).tiny
    eps = np.finfo(float).eps
    return (eps * np.abs(S) + tiny * 100) * rng.standard_normal(S.shape)


def run_ap(S, config: ApConfig | None = None) -> ClusteringResult:
    """Run damped responsibility/availability message passing on similarities ``S``.

    Stops once the exemplar set has been non-empty and unchanged for
    ``convergence_window`` sweeps, or after ``max_iterations``. If no point
    ends up an exemplar, the point with the largest column sum of ``S`` is
    used as the sole exemplar.
    """
    config = config or ApConfig()
    S = check_square_matrix(S, "similarity matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("similarities must be finite; map infinite dissimilarities first")
    n = S.shape[0]
    if n == 1:
        return ClusteringResult(np.zeros(1, dtype=np.int64), exemplars=np.zeros(1, dtype=np.int64),
                                diagnostics={"iterations": 0, "converged": True,
                                             "net_similarity": float(S[0, 0]), "fallback": False})

    lam = config.damping
    Sn = S + _tie_breaking_noise(S)
    R = np.zeros((n, n))
    A = np.zeros((n, n))
    rows = np.arange(n)
    last = None
    stable = 0
    converged = False
    it = 0
    for it in range(1, int(config.max_iterations) + 1):
        AS = A + Sn
        first = np.argmax(AS, axis=1)
        best = AS[rows, first]
        AS[rows, first] = -np.inf
        second = AS.max(axis=1)
        R_new = Sn - best[:, None]
        R_new[rows, first] = Sn[rows, first] - second
        R = lam * R + (1.0 - lam) * R_new

        Rp = np.maximum(R, 0.0)
        Rp[rows, rows] = R[rows, rows]
        col = Rp.sum(axis=0)
        A_new = col[None, :] - Rp
        diag = A_new[rows, rows].copy()
        A_new = np.minimum(A_new, 0.0)
        A_new[rows, rows] = diag
        A = lam * A + (1.0 - lam) * A_new

        current = np.flatnonzero(np.diag(R) + np.diag(A) > 0)
        if last is not None and np.array_equal(current, last):
            stable += 1
        else:
            stable = 1
        last = current
        if current.size and stable >= config.convergence_window:
            converged = True
            break

    exemplars = last
    fallback = False
    if exemplars is None or exemplars.size == 0:
        exemplars = np.array([int(np.argmax(S.sum(axis=0)))])
        fallback = True
    if exemplars.size == 0:  # pragma: no cover - unreachable for finite S
        raise NoExemplarError("affinity propagation produced no exemplar")
    labels = _assign(S, exemplars)
    return ClusteringResult(
        labels,
        exemplars=exemplars,
        diagnostics={
            "iterations": it,
            "converged": converged,
            "net_similarity": net_similarity(S, exemplars, labels),
            "fallback": fallback,
        },
    )


class SetAffinityPropagation(ClusterMixin, BaseEstimator):
    """Affinity propagation clustering of point patterns.

    Parameters
    ----------
    metric : {'ospa', 'wasserstein', 'hausdorff', 'precomputed'}, default='ospa'
        Set distance used as dissimilarity. With ``'precomputed'``, ``fit``
        expects a square dissimilarity matrix instead of patterns.
    p : float, default=2.0
        Order of the Wasserstein / OSPA distance.
    c : float or None
        OSPA cut-off. Required for ``metric='ospa'``.
    preference : float or 'median', default='median'
    damping : float, default=0.9
    max_iter : int, default=1000
    convergence_iter : int, default=50
        Number of sweeps with an unchanged exemplar set that stops the run.
    n_jobs : int or None
        Threads used to compute the dissimilarity matrix.

    Attributes
    ----------
    labels_ : ndarray of shape (n_patterns,)
    cluster_centers_indices_ : ndarray
        Indices of the exemplar patterns.
    dissimilarity_matrix_ : ndarray
    affinity_matrix_ : ndarray
        Similarities after infinity mapping, preference on the diagonal.
    n_iter_ : int
    result_ : ClusteringResult
    """

    def __init__(self, metric="ospa", p=2.0, c=None, preference="median", damping=0.9,
                 max_iter=1000, convergence_iter=50, n_jobs=None):
        self.metric = metric
        self.p = p
        self.c = c
        self.preference = preference
        self.damping = damping
        self.max_iter = max_iter
        self.convergence_iter = convergence_iter
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        config = ApConfig(self.preference, self.damping, self.max_iter, self.convergence_iter)
        if self.metric == "precomputed":
            D = X.values if isinstance(X, DissimilarityMatrix) else check_square_matrix(X)
            self._train = None
        else:
            self.spec_ = DistanceSpec(self.metric, self.p, self.c)
            arrays, self.n_features_in_ = check_patterns(X)
            D = pairwise_dissimilarity(arrays, self.spec_, n_jobs=self.n_jobs).values
            self._train = arrays
        self.dissimilarity_matrix_ = np.asarray(D)
        self.affinity_matrix_ = similarity_from_dissimilarity(D, self.preference)
        self.result_ = run_ap(self.affinity_matrix_, config)
        self.labels_ = np.asarray(self.result_.hard_labels)
        self.cluster_centers_indices_ = np.asarray(self.result_.exemplars)
        self.n_iter_ = self.result_.diagnostics["iterations"]
        return self

    def predict(self, X):
        """Label new patterns by their nearest exemplar under the fitted set distance."""
        check_is_fitted(self, "labels_")
        if self._train is None:
            raise ValueError("predict is unavailable with metric='precomputed'")
        arrays, _ = check_patterns(X, dim=self.n_features_in_)
        centers = [self._train[k] for k in self.cluster_centers_indices_]
        D = _cross_distances(arrays, centers, self.spec_, False, self.n_jobs)
        return np.argmin(D, axis=1)
