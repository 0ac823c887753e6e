"""EM fitting of iid-cluster RFS mixtures and MAP cluster assignment.

Each EM iteration computes component posteriors for every pattern, then
updates weights, cardinality distributions (categorical or Poisson) and the
Gaussian feature densities from those posteriors. Posteriors are formed in the
log domain so patterns with hundreds of points do not underflow.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp
from sklearn.base import BaseEstimator, ClusterMixin, DensityMixin
from sklearn.utils.validation import check_is_fitted

from .core import ClusteringResult
from .exceptions import (
    DegenerateComponentError,
    DimensionMismatchError,
    InitFailureError,
    ZeroDensityError,
)
from .rfsmodel import (
    Categorical,
    GaussianFeature,
    IidClusterComponent,
    IidClusterMixture,
    Poisson,
)
from .validation import check_patterns

__all__ = [
    "EmConfig",
    "EmTrace",
    "e_step",
    "m_step_weights",
    "m_step_cardinality_categorical",
    "m_step_cardinality_poisson",
    "m_step_gaussian",
    "initialize_model",
    "dataset_log_likelihood",
    "fit_em",
    "map_assign",
    "RFSMixture",
]

CARDINALITY_FLOOR = 1e-12
RATE_FLOOR = 1e-6
FAMILIES = ("poisson", "categorical")


@dataclass(frozen=True)
class EmConfig:
    """Settings for :func:`fit_em`.

    ``scatter_weighting='cardinality'`` multiplies each pattern's scatter by its
    cardinality in the covariance update; the default ``'point'`` is the
    standard weighted-scatter maximiser.
    """

    n_components: int = 2
    n_iterations: int = 100
    cardinality_family: str = "poisson"
    init: str = "kmeans++"
    min_weight: float = 0.0
    rng_seed: int | None = 0
    unit_volume: float = 1.0
    tol: float = 1e-8
    patience: int = 3
    max_cardinality: int | None = None
    scatter_weighting: str = "point"
    keep_snapshots: bool = False

    def __post_init__(self):
        if not isinstance(self.n_components, numbers.Integral) or self.n_components < 1:
            raise ValueError(f"n_components must be a positive integer, got {self.n_components!r}")
        if not isinstance(self.n_iterations, numbers.Integral) or self.n_iterations < 1:
            raise ValueError(f"n_iterations must be a positive integer, got {self.n_iterations!r}")
        if self.cardinality_family not in FAMILIES:
            raise ValueError(f"cardinality_family must be one of {FAMILIES}")
        if self.init not in ("kmeans++", "random"):
            raise ValueError("init must be 'kmeans++' or 'random'")
        if not 0.0 <= self.min_weight < 1.0 / self.n_components:
            raise ValueError("min_weight must lie in [0, 1/n_components)")
        if self.scatter_weighting not in ("point", "cardinality"):
            raise ValueError("scatter_weighting must be 'point' or 'cardinality'")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class EmTrace:
    """Dataset log-likelihood after every iteration (``log_likelihood[i]`` is for iteration ``i + 1``)."""

    initial_log_likelihood: float
    log_likelihood: tuple
    converged: bool = False
    snapshots: tuple | None = None

    @property
    def n_iterations(self) -> int:
        return len(self.log_likelihood)


@dataclass
class _Prepared:
    arrays: list
    dim: int
    card: np.ndarray
    points: np.ndarray
    owner: np.ndarray
    sums: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.arrays)
        self.sums = np.column_stack(
            [np.bincount(self.owner, weights=self.points[:, j], minlength=n)
             for j in range(self.dim)]).reshape(n, self.dim)

    @property
    def n(self):
        return len(self.arrays)


def _prepare(dataset, dim=None) -> _Prepared:
    if isinstance(dataset, _Prepared):
        return dataset
    arrays, dim = check_patterns(dataset, dim=dim)
    card = np.array([a.shape[0] for a in arrays], dtype=np.int64)
    points = np.concatenate(arrays, axis=0) if card.sum() else np.zeros((0, dim))
    owner = np.repeat(np.arange(len(arrays)), card)
    return _Prepared(arrays, dim, card, points, owner)


def _log_joint(data: _Prepared, model: IidClusterMixture) -> np.ndarray:
    """``(N, K)`` matrix of ``log w_k + log p(X_n | component k)``."""
    if model.dim != data.dim:
        raise DimensionMismatchError(f"data dimension {data.dim}, model dimension {model.dim}")
    n, K = data.n, model.n_components
    out = np.empty((n, K))
    log_fact = gammaln(data.card + 1.0)
    log_u = np.log(model.unit_volume) * data.card
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    for k, comp in enumerate(model.components):
        feat = np.bincount(data.owner, weights=comp.feature.logpdf(data.points), minlength=n)
        log_card = comp.cardinality.logpmf(data.card)
        out[:, k] = log_w[k] + log_card + log_fact + log_u + feat
    return out


def _posteriors(log_joint):
    dead = np.all(np.isneginf(log_joint), axis=1)
    if dead.any():
        n = int(np.flatnonzero(dead)[0])
        raise ZeroDensityError("pattern has zero density under every component", index=n)
    norm = logsumexp(log_joint, axis=1)
    resp = np.exp(log_joint - norm[:, None])
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, float(norm.sum())


def e_step(dataset, model: IidClusterMixture) -> np.ndarray:
    """Posterior component probabilities, one row per pattern."""
    resp, _ = _posteriors(_log_joint(_prepare(dataset, model.dim), model))
    return resp


def dataset_log_likelihood(dataset, model: IidClusterMixture) -> float:
    """``sum_n log p(X_n | model)``; ``-inf`` if any pattern is impossible."""
    lj = _log_joint(_prepare(dataset, model.dim), model)
    per = np.full(lj.shape[0], -np.inf)
    alive = ~np.all(np.isneginf(lj), axis=1)
    per[alive] = logsumexp(lj[alive], axis=1)
    return float(per.sum())


def m_step_weights(resp, min_weight=0.0) -> np.ndarray:
    """Mean responsibility per component; weights below ``min_weight`` are raised to it."""
    resp = np.asarray(resp, dtype=float)
    w = resp.mean(axis=0)
    w = w / w.sum()
    if min_weight > 0:
        K = w.size
        if min_weight * K >= 1:
            raise ValueError("min_weight must be < 1/K")
        floored = np.zeros(K, dtype=bool)
        while True:
            newly = (w < min_weight) & ~floored
            if not newly.any():
                break
            floored |= newly
            free = ~floored
            rest = w[free].sum()
            w[floored] = min_weight
            w[free] *= (1.0 - min_weight * floored.sum()) / rest
    return w


def _column(resp, k):
    return np.asarray(resp, dtype=float)[:, k]


def m_step_cardinality_categorical(dataset, resp, k, max_cardinality=None, floor=0.0) -> Categorical:
    """Responsibility-weighted cardinality histogram on ``{0, ..., max_cardinality}``.

    ``floor > 0`` lifts empty bins to ``floor`` before renormalising.
    """
    data = _prepare(dataset)
    r = _column(resp, k)
    n_card = int(data.card.max()) if max_cardinality is None else int(max_cardinality)
    if data.card.max() > n_card:
        raise ValueError(f"a pattern has cardinality {data.card.max()} > max_cardinality {n_card}")
    total = r.sum()
    if not total > 0:
        raise DegenerateComponentError(k, reason="all responsibilities are zero")
    q = np.bincount(data.card, weights=r, minlength=n_card + 1) / total
    if floor > 0:
        q = np.maximum(q, floor)
    q = q / q.sum()
    return Categorical(q)


def m_step_cardinality_poisson(dataset, resp, k) -> Poisson:
    """Responsibility-weighted mean cardinality, floored at ``1e-6``."""
    data = _prepare(dataset)
    r = _column(resp, k)
    total = r.sum()
    if not total > 0:
        raise DegenerateComponentError(k, reason="all responsibilities are zero")
    return Poisson(max(float(r @ data.card) / total, RATE_FLOOR))


def m_step_gaussian(dataset, resp, k, scatter_weighting="point") -> GaussianFeature:
    """Weighted pooled mean and scatter of the points, each point weighted by its pattern's responsibility."""
    data = _prepare(dataset)
    r = _column(resp, k)
    mass = float(r @ data.card)
    if not mass > 0:
        raise DegenerateComponentError(k, reason="zero effective point mass")
    mean = (r @ data.sums) / mass
    point_w = r[data.owner]
    if scatter_weighting == "cardinality":
        point_w = point_w * data.card[data.owner]
    diff = data.points - mean
    cov = (diff * point_w[:, None]).T @ diff / mass
    return GaussianFeature.regularized(mean, cov)


def _kmeanspp(candidates, K, rng, init):
    n = candidates.shape[0]
    if init == "random":
        return candidates[np.sort(rng.choice(n, size=K, replace=False))]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((candidates - candidates[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((candidates - candidates[nxt]) ** 2, axis=1))
    return candidates[chosen]


def initialize_model(dataset, config: EmConfig) -> IidClusterMixture:
    """Seeded starting point for EM.

    Means are k-means++ seeds over per-pattern feature means (sorted first, so
    the result does not depend on dataset order); covariances are the pooled
    point covariance; categorical cardinalities start at the add-one smoothed
    histogram and Poisson rates at the mean cardinality jittered by up to 10%.
    """
    data = _prepare(dataset)
    K = config.n_components
    rng = np.random.default_rng(config.rng_seed)
    nonempty = data.card > 0
    if nonempty.sum() < K:
        raise InitFailureError(
            f"need at least {K} non-empty patterns to seed {K} components, got {int(nonempty.sum())}")
    candidates = data.sums[nonempty] / data.card[nonempty, None]
    candidates = candidates[np.lexsort(candidates.T[::-1])]
    means = _kmeanspp(candidates, K, rng, config.init)
    pooled = data.points - data.points.mean(axis=0)
    cov = pooled.T @ pooled / data.points.shape[0]
    n_card = int(data.card.max()) if config.max_cardinality is None else int(config.max_cardinality)
    comps = []
    if config.cardinality_family == "categorical":
        hist = np.bincount(data.card, minlength=n_card + 1).astype(float) + 1.0
        cards = [Categorical(hist / hist.sum()) for _ in range(K)]
    else:
        base = float(data.card.mean())
        jitter = rng.uniform(-0.1, 0.1, size=K)
        cards = [Poisson(max(base * (1.0 + j), RATE_FLOOR)) for j in jitter]
    for k in range(K):
        comps.append(IidClusterComponent(cards[k], GaussianFeature.regularized(means[k], cov)))
    return IidClusterMixture(np.full(K, 1.0 / K), tuple(comps), config.unit_volume)


def _m_step(data, resp, config, n_card, iteration):
    weights = m_step_weights(resp, config.min_weight)
    comps = []
    for k in range(resp.shape[1]):
        try:
            if config.cardinality_family == "categorical":
                card = m_step_cardinality_categorical(data, resp, k, n_card, CARDINALITY_FLOOR)
            else:
                card = m_step_cardinality_poisson(data, resp, k)
            feat = m_step_gaussian(data, resp, k, config.scatter_weighting)
        except DegenerateComponentError as exc:
            raise DegenerateComponentError(k, iteration, str(exc).split(": ", 1)[-1]) from exc
        comps.append(IidClusterComponent(card, feat))
    return IidClusterMixture(weights, tuple(comps), config.unit_volume)


def fit_em(dataset, config: EmConfig | None = None, init_model: IidClusterMixture | None = None):
    """Fit an iid-cluster mixture by EM; returns ``(model, trace)``.

    Runs ``config.n_iterations`` iterations, stopping early once the
    log-likelihood has improved by less than ``config.tol`` for
    ``config.patience`` consecutive iterations.
    """
    config = config or EmConfig()
    data = _prepare(dataset)
    if config.n_components > data.n:
        raise ValueError(f"n_components={config.n_components} exceeds the {data.n} patterns")
    n_card = int(data.card.max()) if config.max_cardinality is None else int(config.max_cardinality)
    if data.card.max() > n_card:
        raise ValueError("max_cardinality is below the largest training cardinality")
    model = init_model if init_model is not None else initialize_model(data, config)
    if model.n_components != config.n_components:
        raise ValueError("initial model has the wrong number of components")
    try:
        resp, ll = _posteriors(_log_joint(data, model))
    except ZeroDensityError as exc:
        raise InitFailureError(f"initial model gives zero density: {exc}") from exc
    initial = ll
    history, snapshots = [], []
    flat = 0
    converged = False
    for it in range(1, config.n_iterations + 1):
        model = _m_step(data, resp, config, n_card, it)
        resp, new_ll = _posteriors(_log_joint(data, model))
        history.append(new_ll)
        if config.keep_snapshots:
            snapshots.append(model)
        flat = flat + 1 if new_ll - ll < config.tol else 0
        ll = new_ll
        if flat >= config.patience:
            converged = True
            break
    trace = EmTrace(initial, tuple(history), converged,
                    tuple(snapshots) if config.keep_snapshots else None)
    return model, trace


def map_assign(dataset, model: IidClusterMixture) -> ClusteringResult:
    """Label every pattern with its most probable component (ties go to the lowest index)."""
    data = _prepare(dataset, model.dim)
    resp, ll = _posteriors(_log_joint(data, model))
    labels = np.argmax(resp, axis=1)
    return ClusteringResult(labels, memberships=resp, model=model,
                            diagnostics={"log_likelihood": ll})


class RFSMixture(ClusterMixin, DensityMixin, BaseEstimator):
    """Model-based clustering of point patterns with a mixture of iid-cluster RFSs.

    Parameters
    ----------
    n_components : int, default=2
    n_iter : int, default=100
        Maximum number of EM iterations.
    cardinality : {'poisson', 'categorical'}, default='poisson'
    init : {'kmeans++', 'random'} or IidClusterMixture, default='kmeans++'
    min_weight : float, default=0.0
    random_state : int or None, default=0
    unit_volume : float, default=1.0
    tol : float, default=1e-8
    max_cardinality : int or None
        Support size of the categorical cardinality; defaults to the largest
        training cardinality.
    scatter_weighting : {'point', 'cardinality'}, default='point'

    Attributes
    ----------
    model_ : IidClusterMixture
    trace_ : EmTrace
    labels_ : ndarray of shape (n_patterns,)
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, n_components=2, n_iter=100, cardinality="poisson", init="kmeans++",
                 min_weight=0.0, random_state=0, unit_volume=1.0, tol=1e-8,
                 max_cardinality=None, scatter_weighting="point"):
        self.n_components = n_components
        self.n_iter = n_iter
        self.cardinality = cardinality
        self.init = init
        self.min_weight = min_weight
        self.random_state = random_state
        self.unit_volume = unit_volume
        self.tol = tol
        self.max_cardinality = max_cardinality
        self.scatter_weighting = scatter_weighting

    def _config(self):
        init_model = self.init if isinstance(self.init, IidClusterMixture) else None
        return EmConfig(
            n_components=self.n_components,
            n_iterations=self.n_iter,
            cardinality_family=self.cardinality,
            init="kmeans++" if init_model is not None else self.init,
            min_weight=self.min_weight,
            rng_seed=self.random_state,
            unit_volume=self.unit_volume,
            tol=self.tol,
            max_cardinality=self.max_cardinality,
            scatter_weighting=self.scatter_weighting,
        ), init_model

    def fit(self, X, y=None):
        config, init_model = self._config()
        data = _prepare(X)
        self.model_, self.trace_ = fit_em(data, config, init_model)
        self.n_features_in_ = data.dim
        self.n_iter_ = self.trace_.n_iterations
        self.converged_ = self.trace_.converged
        self.labels_ = map_assign(data, self.model_).hard_labels.copy()
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return e_step(X, self.model_)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score_samples(self, X):
        """Log mixture density of each pattern."""
        check_is_fitted(self, "model_")
        lj = _log_joint(_prepare(X, self.model_.dim), self.model_)
        out = np.full(lj.shape[0], -np.inf)
        alive = ~np.all(np.isneginf(lj), axis=1)
        out[alive] = logsumexp(lj[alive], axis=1)
        return out

    def score(self, X, y=None):
        """Mean log mixture density per pattern."""
        return float(np.mean(self.score_samples(X)))
