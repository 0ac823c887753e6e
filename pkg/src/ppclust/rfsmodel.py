"""Log densities of iid-cluster random finite sets and their finite mixtures.

A component density at ``X = {x_1, ..., x_m}`` is

    p_c(m) * m! * U**m * prod_i p_f(x_i)

with cardinality distribution ``p_c``, Gaussian feature density ``p_f`` and
unit of hyper-volume ``U``. Everything here works in the log domain; ``log m!``
comes from ``gammaln``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln, logsumexp

from .exceptions import DimensionMismatchError, ParseError, ZeroDensityError

__all__ = [
    "Categorical",
    "Poisson",
    "CardinalityModel",
    "GaussianFeature",
    "IidClusterComponent",
    "IidClusterMixture",
    "regularize_covariance",
    "log_iid_cluster_density",
    "log_poisson_rfs_density",
    "log_mixture_density",
    "log_posterior_over_components",
    "component_log_densities",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
]

FORMAT_VERSION = 1
REG_SCALE = 1e-9


@dataclass(frozen=True, eq=False)
class Categorical:
    """Cardinality pmf ``probs[m] = Pr(|X| = m)`` on ``{0, ..., len(probs) - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        q = np.array(self.probs, dtype=float, copy=True).ravel()
        if q.size == 0 or np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
            raise ValueError("categorical probabilities must lie in [0, 1]")
        if abs(q.sum() - 1.0) > 1e-12:
            raise ValueError(f"categorical probabilities sum to {q.sum()!r}, not 1")
        q.setflags(write=False)
        object.__setattr__(self, "probs", q)

    @property
    def max_cardinality(self) -> int:
        return self.probs.size - 1

    def logpmf(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64)
        out = np.full(m.shape, -np.inf)
        ok = (m >= 0) & (m < self.probs.size)
        with np.errstate(divide="ignore"):
            out[ok] = np.log(self.probs[m[ok]])
        return out

    def __eq__(self, other):
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        rate = float(self.rate)
        if not np.isfinite(rate) or rate <= 0:
            raise ValueError(f"Poisson rate must be finite and > 0, got {self.rate!r}")
        object.__setattr__(self, "rate", rate)

    def logpmf(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        out = m * math.log(self.rate) - self.rate - gammaln(m + 1)
        return np.where(m >= 0, out, -np.inf)


CardinalityModel = Union[Categorical, Poisson]


def regularize_covariance(cov) -> np.ndarray:
    """Symmetrise and add ``1e-9 * trace / d`` to the diagonal.

    A zero-trace (all points identical) covariance gets ``1e-9`` instead.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    cov = 0.5 * (cov + cov.T)
    d = cov.shape[0]
    scale = np.trace(cov) / d
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    return cov + REG_SCALE * scale * np.eye(d)


class GaussianFeature:
    """Multivariate normal feature density, evaluated through a Cholesky factor."""

    __slots__ = ("mean", "covariance", "_chol", "_logdet")

    def __init__(self, mean, covariance):
        mean = np.array(mean, dtype=float, copy=True).ravel()
        cov = np.array(np.atleast_2d(covariance), dtype=float, copy=True)
        d = mean.size
        if cov.shape != (d, d):
            raise DimensionMismatchError(f"covariance shape {cov.shape} does not match mean of size {d}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("Gaussian parameters must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0):
            raise ValueError("covariance must be symmetric")
        try:
            chol = cho_factor(cov, lower=True)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite") from None
        mean.setflags(write=False)
        cov.setflags(write=False)
        self.mean = mean
        self.covariance = cov
        self._chol = chol
        self._logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))

    @classmethod
    def regularized(cls, mean, covariance) -> "GaussianFeature":
        return cls(mean, regularize_covariance(covariance))

    @property
    def dim(self) -> int:
        return self.mean.size

    def logpdf(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 0:
            return np.zeros(0)
        if x.shape[1] != self.dim:
            raise DimensionMismatchError(f"points have dimension {x.shape[1]}, density has {self.dim}")
        diff = x - self.mean
        sol = cho_solve(self._chol, diff.T)
        maha = np.einsum("ij,ji->i", diff, sol)
        return -0.5 * (self.dim * math.log(2 * math.pi) + self._logdet + maha)

    def __eq__(self, other):
        return (isinstance(other, GaussianFeature)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.covariance, other.covariance))

    def __repr__(self):
        return f"GaussianFeature(mean={self.mean.tolist()}, covariance={self.covariance.tolist()})"


@dataclass(frozen=True)
class IidClusterComponent:
    cardinality: CardinalityModel
    feature: GaussianFeature


@dataclass(frozen=True, eq=False)
class IidClusterMixture:
    """Weights, components and the unit of hyper-volume of an iid-cluster mixture."""

    weights: np.ndarray
    components: tuple
    unit_volume: float = 1.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        comps = tuple(self.components)
        if len(comps) < 1 or w.size != len(comps):
            raise ValueError("need one weight per component and at least one component")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be a probability vector, got {w.tolist()}")
        dims = {c.feature.dim for c in comps}
        if len(dims) != 1:
            raise DimensionMismatchError("all components must share a feature dimension")
        U = float(self.unit_volume)
        if not np.isfinite(U) or U <= 0:
            raise ValueError("unit_volume must be finite and > 0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "unit_volume", U)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].feature.dim

    def __eq__(self, other):
        return (isinstance(other, IidClusterMixture)
                and np.array_equal(self.weights, other.weights)
                and self.components == other.components
                and self.unit_volume == other.unit_volume)


def _points(X, dim):
    x = np.asarray(getattr(X, "points", X), dtype=float)
    if x.size == 0:
        return x.reshape(0, dim)
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise DimensionMismatchError(f"pattern has dimension {x.shape[1]}, model has {dim}")
    return x


def log_iid_cluster_density(X, comp: IidClusterComponent, U=1.0) -> float:
    """``log p_c(m) + log m! + m log U + sum log N(x)``; ``-inf`` for impossible cardinalities."""
    x = _points(X, comp.feature.dim)
    m = x.shape[0]
    log_card = float(comp.cardinality.logpmf(m))
    if log_card == -np.inf:
        return -np.inf
    return log_card + float(gammaln(m + 1)) + m * math.log(U) + float(comp.feature.logpdf(x).sum())


def log_poisson_rfs_density(X, rate, feature: GaussianFeature, U=1.0) -> float:
    """``m log(rate) - rate + m log U + sum log N(x)`` for a Poisson RFS."""
    rate = Poisson(rate).rate
    x = _points(X, feature.dim)
    m = x.shape[0]
    return m * math.log(rate) - rate + m * math.log(U) + float(feature.logpdf(x).sum())


def component_log_densities(X, model: IidClusterMixture) -> np.ndarray:
    """Length-K vector of ``log w_k + log p(X | component k)``."""
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    comp = np.array([log_iid_cluster_density(X, c, model.unit_volume) for c in model.components])
    out = log_w + comp
    out[np.isnan(out)] = -np.inf
    return out


def log_mixture_density(X, model: IidClusterMixture) -> float:
    terms = component_log_densities(X, model)
    if np.all(terms == -np.inf):
        return -np.inf
    return float(logsumexp(terms))


def log_posterior_over_components(X, model: IidClusterMixture) -> np.ndarray:
    """Log of ``p(k | X)`` for every component; raises if ``X`` has zero density."""
    terms = component_log_densities(X, model)
    if np.all(terms == -np.inf):
        raise ZeroDensityError("pattern has zero density under every component")
    return terms - logsumexp(terms)


# -- serialization --------------------------------------------------------

def model_to_dict(model: IidClusterMixture) -> dict:
    comps = []
    for c in model.components:
        if isinstance(c.cardinality, Poisson):
            card = {"family": "poisson", "rate": c.cardinality.rate}
        else:
            card = {"family": "categorical", "probs": c.cardinality.probs.tolist()}
        comps.append({"cardinality": card,
                      "mean": c.feature.mean.tolist(),
                      "covariance": c.feature.covariance.tolist()})
    return {"format_version": FORMAT_VERSION,
            "unit_volume": model.unit_volume,
            "weights": model.weights.tolist(),
            "components": comps}


def model_from_dict(data: dict) -> IidClusterMixture:
    if data.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format_version {data.get('format_version')!r}")
    try:
        comps = []
        for c in data["components"]:
            card = c["cardinality"]
            if card["family"] == "poisson":
                cm = Poisson(card["rate"])
            elif card["family"] == "categorical":
                cm = Categorical(card["probs"])
            else:
                raise ParseError(f"unknown cardinality family {card['family']!r}")
            comps.append(IidClusterComponent(cm, GaussianFeature(c["mean"], c["covariance"])))
        return IidClusterMixture(data["weights"], tuple(comps), data.get("unit_volume", 1.0))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model: {exc!r}") from None


def save_model(model: IidClusterMixture, path, extra: dict | None = None) -> None:
    data = model_to_dict(model)
    if extra:
        data.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_model(path) -> IidClusterMixture:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", exc.lineno) from None
    return model_from_dict(data)
