"""Synthetic point-pattern datasets drawn from mixtures of Poisson RFSs.

Each component is a Poisson RFS with a Gaussian feature density; every
sampled pattern is labelled with the component that produced it.

Presets (3 components, 2-D, identity covariances):

``separated``
    Means roughly 8 standard deviations apart, rates 8, 12, 16.
``card-only``
    Identical feature densities at the origin, rates 5, 15, 40; only the
    cardinality distinguishes the clusters.
``overlap``
    Means about 1.5 standard deviations apart and rates 8, 10, 12.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import PatternDataset, PointPattern
from .rfsmodel import GaussianFeature

__all__ = [
    "GenComponent",
    "GenSpec",
    "PRESETS",
    "preset",
    "sample_poisson_rfs",
    "generate_dataset",
    "load_gen_spec",
]


@dataclass(frozen=True, eq=False)
class GenComponent:
    rate: float
    mean: tuple
    covariance: tuple

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ValueError(f"rate must be finite and > 0, got {self.rate!r}")
        object.__setattr__(self, "mean", tuple(float(v) for v in np.ravel(self.mean)))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "covariance", tuple(tuple(float(v) for v in row) for row in cov))
        GaussianFeature(self.mean, self.covariance)  # validates shape and definiteness

    @property
    def feature(self) -> GaussianFeature:
        return GaussianFeature(self.mean, self.covariance)


@dataclass(frozen=True, eq=False)
class GenSpec:
    components: tuple
    patterns_per_component: int = 100
    rng_seed: int | None = 0

    def __post_init__(self):
        comps = tuple(c if isinstance(c, GenComponent) else GenComponent(**c)
                      for c in self.components)
        if not comps:
            raise ValueError("a generator spec needs at least one component")
        if len({len(c.mean) for c in comps}) != 1:
            raise ValueError("all components must share a feature dimension")
        if int(self.patterns_per_component) < 1:
            raise ValueError("patterns_per_component must be >= 1")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components[0].mean)

    def to_dict(self) -> dict:
        return {
            "components": [{"rate": c.rate, "mean": list(c.mean),
                            "covariance": [list(r) for r in c.covariance]}
                           for c in self.components],
            "patterns_per_component": int(self.patterns_per_component),
            "rng_seed": self.rng_seed,
        }


_EYE2 = ((1.0, 0.0), (0.0, 1.0))

PRESETS = {
    "separated": ((8.0, (0.0, 0.0)), (12.0, (8.0, 0.0)), (16.0, (4.0, 7.0))),
    "card-only": ((5.0, (0.0, 0.0)), (15.0, (0.0, 0.0)), (40.0, (0.0, 0.0))),
    "overlap": ((8.0, (0.0, 0.0)), (10.0, (1.5, 0.0)), (12.0, (0.75, 1.3))),
}


def preset(name: str, rng_seed=0, patterns_per_component=100) -> GenSpec:
    try:
        entries = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    comps = tuple(GenComponent(rate, mean, _EYE2) for rate, mean in entries)
    return GenSpec(comps, patterns_per_component, rng_seed)


def load_gen_spec(path, rng_seed=None) -> GenSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    seed = data.get("rng_seed", 0) if rng_seed is None else rng_seed
    return GenSpec(tuple(GenComponent(**c) for c in data["components"]),
                   data.get("patterns_per_component", 100), seed)


def sample_poisson_rfs(rate, feature: GaussianFeature, rng) -> PointPattern:
    """Draw ``m ~ Poisson(rate)`` points iid from ``feature``."""
    if not np.isfinite(rate) or rate <= 0:
        raise ValueError(f"rate must be finite and > 0, got {rate!r}")
    m = int(rng.poisson(rate))
    chol = np.linalg.cholesky(feature.covariance)
    z = rng.standard_normal((m, feature.dim))
    return PointPattern(feature.mean + z @ chol.T, dim=feature.dim)


def generate_dataset(spec: GenSpec) -> PatternDataset:
    """Sample ``patterns_per_component`` labelled patterns per component, then shuffle."""
    rng = np.random.default_rng(spec.rng_seed)
    patterns, labels = [], []
    for k, comp in enumerate(spec.components):
        feature = comp.feature
        for _ in range(int(spec.patterns_per_component)):
            patterns.append(sample_poisson_rfs(comp.rate, feature, rng))
            labels.append(str(k))
    order = rng.permutation(len(patterns))
    ids = tuple(f"p{i:05d}" for i in range(len(patterns)))
    return PatternDataset.from_patterns(
        [patterns[i] for i in order], labels=[labels[i] for i in order], ids=ids, dim=spec.dim)
