"""Clustering for point-pattern data.

Two routes are provided: affinity propagation over set distances (Hausdorff,
Wasserstein, OSPA) and EM-fitted mixtures of iid-cluster random finite sets.
"""
from .apcluster import ApConfig, SetAffinityPropagation, run_ap, similarity_from_dissimilarity
from .combsolve import solve_assignment, solve_uniform_transport
from .core import (
    ClusteringResult,
    PatternDataset,
    PointPattern,
    read_dataset,
    validate_dataset,
    write_dataset,
)
from .datagen import GenSpec, generate_dataset, preset, sample_poisson_rfs
from .emcluster import EmConfig, EmTrace, RFSMixture, fit_em, map_assign
from .evaluate import rand_index
from .rfsmodel import (
    Categorical,
    GaussianFeature,
    IidClusterComponent,
    IidClusterMixture,
    Poisson,
    log_iid_cluster_density,
    log_mixture_density,
    log_poisson_rfs_density,
    log_posterior_over_components,
)
from .setdist import (
    DissimilarityMatrix,
    DistanceSpec,
    PairwiseSetDistance,
    hausdorff,
    ospa,
    pairwise_dissimilarity,
    wasserstein,
)

__version__ = "0.1.0"
