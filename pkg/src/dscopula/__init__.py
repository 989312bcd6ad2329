"""Bayesian nonparametric bivariate copula estimation with doubly
stochastic matrices.

The copula family is parameterized by an m x m doubly stochastic matrix
(a point of the Birkhoff polytope) paired with a partition-of-unity basis.
The package provides the polytope geometry, indicator and Bernstein bases,
the Jeffreys and uniform priors, a Metropolis-within-Gibbs sampler with
interchangeable compiled and pure-Python kernels, four copula estimators,
and a Monte Carlo experiment harness with a CLI front end.
"""

from .copula_basis import (
    CopulaGrid,
    PartitionBasis,
    approximation_error,
    cdf_outer,
    copula_cdf,
    copula_pdf,
    discretize,
    pdf_normalization,
)
from .estimators import (
    ESTIMATE_KINDS,
    CopulaEstimate,
    PseudoSample,
    bayes_estimate,
    bin_counts,
    deheuvels_estimate,
    kernel_estimate,
    mle_estimate,
    pseudo_observations,
)
from .exceptions import (
    BoundaryError,
    ConvergenceError,
    CSVFormatError,
    DecompositionError,
    DegenerateSampleError,
    InvalidMarginError,
    NotACopulaError,
    PolytopeError,
)
from .experiments import (
    DEFAULT_RHO_GRID,
    STUDY_ESTIMATORS,
    WORKERS_ENV_VAR,
    BallProbability,
    ExperimentConfig,
    MiseReport,
    RadiusDensity,
    ball_probability,
    batch_means_stderr,
    derive_seed,
    fisher_sqrt_integral_1d,
    fisher_sqrt_integral_2d,
    fisher_sqrt_slice_integrand,
    radius_density,
    run_mise_study,
)
from .numerics import (
    QuadratureSpec,
    binomial_mad,
    binomial_mad_sup,
    l2_sq_gap,
    sup_norm_gap,
    tanh_sinh,
)
from .polytope import (
    AlphaCoordinates,
    BirkhoffDecomposition,
    DoublyStochasticMatrix,
    basis_vectors,
    birkhoff_decompose,
    from_alpha,
    inscribed_ball_radius,
    radius,
    random_interior,
    to_alpha,
)
from .priors import (
    PRIOR_KINDS,
    PriorSpec,
    fisher_info_det,
    log_density,
    log_fisher_info_det,
)
from .refmodels import (
    FAMILIES,
    MARGIN_KINDS,
    MarginPair,
    ReferenceCopula,
    bvn_cdf,
    write_sample_csv,
)
from .sampler import (
    KERNEL_ENV_VAR,
    MODES,
    ChainConfig,
    ChainResult,
    available_kernels,
    gamma_interval,
    run_chain,
    select_kernel,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaCoordinates",
    "BallProbability",
    "BirkhoffDecomposition",
    "BoundaryError",
    "CSVFormatError",
    "ChainConfig",
    "ChainResult",
    "ConvergenceError",
    "CopulaEstimate",
    "CopulaGrid",
    "DEFAULT_RHO_GRID",
    "DecompositionError",
    "DegenerateSampleError",
    "DoublyStochasticMatrix",
    "ESTIMATE_KINDS",
    "ExperimentConfig",
    "FAMILIES",
    "InvalidMarginError",
    "KERNEL_ENV_VAR",
    "MARGIN_KINDS",
    "MODES",
    "MarginPair",
    "MiseReport",
    "NotACopulaError",
    "PRIOR_KINDS",
    "PartitionBasis",
    "PolytopeError",
    "PriorSpec",
    "PseudoSample",
    "QuadratureSpec",
    "RadiusDensity",
    "ReferenceCopula",
    "STUDY_ESTIMATORS",
    "WORKERS_ENV_VAR",
    "approximation_error",
    "available_kernels",
    "ball_probability",
    "basis_vectors",
    "batch_means_stderr",
    "bayes_estimate",
    "bin_counts",
    "binomial_mad",
    "binomial_mad_sup",
    "birkhoff_decompose",
    "bvn_cdf",
    "cdf_outer",
    "copula_cdf",
    "copula_pdf",
    "deheuvels_estimate",
    "derive_seed",
    "discretize",
    "fisher_info_det",
    "fisher_sqrt_integral_1d",
    "fisher_sqrt_integral_2d",
    "fisher_sqrt_slice_integrand",
    "from_alpha",
    "gamma_interval",
    "inscribed_ball_radius",
    "kernel_estimate",
    "l2_sq_gap",
    "log_density",
    "log_fisher_info_det",
    "mle_estimate",
    "pdf_normalization",
    "pseudo_observations",
    "radius",
    "radius_density",
    "random_interior",
    "run_chain",
    "run_mise_study",
    "select_kernel",
    "sup_norm_gap",
    "sweep",
    "tanh_sinh",
    "to_alpha",
    "write_sample_csv",
]
