"""Probabilistic finite element solver with coarse-observation posteriors.

A Gaussian prior over the forcing of a fine P1 discretization is conditioned
on the restriction of the load to a nested coarse space; the posterior mean
reproduces the coarse solution and the posterior covariance encodes the
discretization error between the two resolutions.
"""

from .assembly import (
    AssembledSystem,
    PlaneStress,
    Poisson1D,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_system,
    eliminate_dirichlet,
    expand_dofs,
    restrict_to_coarse,
)
from .bayes import (
    BoundaryPrior,
    PosteriorMoments,
    PriorSpec,
    boundary_prior_moments,
    contraction_check,
    discretization_error,
    error_recovery,
    f_hat_projection,
    posterior_moments,
    prior_covariance_f,
    rescale_eigenvalues,
)
from .errors import (
    BayesFemError,
    CapacityError,
    ConfigError,
    InvalidArgumentError,
    MeshParseError,
    NotPositiveDefiniteError,
    UnsupportedElementError,
)
from .mesh import (
    DofPartition,
    Mesh,
    MeshHierarchy,
    generate_interval_mesh,
    identity_hierarchy,
    parse_mesh_file,
    partition_dofs,
    refine_hierarchical,
)
from .sampling import (
    Ensemble,
    SampleStats,
    ensemble_stats,
    sample_posterior_via_f,
    sample_posterior_via_u,
    sample_prior,
)
from .sparse import (
    CholeskyFactor,
    cholesky,
    check_symmetric,
    gaussian_vector,
    rng_stream,
    solve,
    sym_eig,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "PlaneStress", "Poisson1D", "assemble_load",
    "assemble_mass", "assemble_stiffness", "build_system", "eliminate_dirichlet",
    "expand_dofs", "restrict_to_coarse",
    "BoundaryPrior", "PosteriorMoments", "PriorSpec", "boundary_prior_moments",
    "contraction_check", "discretization_error", "error_recovery",
    "f_hat_projection", "posterior_moments", "prior_covariance_f",
    "rescale_eigenvalues",
    "BayesFemError", "CapacityError", "ConfigError", "InvalidArgumentError",
    "MeshParseError", "NotPositiveDefiniteError", "UnsupportedElementError",
    "DofPartition", "Mesh", "MeshHierarchy", "generate_interval_mesh",
    "identity_hierarchy", "parse_mesh_file", "partition_dofs",
    "refine_hierarchical",
    "Ensemble", "SampleStats", "ensemble_stats", "sample_posterior_via_f",
    "sample_posterior_via_u", "sample_prior",
    "CholeskyFactor", "cholesky", "check_symmetric", "gaussian_vector",
    "rng_stream", "solve", "sym_eig",
    "__version__",
]
