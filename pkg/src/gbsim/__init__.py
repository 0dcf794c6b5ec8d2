"""Exact classical sampling of Gaussian boson sampling with identical squeezed inputs."""

from .linalg import (
    Interferometer,
    config_to_positions,
    hafnian,
    haar_unitary,
    permanent,
    read_config,
    submatrix_ws,
    submatrix_wx,
)
from .marginals import (
    FFactorParams,
    HafnianCache,
    MarginalQuery,
    candidate_marginals,
    delta_permanent,
    f_factor,
    hafnian_split_check,
    marginal_q,
    marginal_q_bruteforce,
    normalization_f,
)
from .photon_number import (
    PhotonCountPmf,
    SqueezeSetup,
    most_probable_n,
    photon_count_pmf,
    sample_photon_count,
)
from .sampler import (
    ChainSampler,
    ConditionalWeights,
    SampleRecord,
    brute_force_sample,
    conditional_weights,
    exact_table,
    run_pipeline,
    sample_configuration,
    sample_many,
)

__version__ = "0.1.0"

__all__ = [
    "Interferometer",
    "config_to_positions",
    "hafnian",
    "haar_unitary",
    "permanent",
    "read_config",
    "submatrix_ws",
    "submatrix_wx",
    "FFactorParams",
    "HafnianCache",
    "MarginalQuery",
    "candidate_marginals",
    "delta_permanent",
    "f_factor",
    "hafnian_split_check",
    "marginal_q",
    "marginal_q_bruteforce",
    "normalization_f",
    "PhotonCountPmf",
    "SqueezeSetup",
    "most_probable_n",
    "photon_count_pmf",
    "sample_photon_count",
    "ChainSampler",
    "ConditionalWeights",
    "SampleRecord",
    "brute_force_sample",
    "conditional_weights",
    "exact_table",
    "run_pipeline",
    "sample_configuration",
    "sample_many",
]
