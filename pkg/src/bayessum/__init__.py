"""Probabilistic quadrature for sums over discrete and mixed domains."""

from .distributions import (
    CMP,
    Distribution,
    Logarithmic,
    MixedProduct,
    NegBinomial,
    Poisson,
    PottsUnnormalized,
    SampleBatch,
    Skellam,
    UniformCategorical,
    UniformInterval,
    UniformIsing,
    diff_score,
    enumerate_support,
    make_rng,
    mh_sample,
    sample,
)
from .embeddings import EmbeddingPair, initial_error, kme, kme_many
from .errors import (
    BayesSumError,
    CapabilityError,
    ContractError,
    DomainError,
    NumericalError,
    SingularGramError,
    SingularScoreError,
)
from .kernels import (
    BrownianMin,
    ExpHamming,
    GaussianRBF,
    Hamming,
    Kernel,
    MixedAdditiveProduct,
    Polynomial,
    ProductKernel,
    SteinDiscrete,
    Tanimoto,
    cross_gram,
    gram,
)
from .quadrature import (
    PosteriorEstimate,
    QuadratureState,
    active_select,
    bayessum,
    log_marginal_likelihood,
    make_state,
    mixed_bayessum,
    precompute_weights,
    select_hyperparams,
    stein_bayessum,
    thm1_bound,
)

__version__ = "0.1.0"
