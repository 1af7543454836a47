"""Levy-driven CARMA processes: simulation, second-order structure,
quasi-maximum-likelihood estimation and recovery of the driving process."""

from ._backend import BACKEND
from .errors import CarmaError, DomainError, NumericalError, SingularityError, UnsupportedError
from .levy import (
    NIG,
    CompoundPoissonJumps,
    Gamma,
    PoissonJumps,
    Stable,
    Sum,
    Triplet,
    brownian,
    char_exponent,
    model_from_dict,
    model_to_dict,
    moment_rates,
    path_from_increments,
    sample_increments,
)
from .model import (
    CarmaSpec,
    Spectrum,
    StateSpace,
    beta_coefficients,
    companion,
    spectrum,
    transfer_function,
    verify_equivalence,
)
from .moments import autocov, spectral_density, stationary_cf, stationary_cov
from .paths import IncrementBatch, SampledPath, make_rng
from .sampler import (
    DiscreteSystem,
    discretize,
    sampled_ar_coefficients,
    simulate_gaussian,
    simulate_levy,
)

__version__ = "0.1.0"
