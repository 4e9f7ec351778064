"""Numerical checks of Stein-method limit theorems for the SK spin glass."""

from .errors import AmbiguousRootError, CapacityExceededError, ConvergenceError, NumericFailure
from .experiments import ExperimentConfig, default_config, fit_decay_exponent, run_experiment
from .mixture_stein import MixtureGaussianParams, solve_stein
from .sk_model import DisorderMatrix, ExactGibbsTable, ModelParams, build_exact_gibbs, sample_disorder
from .tap_solver import q_fixed_point, tap_iterate

__version__ = "0.1.0"

__all__ = [
    "AmbiguousRootError",
    "CapacityExceededError",
    "ConvergenceError",
    "DisorderMatrix",
    "ExactGibbsTable",
    "ExperimentConfig",
    "MixtureGaussianParams",
    "ModelParams",
    "NumericFailure",
    "build_exact_gibbs",
    "default_config",
    "fit_decay_exponent",
    "q_fixed_point",
    "run_experiment",
    "sample_disorder",
    "solve_stein",
    "tap_iterate",
]
