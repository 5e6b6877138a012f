"""Rank-only Bayesian optimization with quantile-scaled GP surrogates."""

from .acquisition import AcquisitionSpec, expected_improvement, select_next
from .benchmarks import BENCHMARKS, get_benchmark
from .errors import (
    DegenerateDataError,
    EvaluationError,
    InvalidInputError,
    NumericalError,
    RunError,
)
from .optimizer import Domain, OptimizerConfig, RunResult, qsbo_run, random_search_run
from .rank_transform import build_latent_targets
from .surrogate import KernelSpec, SurrogateModel, fit, predict

__version__ = "0.1.0"
