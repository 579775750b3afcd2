"""Precision of subjective rating experiments.

Three measures of how consistently subjects rate (``g``, ``a`` and ``l``),
tests that compare two experiments, and the simulation study used to judge
which measure discriminates best.
"""
__version__ = "0.1.0"

from .compare import compare, paired_variance_compare
from .core import (
    ComparisonOutcome,
    DomainError,
    HeatMap,
    InsufficientDataError,
    MeasureEstimate,
    MethodUnavailableError,
    RatingMatrix,
    UndefinedEstimatorError,
    summarize_stimuli,
)
from .generator import BiasScenario, ExperimentConfig, simulate_experiment
from .measures import fit_li2020, g_measure, l_measure, measure_ci, sos_a
from .qnorm import QNormParams

__all__ = [
    "BiasScenario",
    "ComparisonOutcome",
    "DomainError",
    "ExperimentConfig",
    "HeatMap",
    "InsufficientDataError",
    "MeasureEstimate",
    "MethodUnavailableError",
    "QNormParams",
    "RatingMatrix",
    "UndefinedEstimatorError",
    "compare",
    "fit_li2020",
    "g_measure",
    "l_measure",
    "measure_ci",
    "paired_variance_compare",
    "simulate_experiment",
    "sos_a",
    "summarize_stimuli",
]
