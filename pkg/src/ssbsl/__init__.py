"""Confidence-gated semi-supervised Bayesian sequential learning for Gaussian classifiers."""

__version__ = "0.1.0"

from .bayes import (
    ClassPosteriorState,
    DirichletParams,
    GaussWishartParams,
    SufficientStats,
    accumulate_stats,
    class_posterior,
    log_predictive_density,
    update_posterior,
)
from .classifier import GcmClassifier, LearningMode, Prediction, TrialOutcome, gate_pseudo_labels
from .data import TrialDataset
from .drift import DriftScenario, generate_trial, mild_scenario, crossing_scenario
from .errors import (
    ConfigError,
    DimensionError,
    InvalidStateError,
    MissingLabelError,
    NumericalError,
    SsbslError,
)
from .harness import ExperimentConfig, ExperimentReport, PriorConfig, build_prior, run_experiment, summarize

__all__ = [
    "ClassPosteriorState", "DirichletParams", "GaussWishartParams", "SufficientStats",
    "accumulate_stats", "class_posterior", "log_predictive_density", "update_posterior",
    "GcmClassifier", "LearningMode", "Prediction", "TrialOutcome", "gate_pseudo_labels",
    "TrialDataset", "DriftScenario", "generate_trial", "mild_scenario", "crossing_scenario",
    "ConfigError", "DimensionError", "InvalidStateError", "MissingLabelError",
    "NumericalError", "SsbslError",
    "ExperimentConfig", "ExperimentReport", "PriorConfig", "build_prior", "run_experiment", "summarize",
]
