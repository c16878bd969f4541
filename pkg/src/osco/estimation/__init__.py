"""Turning data into effect estimates and simulated observations."""

from .dataset import Dataset
from .effects import (
    EstimationError,
    FactorModels,
    estimate_causal_effect,
    evaluate_discrete_exact,
)
from .models import FittedScm, fit_scm_models, simulate_observation

__all__ = [
    "Dataset",
    "EstimationError",
    "FactorModels",
    "FittedScm",
    "estimate_causal_effect",
    "evaluate_discrete_exact",
    "fit_scm_models",
    "simulate_observation",
]
