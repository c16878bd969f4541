"""Objective surrogates: GPs with causal priors, information gain, acquisition."""

from .acquisition import (
    ArmSurrogate,
    SurrogateBank,
    candidate_grid,
    causal_expected_improvement,
    expected_improvement,
)
from .gp import GpFitError, GpHyper, GpModel, fit_gp, rbf_kernel
from .infogain import InfoGainAccumulator, information_gain
from .prior import CausalPrior, build_causal_prior, domain_axis

__all__ = [
    "ArmSurrogate",
    "CausalPrior",
    "GpFitError",
    "GpHyper",
    "GpModel",
    "InfoGainAccumulator",
    "SurrogateBank",
    "build_causal_prior",
    "candidate_grid",
    "causal_expected_improvement",
    "domain_axis",
    "expected_improvement",
    "fit_gp",
    "information_gain",
    "rbf_kernel",
]
