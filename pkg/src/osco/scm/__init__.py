"""Structural causal models: definition, validation, sampling, benchmarks."""

from .benchmarks import Benchmark, benchmark_names, builtin_benchmarks, get_benchmark, load_benchmark_file
from .expr import ExprError, eval_expr, expr_names, parse_expr
from .graph import CausalGraph, GraphError, mutilate
from .sampling import (
    exact_discrete_mean,
    grid_minimum,
    mc_ground_truth,
    sample_interventional,
    sample_observational,
    simulate,
)
from .scmfile import ScmFileError, load_scm_file, parse_scm_text
from .spec import (
    Domain,
    FiniteSet,
    Interval,
    Intervention,
    NoiseDist,
    SampleRow,
    ScmError,
    ScmSpec,
    ValidationReport,
    validate,
)

__all__ = [
    "Benchmark",
    "CausalGraph",
    "Domain",
    "ExprError",
    "FiniteSet",
    "GraphError",
    "Interval",
    "Intervention",
    "NoiseDist",
    "SampleRow",
    "ScmError",
    "ScmFileError",
    "ScmSpec",
    "ValidationReport",
    "benchmark_names",
    "builtin_benchmarks",
    "eval_expr",
    "exact_discrete_mean",
    "expr_names",
    "get_benchmark",
    "grid_minimum",
    "load_benchmark_file",
    "load_scm_file",
    "mc_ground_truth",
    "mutilate",
    "parse_expr",
    "parse_scm_text",
    "sample_interventional",
    "sample_observational",
    "simulate",
    "validate",
]
