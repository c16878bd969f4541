"""Experiment harness: config files, batch runs, plot data, CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .overhead import measure_overhead
from .plots import emit_overhead_data, emit_plot_data
from .runner import RunResult, RunSummary, run_experiment, true_optimum

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "RunSummary",
    "emit_overhead_data",
    "emit_plot_data",
    "load_config",
    "measure_overhead",
    "run_experiment",
    "true_optimum",
]
