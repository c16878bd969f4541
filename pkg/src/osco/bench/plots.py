"""TSV emission for the standard figures (plotting happens elsewhere)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..optimizer.trace import Trace, simple_regret
from .runner import RunResult, RunSummary

__all__ = ["emit_plot_data", "CONVERGENCE_HEADER", "ACTIONS_HEADER", "OVERHEAD_HEADER"]

CONVERGENCE_HEADER = "cum_cost\tregret_mean\tregret_sem"
ACTIONS_HEADER = "stage\tobservations_mean\tinterventions_mean"
OVERHEAD_HEADER = "policy\tmean_ms\tstd_ms"


def _resample_curve(curve: list[tuple[float, float]], grid: np.ndarray) -> np.ndarray:
    values = np.full(grid.shape[0], math.inf)
    idx = 0
    current = math.inf
    for j, cost in enumerate(grid):
        while idx < len(curve) and curve[idx][0] <= cost:
            current = curve[idx][1]
            idx += 1
        values[j] = current
    return values


def emit_plot_data(
    summary: RunSummary,
    out_dir: str | Path,
    budget: float,
    grid_points: int = 121,
    finite_cap: float | None = None,
) -> list[Path]:
    """Write convergence, action-count and overhead TSVs; returns the paths.

    Infinite regret (runs that never intervened) is clipped to ``finite_cap``
    for band computation when given, else those grid cells stay ``inf``.
    """

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    grid = np.linspace(0.0, budget, grid_points)

    groups: dict[tuple[str, float], list[RunResult]] = {}
    for res in summary.results:
        if res.trace is not None:
            groups.setdefault((res.policy, res.observe_factor), []).append(res)

    for (policy, obs_factor), bucket in sorted(groups.items()):
        curves = []
        for res in bucket:
            assert res.trace is not None
            curve = simple_regret(res.trace, summary.optimum)
            curves.append(_resample_curve(curve, grid))
        stack = np.vstack(curves)
        if finite_cap is not None:
            stack = np.minimum(stack, finite_cap)
        mean = stack.mean(axis=0)
        finite_cols = np.all(np.isfinite(stack), axis=0)
        sem = np.zeros(stack.shape[1])
        if finite_cols.any():
            sem[finite_cols] = stack[:, finite_cols].std(axis=0, ddof=0) / math.sqrt(
                stack.shape[0]
            )
        path = out_dir / f"convergence__{policy}__obs{obs_factor:g}.tsv"
        with path.open("w") as handle:
            handle.write(CONVERGENCE_HEADER + "\n")
            for c, m, s in zip(grid, mean, sem):
                handle.write(f"{c:.6g}\t{m:.6g}\t{s:.6g}\n")
        written.append(path)

        max_stage = max(len(res.trace.rows) for res in bucket)  # type: ignore[union-attr]
        obs_counts = np.zeros((len(bucket), max_stage))
        int_counts = np.zeros((len(bucket), max_stage))
        for i, res in enumerate(bucket):
            assert res.trace is not None
            n_obs = n_int = 0
            for t, row in enumerate(res.trace.rows):
                if row.stage_kind == "observe":
                    n_obs += 1
                else:
                    n_int += 1
                obs_counts[i, t] = n_obs
                int_counts[i, t] = n_int
            obs_counts[i, len(res.trace.rows):] = n_obs
            int_counts[i, len(res.trace.rows):] = n_int
        path = out_dir / f"actions__{policy}__obs{obs_factor:g}.tsv"
        with path.open("w") as handle:
            handle.write(ACTIONS_HEADER + "\n")
            for t in range(max_stage):
                handle.write(
                    f"{t + 1}\t{obs_counts[:, t].mean():.6g}\t{int_counts[:, t].mean():.6g}\n"
                )
        written.append(path)
    return written


def emit_overhead_data(
    measurements: dict[str, tuple[float, float]], out_dir: str | Path, name: str
) -> Path:
    """One bar per policy: mean and std of the per-iteration wall clock."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"overhead__{name}.tsv"
    with path.open("w") as handle:
        handle.write(OVERHEAD_HEADER + "\n")
        for policy in sorted(measurements):
            mean_ms, std_ms = measurements[policy]
            handle.write(f"{policy}\t{mean_ms:.6g}\t{std_ms:.6g}\n")
    return path
