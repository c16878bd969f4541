"""Batch execution of the (policy x cost x seed) run matrix."""

from __future__ import annotations

import csv
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..optimizer.cbo import run_cbo
from ..optimizer.costs import CostModel
from ..optimizer.cucb import run_cucb
from ..optimizer.policies import TradeoffPolicy
from ..optimizer.trace import Trace, simple_regret
from ..scm.benchmarks import Benchmark
from ..scm.sampling import exact_discrete_mean, grid_minimum
from ..scm.spec import FiniteSet, Intervention
from .config import ExperimentConfig

__all__ = ["RunResult", "RunSummary", "run_experiment", "true_optimum"]

AGGREGATE_HEADER = (
    "policy",
    "observe_factor",
    "n_seeds",
    "final_regret_mean",
    "final_regret_sem",
    "cost_to_eps_mean",
    "cost_to_eps_sem",
    "observations_mean",
    "interventions_mean",
    "wall_ms_mean",
)


@dataclass
class RunResult:
    policy: str
    observe_factor: float
    seed: int
    trace: Trace | None
    final_regret: float = math.inf
    cost_to_eps: float = math.inf
    n_observe: int = 0
    n_intervene: int = 0
    mean_wall_ms: float = 0.0
    error: str | None = None


@dataclass
class RunSummary:
    optimum: float
    results: list[RunResult] = field(default_factory=list)

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.results if r.error is not None]

    def aggregate_rows(self) -> list[dict[str, object]]:
        rows: list[dict[str, object]] = []
        groups: dict[tuple[str, float], list[RunResult]] = {}
        for res in self.results:
            if res.error is None:
                groups.setdefault((res.policy, res.observe_factor), []).append(res)
        for (policy, obs_factor), bucket in sorted(groups.items()):
            n = len(bucket)
            regrets = [r.final_regret for r in bucket]
            costs = [r.cost_to_eps for r in bucket]
            rows.append(
                {
                    "policy": policy,
                    "observe_factor": obs_factor,
                    "n_seeds": n,
                    "final_regret_mean": _mean(regrets),
                    "final_regret_sem": _sem(regrets),
                    "cost_to_eps_mean": _mean(costs),
                    "cost_to_eps_sem": _sem(costs),
                    "observations_mean": _mean([r.n_observe for r in bucket]),
                    "interventions_mean": _mean([r.n_intervene for r in bucket]),
                    "wall_ms_mean": _mean([r.mean_wall_ms for r in bucket]),
                }
            )
        return rows

    def write_aggregate(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=AGGREGATE_HEADER)
            writer.writeheader()
            for row in self.aggregate_rows():
                writer.writerow(row)


def _mean(values) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return statistics.fmean(finite) if finite else math.inf


def _sem(values) -> float:
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) < 2:
        return 0.0
    return statistics.stdev(finite) / math.sqrt(len(finite))


def true_optimum(benchmark: Benchmark, step_1d: float = 0.05, step_2d: float = 0.25,
                 n_mc: int = 20_000, seed: int = 0) -> float:
    """Best achievable mean over the possibly-optimal sets, by exact
    enumeration (finite domains) or a dense-grid Monte-Carlo oracle."""

    spec = benchmark.spec
    family = benchmark.reference_pomis or frozenset()
    best = math.inf
    if spec.is_discrete():
        import itertools

        for key in sorted((tuple(sorted(s)) for s in family), key=lambda k: (len(k), k)):
            level_sets = []
            for name in key:
                dom = spec.domain(name)
                assert isinstance(dom, FiniteSet)
                level_sets.append(sorted(dom.values))
            for values in itertools.product(*level_sets) if key else [()]:
                iv = Intervention(key, tuple(float(v) for v in values))
                best = min(best, exact_discrete_mean(spec, iv))
        return best
    for key in sorted((tuple(sorted(s)) for s in family), key=lambda k: (len(k), k)):
        step = step_1d if len(key) <= 1 else step_2d
        _, mean, _ = grid_minimum(spec, key, step=step, n_mc=n_mc, seed=seed)
        best = min(best, mean)
    return best


def _trace_filename(benchmark: Benchmark, policy: str, obs_factor: float, seed: int) -> str:
    return f"{benchmark.name}__{policy}__obs{obs_factor:g}__seed{seed}.csv"


def _one_run(args) -> RunResult:
    cfg, policy, cost_model, seed, optimum = args
    benchmark = cfg.benchmark
    try:
        use_bandit = cfg.loop == "cucb" or (cfg.loop == "auto" and benchmark.spec.is_discrete())
        runner = run_cucb if use_bandit else run_cbo
        trace = runner(benchmark, policy, seed, cost_model=cost_model, config=cfg.cbo)
        curve = simple_regret(trace, optimum)
        final_regret = curve[-1][1]
        cost_to_eps = next(
            (c for c, r in curve if r <= cfg.regret_epsilon), math.inf
        )
        walls = [row.wall_ms for row in trace.rows]
        return RunResult(
            policy=policy.label,
            observe_factor=cost_model.observe_factor,
            seed=seed,
            trace=trace,
            final_regret=final_regret,
            cost_to_eps=cost_to_eps,
            n_observe=trace.n_actions("observe"),
            n_intervene=trace.n_actions("intervene"),
            mean_wall_ms=statistics.fmean(walls) if walls else 0.0,
        )
    except Exception as err:  # per-run failures recorded, matrix continues
        return RunResult(
            policy=policy.label,
            observe_factor=cost_model.observe_factor,
            seed=seed,
            trace=None,
            error=f"{type(err).__name__}: {err}",
        )


def run_experiment(cfg: ExperimentConfig, output_root: Path | None = None) -> RunSummary:
    """Execute the whole matrix, writing one trace CSV per run plus an
    aggregate CSV.  Failures are recorded per run and do not stop the rest."""

    root = Path(output_root) if output_root is not None else None
    out_dir = (root / cfg.output_dir) if root else cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    optimum = true_optimum(cfg.benchmark)
    summary = RunSummary(optimum=optimum)
    jobs = [(cfg, policy, cost, seed, optimum) for policy, cost, seed in cfg.run_matrix()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(job) for job in jobs]
    summary.results.extend(results)

    for res in summary.results:
        if res.trace is not None:
            res.trace.to_csv(
                out_dir / _trace_filename(cfg.benchmark, res.policy, res.observe_factor, res.seed)
            )
    summary.write_aggregate(out_dir / f"{cfg.benchmark.name}__aggregate.csv")
    return summary
