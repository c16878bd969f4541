"""Per-iteration wall-clock comparison between policies."""

from __future__ import annotations

import statistics

from ..optimizer.cbo import CboConfig, run_cbo
from ..optimizer.costs import CostModel
from ..optimizer.cucb import run_cucb
from ..optimizer.policies import TradeoffPolicy
from ..scm.benchmarks import Benchmark

__all__ = ["measure_overhead"]


def measure_overhead(
    benchmark: Benchmark,
    n_iter: int = 100,
    warmup: int = 5,
    seed: int = 0,
    policies: tuple[TradeoffPolicy, ...] = (
        TradeoffPolicy.osco(),
        TradeoffPolicy.always_intervene(),
    ),
    config: CboConfig | None = None,
) -> dict[str, tuple[float, float]]:
    """Mean and sample std of the per-iteration wall clock for each policy,
    measured over ``n_iter`` iterations (warm-up excluded) with the budget
    lifted so every policy completes the same number of iterations."""

    if n_iter < 10:
        raise ValueError("need at least 10 iterations for a stable mean")
    if warmup < 0 or warmup >= n_iter:
        raise ValueError("warmup must be nonnegative and below n_iter")
    base = config or CboConfig()
    cfg = CboConfig(
        gp=base.gp,
        weights=base.weights,
        gamma=base.gamma,
        n_mc_lookahead=base.n_mc_lookahead,
        n_candidates=base.n_candidates,
        ei_xi=base.ei_xi,
        prior_grid_size=base.prior_grid_size,
        prior_n_mc=base.prior_n_mc,
        prior_refresh_every=base.prior_refresh_every,
        refresh_n_mc=base.refresh_n_mc,
        factor_max_points=base.factor_max_points,
        fscm_max_points=base.fscm_max_points,
        fscm_refit_every=base.fscm_refit_every,
        ratio_cap=base.ratio_cap,
        record_wall=True,
        fill_true_mu=False,
        max_stages=n_iter,
    )
    cost_model = CostModel(
        observe_factor=benchmark.observe_cost_per_variable,
        intervene_factor=benchmark.intervene_cost_per_variable,
        budget=1e12,
        empty_intervention_cost=benchmark.observe_cost_per_variable,
    )
    runner = run_cucb if benchmark.spec.is_discrete() else run_cbo
    out: dict[str, tuple[float, float]] = {}
    for policy in policies:
        trace = runner(benchmark, policy, seed, cost_model=cost_model, config=cfg)
        walls = [row.wall_ms for row in trace.rows[warmup:]]
        out[policy.label] = (statistics.fmean(walls), statistics.stdev(walls))
    return out
