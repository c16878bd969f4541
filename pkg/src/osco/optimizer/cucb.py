"""Budgeted causal UCB over the possibly-optimal intervention sets.

Arms are (intervention set, level assignment) pairs.  Arm means combine
direct pulls with the do-calculus plug-in estimate from observational data
(one virtual pull); the confidence radius is the usual Hoeffding term over
the effective pull count.  The observe-or-pull choice follows the same
policies as the continuous loop.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..estimation.dataset import Dataset
from ..estimation.effects import EstimationError, evaluate_discrete_exact
from ..identification.estimand import Estimand
from ..identification.identify import Identifiable, identify
from ..identification.sets import enumerate_pomis, minimal_observation_set
from ..scm.benchmarks import Benchmark
from ..scm.sampling import exact_discrete_mean, sample_interventional, sample_observational
from ..scm.spec import FiniteSet, Intervention, SampleRow, ScmError
from ..stopping.decide import INTERVENE, OBSERVE, decide
from ..stopping.reward import StoppingContext
from ..surrogate.infogain import InfoGainAccumulator
from .cbo import CboConfig, _derived_seed, _rng
from .costs import CostModel
from .policies import TradeoffPolicy, select_tradeoff_baseline
from .trace import Trace, TraceRow

__all__ = ["run_cucb"]


@dataclass
class _BanditArm:
    intervention: Intervention
    estimand: Estimand | None
    mos: tuple[str, ...]
    pulls: int = 0
    pull_sum: float = 0.0
    plugin: float | None = None

    @property
    def key(self) -> tuple[tuple[str, ...], tuple[float, ...]]:
        return (self.intervention.targets, self.intervention.values)

    def mean(self) -> float | None:
        if self.pulls and self.plugin is not None:
            return (self.pull_sum + self.plugin) / (self.pulls + 1)
        if self.pulls:
            return self.pull_sum / self.pulls
        return self.plugin

    def effective_count(self) -> int:
        return self.pulls + (1 if self.plugin is not None else 0)

    def index(self, total_pulls: int) -> float:
        mean = self.mean()
        count = self.effective_count()
        if mean is None or count == 0:
            return -math.inf
        radius = math.sqrt(2.0 * math.log(max(total_pulls, 1) + 1) / count)
        return mean - radius


def _plugin_refresh(arms: list[_BanditArm], data: Dataset, benchmark: Benchmark) -> None:
    spec = benchmark.spec
    cache: dict[tuple[str, ...], tuple[np.ndarray, tuple[str, ...]]] = {}
    for arm in arms:
        if arm.estimand is None:
            continue
        columns = tuple(sorted(arm.estimand.variables()))
        if columns not in cache:
            cache[columns] = (data.column_matrix(columns), columns)
        matrix, _ = cache[columns]
        if matrix.shape[0] == 0:
            arm.plugin = None
            continue
        try:
            mean, _flags = evaluate_discrete_exact(
                arm.estimand, matrix, columns, arm.intervention.as_mapping(), spec.domains
            )
        except EstimationError:
            arm.plugin = None
            continue
        arm.plugin = mean


def run_cucb(
    benchmark: Benchmark,
    policy: TradeoffPolicy,
    seed: int,
    cost_model: CostModel | None = None,
    config: CboConfig | None = None,
) -> Trace:
    """Run the budgeted bandit and return its trace.

    Only finite-domain models qualify; continuous benchmarks are rejected.
    """

    spec = benchmark.spec
    if not spec.is_discrete():
        raise ScmError("the bandit loop needs finite domains everywhere")
    config = config or CboConfig()
    cost_model = cost_model or CostModel(
        observe_factor=benchmark.observe_cost_per_variable,
        intervene_factor=benchmark.intervene_cost_per_variable,
        budget=benchmark.budget,
        empty_intervention_cost=benchmark.observe_cost_per_variable,
    )
    trace = Trace(scm_name=benchmark.name, policy=policy.label, seed=seed, budget=cost_model.budget)

    family = benchmark.reference_pomis
    if family is None:
        family = enumerate_pomis(spec.graph, spec.target, spec.manipulative)
    arms: list[_BanditArm] = []
    info: dict[tuple[str, ...], InfoGainAccumulator] = {}
    for key in sorted((tuple(sorted(s)) for s in family), key=lambda k: (len(k), k)):
        result = identify(spec.graph, key, spec.target)
        estimand = result.estimand if isinstance(result, Identifiable) else None
        if frozenset(key) in benchmark.reference_mos:
            mos = tuple(sorted(benchmark.reference_mos[frozenset(key)]))
        elif estimand is not None:
            mos = tuple(sorted(minimal_observation_set(result)))
        else:
            mos = tuple(sorted(set(key) | {spec.target}))
        info[key] = InfoGainAccumulator(config.gp, dim=len(mos))
        level_sets = []
        for name in key:
            dom = spec.domain(name)
            assert isinstance(dom, FiniteSet)
            level_sets.append(sorted(dom.values))
        for values in itertools.product(*level_sets) if key else [()]:
            arms.append(
                _BanditArm(
                    intervention=Intervention(key, tuple(float(v) for v in values)),
                    estimand=estimand,
                    mos=mos,
                )
            )

    data = Dataset(nodes=spec.nodes)
    fitted = None
    total_pulls = 0
    plugin_dirty = True

    for stage in range(1, config.max_stages + 1):
        start = time.perf_counter()
        remaining = cost_model.budget - data.cumulative_cost
        if plugin_dirty:
            _plugin_refresh(arms, data, benchmark)
            plugin_dirty = False

        # UCB-argmin arm (lower index explores unvisited arms first)
        order = sorted(range(len(arms)), key=lambda i: (arms[i].index(total_pulls), arms[i].key))
        arm = arms[order[0]]
        c_int = cost_model.intervene_cost(arm.intervention.targets)
        c_obs = cost_model.observe_cost(arm.mos)
        if min(c_int, c_obs) >= remaining:
            break

        if policy.kind == "osco":
            mean_now = arm.mean()

            def mu_hat(extra: SampleRow | None, _arm=arm, _mean=mean_now) -> float:
                if _arm.estimand is None:
                    return _mean if _mean is not None else 0.0
                columns = tuple(sorted(_arm.estimand.variables()))
                matrix = data.column_matrix(columns)
                if extra is not None and all(c in extra.assignment for c in columns):
                    row = np.array([[extra.assignment[c] for c in columns]])
                    matrix = np.vstack([matrix, row]) if matrix.size else row
                if matrix.shape[0] == 0:
                    return _mean if _mean is not None else 0.0
                value, _ = evaluate_discrete_exact(
                    _arm.estimand, matrix, columns, _arm.intervention.as_mapping(), spec.domains
                )
                return value

            def simulate(rng: np.random.Generator, _arm=arm) -> SampleRow:
                if fitted is not None and all(v in fitted.models for v in _arm.mos):
                    from ..estimation.models import simulate_observation

                    return simulate_observation(fitted, _arm.mos, rng, n=1)[0]
                assignment = {}
                for name in _arm.mos:
                    dom = spec.domain(name)
                    assert isinstance(dom, FiniteSet)
                    assignment[name] = float(rng.choice(np.asarray(dom.values)))
                return SampleRow(assignment=assignment, kind="observational")

            ctx = StoppingContext(
                dataset=data,
                candidate=arm.intervention,
                mos=arm.mos,
                domains=spec.domains,
                weights=config.weights,
                gamma=config.gamma,
                observe_cost=c_obs,
                intervene_cost=c_int,
                remaining_budget=remaining,
                horizon=max(1, int(remaining / max(c_obs, 1e-9))),
                identifiable=arm.estimand is not None,
                fitted=fitted,
                estimand=arm.estimand,
                info_gain=info[arm.intervention.targets],
                ratio_cap=config.ratio_cap,
                mu_hat=mu_hat,
                simulate=simulate,
            )
            decision = decide(ctx, n_mc=config.n_mc_lookahead, seed=_derived_seed(seed, stage, 13))
            action = decision.action
        else:
            coverage = 0.0
            if data.n_observations >= 2:
                matrix = data.column_matrix(arm.mos)
                if matrix.shape[0] >= 2:
                    spread = 1.0
                    for j, name in enumerate(arm.mos):
                        width = spec.domain(name).width
                        if width > 0:
                            spread *= (matrix[:, j].max() - matrix[:, j].min()) / width
                    coverage = spread
            action = select_tradeoff_baseline(
                policy, data.n_observations, coverage, _rng(seed, stage, 3)
            )

        cost = c_int if action == INTERVENE else c_obs
        if cost >= remaining:
            break

        if action == INTERVENE:
            if arm.intervention.is_empty:
                sampled = sample_observational(
                    spec, [spec.target], 1, seed=_derived_seed(seed, stage, 17), first_step=stage
                )[0]
                row = SampleRow(
                    assignment=dict(sampled.assignment),
                    kind="interventional",
                    step_index=stage,
                    intervention=arm.intervention,
                )
            else:
                row = sample_interventional(
                    spec, arm.intervention, 1, seed=_derived_seed(seed, stage, 17), first_step=stage
                )[0]
            data.append(row, cost)
            arm.pulls += 1
            arm.pull_sum += row.assignment[spec.target]
            total_pulls += 1
        else:
            row = sample_observational(
                spec, arm.mos, 1, seed=_derived_seed(seed, stage, 19), first_step=stage
            )[0]
            data.append(row, cost)
            plugin_dirty = True
            for key, acc in info.items():
                mos = next(a.mos for a in arms if a.intervention.targets == key)
                if set(mos) <= set(row.assignment):
                    acc.add([row.assignment[c] for c in mos])
            from ..estimation.models import fit_scm_models

            fitted = fit_scm_models(spec.graph, data, domains=spec.domains, hyper=config.gp)

        means = [a.mean() for a in arms]
        finite = [m for m in means if m is not None]
        trace.rows.append(
            TraceRow(
                step=stage,
                stage_kind="intervene" if action == INTERVENE else "observe",
                intervention=arm.intervention,
                cost=cost,
                cum_cost=data.cumulative_cost,
                best_mu_hat=min(finite) if finite else math.nan,
                wall_ms=(time.perf_counter() - start) * 1000.0 if config.record_wall else 0.0,
            )
        )

    best = min(
        arms,
        key=lambda a: (a.mean() if a.mean() is not None else math.inf, a.key),
    )
    trace.best_intervention = best.intervention
    trace.best_mu_hat = best.mean() if best.mean() is not None else math.nan

    if config.fill_true_mu:
        exact_cache: dict[tuple, float] = {}
        for row in trace.rows:
            if row.stage_kind == "intervene":
                key = (row.intervention.targets, row.intervention.values)
                if key not in exact_cache:
                    exact_cache[key] = exact_discrete_mean(spec, row.intervention)
                row.true_mu_at_choice = exact_cache[key]
    trace.check_invariants()
    return trace
