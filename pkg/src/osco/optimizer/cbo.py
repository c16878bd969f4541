"""The outer optimisation loop: propose an intervention with cost-aware
expected improvement, decide whether to evaluate it by experiment or by
buying one more observation, and keep all models current.

One stage = one proposal + one charged action.  Interventions feed the
proposing arm's surrogate; observations feed the node models, the per-arm
information-gain state and the causal priors.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..estimation.dataset import Dataset
from ..estimation.effects import (
    EstimationError,
    FactorModels,
    estimate_causal_effect,
    estimate_effect_batch,
)
from ..estimation.models import FittedScm, fit_scm_models, simulate_observation
from ..identification.estimand import Estimand
from ..identification.identify import Identifiable, identify
from ..identification.sets import enumerate_pomis, minimal_observation_set
from ..scm.benchmarks import Benchmark
from ..scm.sampling import mc_ground_truth, sample_interventional, sample_observational
from ..scm.spec import FiniteSet, Intervention, SampleRow
from ..stopping.decide import INTERVENE, OBSERVE, decide
from ..stopping.reward import StoppingContext, StoppingWeights
from ..surrogate.acquisition import (
    ArmSurrogate,
    SurrogateBank,
    candidate_grid,
    causal_expected_improvement,
)
from ..surrogate.gp import GpHyper, fit_gp
from ..surrogate.infogain import InfoGainAccumulator
from ..surrogate.prior import CausalPrior, build_causal_prior
from .costs import CostModel
from .policies import TradeoffPolicy, select_tradeoff_baseline
from .trace import Trace, TraceRow

__all__ = ["CboConfig", "run_cbo"]


@dataclass(frozen=True)
class CboConfig:
    gp: GpHyper = field(default_factory=GpHyper)
    weights: StoppingWeights = field(default_factory=StoppingWeights)
    gamma: float = 1.0
    n_mc_lookahead: int = 10
    n_candidates: int = 512
    ei_xi: float = 0.01
    prior_grid_size: int = 25
    prior_n_mc: int = 96
    prior_refresh_every: int = 5
    refresh_n_mc: int = 48
    factor_max_points: int = 600
    fscm_max_points: int = 400
    fscm_refit_every: int = 50
    ratio_cap: float = 100.0
    record_wall: bool = True
    oracle_n_mc: int = 20_000
    fill_true_mu: bool = True
    max_stages: int = 20_000


@dataclass
class _Arm:
    key: tuple[str, ...]
    estimand: Estimand | None
    mos: tuple[str, ...]
    surrogate: ArmSurrogate
    info: InfoGainAccumulator
    prior_dirty: bool = True


def _rng(seed: int, stage: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0x7FFFFFFF, stage, tag])


def _derived_seed(seed: int, stage: int, tag: int) -> int:
    return int((seed * 1_000_003 + stage * 97 + tag) % (2**31 - 1))


def _build_arms(benchmark: Benchmark, config: CboConfig, seed: int) -> dict[tuple[str, ...], _Arm]:
    spec = benchmark.spec
    family = benchmark.reference_pomis
    if family is None:
        family = enumerate_pomis(spec.graph, spec.target, spec.manipulative)
    arms: dict[tuple[str, ...], _Arm] = {}
    for index, key in enumerate(sorted((tuple(sorted(s)) for s in family), key=lambda k: (len(k), k))):
        result = identify(spec.graph, key, spec.target)
        estimand = result.estimand if isinstance(result, Identifiable) else None
        if frozenset(key) in benchmark.reference_mos:
            mos = tuple(sorted(benchmark.reference_mos[frozenset(key)]))
        elif estimand is not None:
            mos = tuple(sorted(minimal_observation_set(result)))
        else:
            mos = tuple(sorted(set(key) | {spec.target}))
        domains = tuple(spec.domain(name) for name in key)
        grid = candidate_grid(domains, config.n_candidates, seed=_derived_seed(seed, 0, 11 + index))
        prior = CausalPrior.flat(key, std=math.sqrt(config.gp.signal_variance))
        gp = fit_gp(
            np.empty((0, len(key))),
            np.empty(0),
            prior_mean=prior.mean,
            prior_std_scale=prior.std_scale,
            hyper=config.gp,
        )
        arms[key] = _Arm(
            key=key,
            estimand=estimand,
            mos=mos,
            surrogate=ArmSurrogate(targets=key, domains=domains, grid=grid, prior=prior, gp=gp),
            info=InfoGainAccumulator(config.gp, dim=len(mos)),
        )
    return arms


def _refresh_prior(
    arm: _Arm,
    benchmark: Benchmark,
    source: Dataset | FactorModels,
    config: CboConfig,
    seed: int,
) -> None:
    spec = benchmark.spec
    domains = spec.domains if spec.is_discrete() else None
    prior = build_causal_prior(
        arm.estimand,
        source,
        [(name, spec.domain(name)) for name in arm.key],
        grid_size=config.prior_grid_size,
        n_mc=config.prior_n_mc,
        seed=seed,
        domains=domains,
        hyper=config.gp,
        fallback_std=math.sqrt(config.gp.signal_variance),
    )
    arm.surrogate = arm.surrogate.refit(prior, config.gp)
    arm.prior_dirty = False


def _incumbent(arms: dict[tuple[str, ...], _Arm]) -> float:
    best = math.inf
    for key in sorted(arms):
        gp = arms[key].surrogate.gp
        if gp.n_train:
            means, _ = gp.posterior(gp.x_train)
            best = min(best, float(np.min(means)))
    if math.isinf(best):
        for key in sorted(arms):
            arm = arms[key]
            if arm.surrogate.prior.available:
                means, _ = arm.surrogate.gp.posterior(arm.surrogate.grid)
                best = min(best, float(np.min(means)))
    return 0.0 if math.isinf(best) else best


def _make_mu_hat(
    arm: _Arm,
    benchmark: Benchmark,
    data: Dataset,
    factor_models: FactorModels | None,
    candidate: Intervention,
    config: CboConfig,
    seed: int,
):
    """Surrogate estimate at the candidate, optionally with one simulated
    observation folded into the causal-prior data.

    The refresh recomputes the prior mean at the candidate and at the arm's
    training inputs via the extended factor models, then reuses the cached
    kernel factorisation to refresh the posterior mean.
    """

    spec = benchmark.spec
    point = np.asarray(candidate.values, dtype=float).reshape(1, -1)
    gp = arm.surrogate.gp
    pts = point if gp.n_train == 0 else np.vstack([point, gp.x_train])
    current = float(gp.posterior(point)[0][0])

    def mu_hat(extra: SampleRow | None) -> float:
        if extra is None or arm.estimand is None:
            return current
        mos_vals = extra.assignment
        needed = set(arm.estimand.variables())
        if not needed <= set(mos_vals) | set(candidate.targets):
            return current
        try:
            if spec.is_discrete():
                source: Dataset | FactorModels = data.copy()
                source.append(
                    SampleRow(assignment=dict(mos_vals), kind="observational"), cost=0.0
                )
                means = np.empty(pts.shape[0])
                for i, pt in enumerate(pts):
                    iv = Intervention(candidate.targets, tuple(float(v) for v in pt))
                    means[i], _ = estimate_causal_effect(
                        arm.estimand, source, iv, seed=_derived_seed(seed, i, 23),
                        domains=spec.domains,
                    )
            elif factor_models is not None:
                extended = factor_models.with_row(mos_vals)
                means, _stds = estimate_effect_batch(
                    arm.estimand,
                    extended,
                    candidate.targets,
                    pts,
                    n_mc=config.refresh_n_mc,
                    seed=_derived_seed(seed, 0, 23),
                )
            else:
                return current
        except EstimationError:
            return current
        if gp.n_train == 0:
            return float(means[0])
        refreshed = gp.posterior_mean_with_prior(point, means[1:], means[:1])
        return float(refreshed[0])

    return mu_hat


def _make_mu_hat_batch(
    arm: _Arm,
    factor_models: FactorModels | None,
    candidate: Intervention,
    mu_hat,
):
    """Vectorised posterior refresh across simulated rows.

    Only single-conditional-factor estimands qualify (the prior is then one
    factor GP and folding a row in is an exact rank-one update); everything
    else falls back to the per-row service.
    """

    from ..estimation.effects import _FlatFactor, _flatten
    from scipy.linalg import solve_triangular

    if arm.estimand is None or factor_models is None:
        return None
    factors: list = []
    try:
        _flatten(arm.estimand.root, {}, set(arm.estimand.variables()), factors)
    except EstimationError:
        return None
    if len(factors) != 1:
        return None
    head = factors[0]
    if head.outcome_orig != (arm.estimand.outcome,):
        return None
    if set(head.given_orig) != set(candidate.targets):
        return None

    surrogate = arm.surrogate.gp
    point = np.asarray(candidate.values, dtype=float).reshape(1, -1)
    order = [candidate.targets.index(v) for v in head.given_orig]

    def mu_hat_batch(rows: list[SampleRow]) -> np.ndarray:
        try:
            factor = factor_models.conditional(head.outcome_orig[0], head.given_orig)
        except EstimationError:
            return np.array([mu_hat(row) for row in rows])
        g = factor.gp
        if g.n_train == 0 or g.chol is None:
            return np.array([mu_hat(row) for row in rows])
        pts = point if surrogate.n_train == 0 else np.vstack([point, surrogate.x_train])
        pts_f = pts[:, order]
        v_pts = solve_triangular(g.chol, g.kernel(g.x_train, pts_f), lower=True, check_finite=False)
        m0_pts = v_pts.T @ g.white
        z = np.array([[row.assignment[v] for v in head.given_orig] for row in rows])
        y_new = np.array([row.assignment[head.outcome_orig[0]] for row in rows])
        v_z = solve_triangular(g.chol, g.kernel(g.x_train, z), lower=True, check_finite=False)
        m0_z = v_z.T @ g.white
        k_cond = g.kernel(pts_f, z) - v_pts.T @ v_z
        c = (
            g.kernel_diag(z)
            + g.hyper.noise_variance
            + g.jitter
            - np.sum(v_z * v_z, axis=0)
        )
        c = np.maximum(c, 1e-12)
        priors = m0_pts[:, None] + k_cond * ((y_new - m0_z) / c)[None, :]  # (P, m)
        if surrogate.n_train == 0:
            return priors[0]
        ks = surrogate.kernel(surrogate.x_train, point)
        vs = solve_triangular(surrogate.chol, ks, lower=True, check_finite=False)
        w = solve_triangular(surrogate.chol.T, vs, lower=False, check_finite=False)[:, 0]
        return priors[0] + float(surrogate.y_train @ w) - w @ priors[1:, :]

    return mu_hat_batch


def _make_simulator(arm: _Arm, benchmark: Benchmark, fitted: FittedScm | None, n_mos_rows: int):
    spec = benchmark.spec
    usable = (
        fitted is not None
        and n_mos_rows >= 2
        and all(v in fitted.models for v in arm.mos)
    )

    def simulate_batch(rng: np.random.Generator, n: int) -> list[SampleRow]:
        if usable:
            assert fitted is not None
            return simulate_observation(fitted, arm.mos, rng, n=n)
        # prior-predictive fallback while the data are too thin: the box
        rows = []
        for _ in range(n):
            assignment = {}
            for name in arm.mos:
                dom = spec.domain(name)
                if isinstance(dom, FiniteSet):
                    assignment[name] = float(rng.choice(np.asarray(dom.values)))
                else:
                    assignment[name] = float(rng.uniform(dom.low, dom.high))
            rows.append(SampleRow(assignment=assignment, kind="observational"))
        return rows

    def simulate(rng: np.random.Generator) -> SampleRow | None:
        return simulate_batch(rng, 1)[0]

    return simulate, simulate_batch


def run_cbo(
    benchmark: Benchmark,
    policy: TradeoffPolicy,
    seed: int,
    cost_model: CostModel | None = None,
    config: CboConfig | None = None,
) -> Trace:
    """Run one budgeted optimisation and return its trace.

    The dataset starts empty; each stage proposes an intervention via
    cost-aware expected improvement, picks the evaluation procedure per the
    policy, and charges the action's cost until nothing affordable remains.
    """

    config = config or CboConfig()
    cost_model = cost_model or CostModel(
        observe_factor=benchmark.observe_cost_per_variable,
        intervene_factor=benchmark.intervene_cost_per_variable,
        budget=benchmark.budget,
        empty_intervention_cost=benchmark.observe_cost_per_variable,
    )
    spec = benchmark.spec
    trace = Trace(scm_name=benchmark.name, policy=policy.label, seed=seed, budget=cost_model.budget)

    arms = _build_arms(benchmark, config, seed)
    bank = SurrogateBank(arms={key: arm.surrogate for key, arm in arms.items()})
    data = Dataset(nodes=spec.nodes)
    factor_models: FactorModels | None = (
        None if spec.is_discrete() else FactorModels(data, hyper=config.gp, max_points=config.factor_max_points)
    )
    fitted: FittedScm | None = None
    rows_since_prior = 0
    rows_since_fit = 0

    for stage in range(1, config.max_stages + 1):
        start = time.perf_counter()
        remaining = cost_model.budget - data.cumulative_cost

        min_intervene = min(
            cost_model.intervene_cost(arm.key) for arm in arms.values()
        )
        min_observe = min(cost_model.observe_cost(arm.mos) for arm in arms.values())
        if min(min_intervene, min_observe) >= remaining:
            break

        # refresh priors and the bank if observations arrived
        if data.n_observations and any(arm.prior_dirty for arm in arms.values()):
            if rows_since_prior >= config.prior_refresh_every or stage == 1 or data.n_observations <= 2:
                source = data if spec.is_discrete() else factor_models
                assert source is not None
                for arm in arms.values():
                    if arm.prior_dirty:
                        _refresh_prior(arm, benchmark, source, config, _derived_seed(seed, stage, 31))
                rows_since_prior = 0
        bank = SurrogateBank(arms={key: arm.surrogate for key, arm in arms.items()})

        incumbent = _incumbent(arms)
        candidate, _score = causal_expected_improvement(
            bank, cost_model.intervene_cost, incumbent, xi=config.ei_xi
        )
        arm = arms[candidate.key()]
        c_int = cost_model.intervene_cost(candidate.targets)
        c_obs = cost_model.observe_cost(arm.mos)

        # policy decision
        if policy.kind == "osco":
            mu_hat = _make_mu_hat(
                arm, benchmark, data, factor_models, candidate, config, _derived_seed(seed, stage, 7)
            )
            simulate, simulate_batch = _make_simulator(
                arm, benchmark, fitted, data.column_matrix(arm.mos).shape[0]
            )
            ctx = StoppingContext(
                dataset=data,
                candidate=candidate,
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
                surrogate=arm.surrogate.gp,
                estimand=arm.estimand,
                info_gain=arm.info,
                ratio_cap=config.ratio_cap,
                mu_hat=mu_hat,
                mu_hat_batch=_make_mu_hat_batch(arm, factor_models, candidate, mu_hat),
                simulate=simulate,
                simulate_batch=simulate_batch,
            )
            decision = decide(ctx, n_mc=config.n_mc_lookahead, seed=_derived_seed(seed, stage, 13))
            action = decision.action
        else:
            coverage = 1.0
            if data.n_observations >= 2:
                ratio = StoppingContext(
                    dataset=data,
                    candidate=candidate,
                    mos=arm.mos,
                    domains=spec.domains,
                    weights=config.weights,
                    gamma=config.gamma,
                    observe_cost=c_obs,
                    intervene_cost=c_int,
                    remaining_budget=remaining,
                    horizon=2,
                    ratio_cap=config.ratio_cap,
                ).coverage_ratio()
                coverage = 1.0 / max(ratio, 1.0)
            else:
                coverage = 0.0
            action = select_tradeoff_baseline(
                policy, data.n_observations, coverage, _rng(seed, stage, 3)
            )

        # budget guard: the stopping rule already forces affordable actions,
        # and a baseline that cannot afford its own action is done
        cost = c_int if action == INTERVENE else c_obs
        if cost >= remaining:
            break

        # execute
        if action == INTERVENE:
            if candidate.is_empty:
                rows = sample_observational(
                    spec, [spec.target], 1, seed=_derived_seed(seed, stage, 17), first_step=stage
                )
                row = SampleRow(
                    assignment=dict(rows[0].assignment),
                    kind="interventional",
                    step_index=stage,
                    intervention=candidate,
                )
            else:
                row = sample_interventional(
                    spec, candidate, 1, seed=_derived_seed(seed, stage, 17), first_step=stage
                )[0]
            data.append(row, cost)
            outcome = row.assignment[spec.target]
            arm.surrogate = arm.surrogate.with_observation(candidate.values, outcome)
        else:
            row = sample_observational(
                spec, arm.mos, 1, seed=_derived_seed(seed, stage, 19), first_step=stage
            )[0]
            data.append(row, cost)
            if factor_models is not None:
                factor_models = factor_models.with_row(row.assignment, row_in_data=True)
            rows_since_prior += 1
            rows_since_fit += 1
            for other in arms.values():
                other.prior_dirty = True
                if set(other.mos) <= set(row.assignment):
                    other.info.add([row.assignment[c] for c in other.mos])
            if fitted is None or rows_since_fit >= config.fscm_refit_every:
                fitted = fit_scm_models(
                    spec.graph,
                    data,
                    domains=spec.domains,
                    hyper=config.gp,
                    max_points=config.fscm_max_points,
                )
                rows_since_fit = 0
            else:
                fitted = fitted.with_row(row.assignment)

        wall_ms = (time.perf_counter() - start) * 1000.0 if config.record_wall else 0.0
        trace.rows.append(
            TraceRow(
                step=stage,
                stage_kind="intervene" if action == INTERVENE else "observe",
                intervention=candidate,
                cost=cost,
                cum_cost=data.cumulative_cost,
                best_mu_hat=_incumbent(arms),
                wall_ms=wall_ms,
            )
        )

    # final recommendation: posterior minimum over every arm's domain grid
    source = data if spec.is_discrete() else factor_models
    if data.n_observations and source is not None:
        for arm in arms.values():
            if arm.prior_dirty:
                _refresh_prior(arm, benchmark, source, config, _derived_seed(seed, 0, 37))
    best_val = math.inf
    best_iv = Intervention()
    for key in sorted(arms, key=lambda k: (len(k), k)):
        arm = arms[key]
        means, _ = arm.surrogate.gp.posterior(arm.surrogate.grid)
        idx = int(np.argmin(means))
        if float(means[idx]) < best_val:
            best_val = float(means[idx])
            best_iv = Intervention(key, tuple(float(v) for v in arm.surrogate.grid[idx]))
    trace.best_intervention = best_iv
    trace.best_mu_hat = best_val

    if config.fill_true_mu:
        for row in trace.rows:
            if row.stage_kind == "intervene":
                mean, _ = mc_ground_truth(
                    spec,
                    row.intervention,
                    n=config.oracle_n_mc,
                    seed=_derived_seed(seed, row.step, 41),
                )
                row.true_mu_at_choice = mean
    trace.check_invariants()
    return trace
