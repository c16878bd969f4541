"""Dataset handling, node-model fitting, simulation and effect estimation."""

import itertools
import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from osco.estimation import (
    Dataset,
    EstimationError,
    FactorModels,
    estimate_causal_effect,
    evaluate_discrete_exact,
    fit_scm_models,
    simulate_observation,
)
from osco.estimation.models import EmpiricalNodeModel, GpNodeModel, TableNodeModel
from osco.identification import CondFactor, Estimand, Identifiable, identify
from osco.scm import (
    Intervention,
    SampleRow,
    ScmError,
    builtin_benchmarks,
    mc_ground_truth,
    sample_observational,
)


@pytest.fixture(scope="module")
def registry():
    return builtin_benchmarks()


def chain_dataset(registry, n, seed=0, columns=("Z", "Y")):
    spec = registry["chain"].spec
    rows = sample_observational(spec, list(columns), n, seed=seed)
    data = Dataset(nodes=spec.nodes)
    data.extend(rows, cost_each=0.25 * len(columns))
    return spec, data


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def test_dataset_cost_accounting(registry):
    _, data = chain_dataset(registry, 10)
    assert data.cumulative_cost == pytest.approx(5.0)
    assert data.n_observations == 10 and data.n_interventions == 0
    data.check_invariants()


def test_dataset_rejects_unknown_columns(registry):
    spec = registry["chain"].spec
    data = Dataset(nodes=spec.nodes)
    with pytest.raises(ScmError):
        data.append(SampleRow(assignment={"Q": 1.0}, kind="observational"), cost=0.1)


def test_dataset_csv_roundtrip_bit_exact(tmp_path, registry):
    spec, data = chain_dataset(registry, 25, seed=3)
    data.append(
        SampleRow(
            assignment={"Z": -3.2, "Y": -2.1718281828459045},
            kind="interventional",
            step_index=26,
            intervention=Intervention(("Z",), (-3.2,)),
        ),
        cost=16.0,
    )
    path = tmp_path / "data.csv"
    data.to_csv(path)
    loaded = Dataset.from_csv(path)
    assert loaded.nodes == data.nodes
    assert loaded.cumulative_cost == data.cumulative_cost
    for a, b in zip(data.rows, loaded.rows):
        assert a.assignment == b.assignment  # exact float equality
        assert a.kind == b.kind and a.step_index == b.step_index
        assert a.intervention == b.intervention
    second = tmp_path / "again.csv"
    loaded.to_csv(second)
    assert path.read_bytes() == second.read_bytes()


# ---------------------------------------------------------------------------
# node models
# ---------------------------------------------------------------------------

def test_fit_chain_models_partial_columns(registry):
    spec, data = chain_dataset(registry, 60)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    assert isinstance(fitted.model_for("Y"), GpNodeModel)
    assert fitted.model_for("Y").parents == ("Z",)
    # X was never observed: Z loses its parent column and becomes a marginal
    assert isinstance(fitted.model_for("Z"), EmpiricalNodeModel)
    with pytest.raises(ScmError):
        fitted.model_for("X")


def test_fitted_y_given_z_matches_mechanism(registry):
    spec, data = chain_dataset(registry, 200, seed=1)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    model = fitted.model_for("Y")
    assert isinstance(model, GpNodeModel)
    mean, _ = model.mean_std(np.array([[0.0]]))
    assert abs(mean[0] - (math.cos(0.0) - 1.0)) <= 0.1


def test_mab_tables_match_empirical_frequencies(registry):
    spec = registry["synthetic_mab"].spec
    rows = sample_observational(spec, list(spec.nodes), 2000, seed=2)
    data = Dataset(nodes=spec.nodes)
    data.extend(rows, cost_each=1.5)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    model = fitted.model_for("W")
    assert isinstance(model, TableNodeModel)
    for b in (0.0, 1.0):
        matching = [r.assignment["W"] for r in rows if r.assignment["B"] == b]
        empirical = np.mean([w == 1.0 for w in matching])
        probs, seen = model.probs((b,))
        assert seen
        assert probs[model.levels.index(1.0)] == pytest.approx(empirical)


def test_simulate_observation_order_and_columns(registry):
    spec, data = chain_dataset(registry, 100, seed=4)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    rows = simulate_observation(fitted, ["Z", "Y"], np.random.default_rng(0), n=5)
    assert all(set(r.assignment) == {"Z", "Y"} for r in rows)


def test_simulated_y_distribution_matches_observational(registry):
    spec, data = chain_dataset(registry, 4000, seed=5)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    sim = simulate_observation(fitted, ["Z", "Y"], np.random.default_rng(1), n=5000)
    sim_y = np.array([r.assignment["Y"] for r in sim])
    obs = sample_observational(spec, ["Y"], 5000, seed=6)
    obs_y = np.array([r.assignment["Y"] for r in obs])
    stat, _ = ks_2samp(sim_y, obs_y)
    assert stat <= 1.628 * math.sqrt(2.0 / 5000)


def test_mab_simulated_marginal_close_to_empirical(registry):
    spec = registry["synthetic_mab"].spec
    rows = sample_observational(spec, list(spec.nodes), 4000, seed=7)
    data = Dataset(nodes=spec.nodes)
    data.extend(rows, cost_each=1.5)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    sim = simulate_observation(fitted, list(spec.nodes), np.random.default_rng(2), n=4000)
    p_sim = np.mean([r.assignment["Y"] for r in sim])
    p_emp = np.mean([r.assignment["Y"] for r in rows])
    assert abs(p_sim - p_emp) < 0.02


def test_simulation_is_stationary(registry):
    spec, data = chain_dataset(registry, 500, seed=8)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    a = simulate_observation(fitted, ["Z", "Y"], np.random.default_rng(3), n=3000)
    b = simulate_observation(fitted, ["Z", "Y"], np.random.default_rng(4), n=3000)
    stat, _ = ks_2samp([r.assignment["Y"] for r in a], [r.assignment["Y"] for r in b])
    assert stat <= 1.628 * math.sqrt(2.0 / 3000)


def test_simulate_requires_fitted_models(registry):
    spec, data = chain_dataset(registry, 30)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    with pytest.raises(ScmError):
        simulate_observation(fitted, ["X"], np.random.default_rng(0))


# ---------------------------------------------------------------------------
# effect estimation
# ---------------------------------------------------------------------------

def test_adjustment_estimate_within_mc_error_of_truth(registry):
    bm = registry["synthetic"]
    rows = sample_observational(bm.spec, list(bm.spec.nodes), 30_000, seed=9)
    data = Dataset(nodes=bm.spec.nodes)
    data.extend(rows, cost_each=1.5)
    result = identify(bm.spec.graph, ["B"], "Y")
    assert isinstance(result, Identifiable)
    est, se = estimate_causal_effect(result.estimand, data, Intervention(("B",), (0.0,)), n_mc=800, seed=1)
    truth, t_se = mc_ground_truth(bm.spec, Intervention(("B",), (0.0,)), n=300_000, seed=2)
    assert abs(est - truth) <= 3 * math.hypot(se, t_se)


def test_empty_intervention_estimate_is_sample_mean(registry):
    bm = registry["chain"]
    spec, data = chain_dataset(registry, 400, seed=10, columns=("X", "Z", "Y"))
    result = identify(spec.graph, [], "Y")
    assert isinstance(result, Identifiable)
    est, se = estimate_causal_effect(result.estimand, data, Intervention(), seed=0)
    y = data.column_matrix(["Y"])[:, 0]
    assert est == pytest.approx(float(y.mean()))
    assert se == pytest.approx(float(y.std(ddof=1) / math.sqrt(len(y))))


def binary_front_door_model():
    """Binary model for the confounded chain, with exact hand enumeration."""

    import osco.scm as scm

    text = """
[nodes]
X Z Y
[edges]
X -> Z
Z -> Y
[bidirected]
X <-> Y
[functions]
X = xor(u_XY, u_X)
Z = xor(X, u_Z)
Y = xor(xor(Z, u_XY), u_Y)
[noise]
u_XY = bernoulli(0.3)
u_X = bernoulli(0.6)
u_Z = bernoulli(0.2)
u_Y = bernoulli(0.1)
[domains]
X = set(0, 1)
Z = set(0, 1)
Y = set(0, 1)
[roles]
manipulative = X Z
non_manipulative = Y
target = Y
"""
    return scm.parse_scm_text(text).spec


def test_front_door_discrete_matches_hand_enumeration():
    spec = binary_front_door_model()
    from osco.scm import exact_discrete_mean, sample_observational as sample

    result = identify(spec.graph, ["X"], "Y")
    assert isinstance(result, Identifiable)
    rows = sample(spec, list(spec.nodes), 60_000, seed=11)
    data = Dataset(nodes=spec.nodes)
    data.extend(rows, cost_each=0.75)
    for x in (0.0, 1.0):
        est, se = estimate_causal_effect(
            result.estimand, data, Intervention(("X",), (x,)), seed=3, domains=spec.domains
        )
        exact = exact_discrete_mean(spec, Intervention(("X",), (x,)))
        assert abs(est - exact) <= max(4 * se, 0.02)


def brute_force_discrete(estimand: Estimand, matrix, columns, iv_env, domains):
    """Independent oracle: expand every sum explicitly over the empirical
    conditional tables and average the outcome."""

    from osco.identification.estimand import CondFactor, Marginal, Product, Quotient

    def prob(outcome, outcome_vals, given, given_vals):
        mask = np.ones(matrix.shape[0], dtype=bool)
        for var, val in zip(given, given_vals):
            mask &= matrix[:, columns.index(var)] == val
        if mask.sum() == 0:
            return 1.0 / max(2 ** len(outcome), 2)
        sub = mask.copy()
        for var, val in zip(outcome, outcome_vals):
            sub &= matrix[:, columns.index(var)] == val
        return sub.sum() / mask.sum()

    def value(node, env):
        if isinstance(node, CondFactor):
            return prob(
                node.outcome,
                tuple(env[v] for v in node.outcome),
                node.given,
                tuple(env[v] for v in node.given),
            )
        if isinstance(node, Marginal):
            total = 0.0
            levels = [(0.0, 1.0)] * len(node.over)
            for combo in itertools.product(*levels):
                inner = dict(env)
                inner.update(dict(zip(node.over, combo)))
                total += value(node.child, inner)
            return total
        if isinstance(node, Product):
            out = 1.0
            for child in node.children:
                out *= value(child, env)
            return out
        if isinstance(node, Quotient):
            den = value(node.denominator, env)
            return 0.0 if den == 0 else value(node.numerator, env) / den
        raise TypeError(node)

    weights = [value(estimand.root, {**iv_env, estimand.outcome: y}) for y in (0.0, 1.0)]
    total = sum(weights)
    return (0.0 * weights[0] + 1.0 * weights[1]) / total if total > 0 else 0.5


def test_discrete_plug_in_equals_brute_force_exactly(registry):
    for name in ("synthetic_mab",):
        bm = registry[name]
        rows = sample_observational(bm.spec, list(bm.spec.nodes), 600, seed=12)
        data = Dataset(nodes=bm.spec.nodes)
        data.extend(rows, cost_each=1.5)
        for targets in (("W",), ("B", "W"), ()):
            result = identify(bm.spec.graph, targets, bm.spec.target)
            assert isinstance(result, Identifiable)
            columns = tuple(sorted(result.estimand.variables()))
            matrix = data.column_matrix(columns)
            for values in itertools.product(*[[0.0, 1.0]] * len(targets)):
                env = dict(zip(targets, values))
                mine, _ = evaluate_discrete_exact(
                    result.estimand, matrix, columns, env, bm.spec.domains
                )
                oracle = brute_force_discrete(result.estimand, matrix, list(columns), env, bm.spec.domains)
                assert mine == pytest.approx(oracle, abs=1e-12)


def test_estimator_consistency_medians_non_increasing(registry):
    """On the chain, the plug-in error for do(Z=z) shrinks with data size
    (median over seeds)."""

    bm = registry["chain"]
    result = identify(bm.spec.graph, ["Z"], "Y")
    assert isinstance(result, Identifiable)
    truths = {
        z: mc_ground_truth(bm.spec, Intervention(("Z",), (z,)), n=200_000, seed=99)[0]
        for z in (-3.0, 0.0, 5.0)
    }
    medians = []
    for n in (100, 1000, 10_000):
        errors = {z: [] for z in truths}
        for seed in range(10):
            rows = sample_observational(bm.spec, ["Z", "Y"], n, seed=1000 + seed)
            data = Dataset(nodes=bm.spec.nodes)
            data.extend(rows, cost_each=0.5)
            models = FactorModels(data, max_points=1500)
            for z in truths:
                est, _ = estimate_causal_effect(
                    result.estimand, models, Intervention(("Z",), (z,)), n_mc=200, seed=seed
                )
                errors[z].append(abs(est - truths[z]))
        medians.append({z: float(np.median(errors[z])) for z in truths})
    for z in (-3.0, 0.0, 5.0):
        series = [m[z] for m in medians]
        # non-increasing up to the estimator noise floor
        for prev, nxt in zip(series, series[1:]):
            assert nxt <= prev + max(0.005, 0.05 * prev), (z, series)


def test_estimate_requires_matching_targets(registry):
    bm = registry["chain"]
    result = identify(bm.spec.graph, ["Z"], "Y")
    spec, data = chain_dataset(registry, 50)
    with pytest.raises(EstimationError):
        estimate_causal_effect(result.estimand, data, Intervention(("X",), (0.0,)), seed=0)


def test_estimate_from_fitted_scm(registry):
    spec, data = chain_dataset(registry, 1500, seed=13)
    fitted = fit_scm_models(spec.graph, data, domains=spec.domains)
    result = identify(spec.graph, ["Z"], "Y")
    est, se = estimate_causal_effect(result.estimand, fitted, Intervention(("Z",), (2.0,)), seed=5)
    truth, _ = mc_ground_truth(spec, Intervention(("Z",), (2.0,)), n=100_000, seed=6)
    assert abs(est - truth) <= max(3 * se, 0.15)
