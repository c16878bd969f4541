"""Model definition, validation and sampling tests."""

import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from osco.scm import (
    CausalGraph,
    FiniteSet,
    GraphError,
    Intervention,
    Interval,
    NoiseDist,
    ScmError,
    ScmSpec,
    builtin_benchmarks,
    exact_discrete_mean,
    get_benchmark,
    grid_minimum,
    mc_ground_truth,
    mutilate,
    parse_expr,
    parse_scm_text,
    sample_interventional,
    sample_observational,
    validate,
)
from osco.scm.expr import ExprError, eval_expr
from osco.scm.scmfile import ScmFileError


@pytest.fixture(scope="module")
def registry():
    return builtin_benchmarks()


# ---------------------------------------------------------------------------
# expression language
# ---------------------------------------------------------------------------

def test_expr_eval_matches_numpy():
    expr = parse_expr("cos(Z) - exp(-Z / 20) + eps")
    z = np.linspace(-3, 3, 7)
    got = eval_expr(expr, {"Z": z, "eps": 0.0})
    np.testing.assert_allclose(got, np.cos(z) - np.exp(-z / 20))


def test_expr_xor_and_sigmoid():
    expr = parse_expr("xor(xor(a, b), c)")
    assert eval_expr(expr, {"a": 1.0, "b": 0.0, "c": 1.0}) == 0.0
    sig = parse_expr("sigmoid(0)")
    assert eval_expr(sig, {}) == pytest.approx(0.5)


def test_expr_rejects_garbage():
    with pytest.raises(ExprError):
        parse_expr("Z +")
    with pytest.raises(ExprError):
        parse_expr("foo(Z)")
    with pytest.raises(ExprError):
        eval_expr(parse_expr("missing + 1"), {})


# ---------------------------------------------------------------------------
# graphs and mutilation
# ---------------------------------------------------------------------------

def fig1a_graph() -> CausalGraph:
    return CausalGraph.create(["X", "Z", "Y"], [("X", "Z"), ("Z", "Y")], [("X", "Y")])


def fig2a_graph() -> CausalGraph:
    return CausalGraph.create(
        ["S", "B", "Z", "W", "X", "Y"],
        [("S", "B"), ("B", "W"), ("B", "X"), ("Z", "X"), ("W", "Y"), ("X", "Y")],
        [("S", "Y"), ("Z", "Y")],
    )


def test_mutilate_fig1a_do_x_gives_plain_chain():
    cut = mutilate(fig1a_graph(), {"X"})
    assert cut.directed_edges == frozenset({("X", "Z"), ("Z", "Y")})
    assert cut.bidirected_edges == frozenset()
    assert cut.nodes == ("X", "Z", "Y")


def test_mutilate_empty_is_identity():
    g = fig2a_graph()
    assert mutilate(g, set()) == g


def test_mutilate_fig2a_do_b_removes_incoming_edge():
    cut = mutilate(fig2a_graph(), {"B"})
    assert ("S", "B") not in cut.directed_edges
    assert cut.directed_edges == fig2a_graph().directed_edges - {("S", "B")}
    assert cut.bidirected_edges == fig2a_graph().bidirected_edges


def test_mutilate_idempotent_and_monotone():
    rng = np.random.default_rng(7)
    g = fig2a_graph()
    nodes = list(g.nodes)
    for _ in range(50):
        a = {n for n in nodes if rng.random() < 0.4}
        b = {n for n in nodes if rng.random() < 0.4}
        once = mutilate(g, a)
        assert mutilate(once, a) == once
        bigger = mutilate(g, a | b)
        assert bigger.directed_edges <= once.directed_edges
        assert bigger.bidirected_edges <= once.bidirected_edges


def test_mutilate_unknown_variable():
    with pytest.raises(GraphError):
        mutilate(fig1a_graph(), {"Q"})


def test_cycle_detected():
    with pytest.raises(GraphError):
        CausalGraph.create(["A", "B"], [("A", "B"), ("B", "A")])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_chain_clean(registry):
    assert validate(registry["chain"].spec).ok


def test_validate_all_builtins_clean(registry):
    for name, bm in registry.items():
        report = validate(bm.spec)
        assert report.ok, f"{name}: {report.problems}"


def test_validate_self_loop_flagged(registry):
    chain = registry["chain"].spec
    bad_graph = CausalGraph(
        nodes=chain.graph.nodes,
        directed_edges=chain.graph.directed_edges | {("Y", "Y")},
        bidirected_edges=chain.graph.bidirected_edges,
    )
    report = validate(
        ScmSpec(
            graph=bad_graph,
            functions=chain.functions,
            noise=chain.noise,
            manipulative=chain.manipulative,
            non_manipulative=chain.non_manipulative,
            target=chain.target,
            domains=chain.domains,
        )
    )
    assert any("self-loop" in p or "cycle" in p for p in report.problems)


def test_validate_shared_noise_needs_bidirected(registry):
    chain = registry["chain"].spec
    functions = dict(chain.functions)
    functions["X"] = parse_expr("eps_X + eps_XY")
    functions["Y"] = parse_expr("cos(Z) - exp(-Z / 20) + eps_Y + eps_XY")
    noise = dict(chain.noise)
    noise["eps_XY"] = NoiseDist.normal(0, 1)
    report = validate(
        ScmSpec(
            graph=chain.graph,
            functions=functions,
            noise=noise,
            manipulative=chain.manipulative,
            non_manipulative=chain.non_manipulative,
            target=chain.target,
            domains=chain.domains,
        )
    )
    assert any("share a noise term" in p for p in report.problems)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_observational_mean_of_z_is_lognormal_mean(registry):
    # E[Z] = E[e^{-X}] with X ~ N(0,1), i.e. e^{1/2}
    n = 10_000
    rows = sample_observational(registry["chain"].spec, ["Z", "Y"], n, seed=11)
    z = np.array([r.assignment["Z"] for r in rows])
    target = math.exp(0.5)
    # MC tolerance: 3 sigma of the sample-mean error
    sigma = math.sqrt(math.exp(2) - math.exp(1) + 0.25)
    assert abs(z.mean() - target) < 3 * sigma / math.sqrt(n)
    assert set(rows[0].assignment) == {"Z", "Y"}


def test_sampling_deterministic(registry):
    spec = registry["chain"].spec
    one = sample_observational(spec, ["Z", "Y"], 1, seed=42)[0]
    two = sample_observational(spec, ["Z", "Y"], 1, seed=42)[0]
    assert one.assignment == two.assignment


def test_mab_marginal_probability(registry):
    # P(Z=1) = 1 - P(u_ZY xor u_Z = 1) = 1 - (0.05*0.2 + 0.95*0.8) = 0.23
    spec = registry["synthetic_mab"].spec
    rows = sample_observational(spec, list(spec.nodes), 100_000, seed=3)
    pz = np.mean([r.assignment["Z"] for r in rows])
    assert abs(pz - 0.23) < 0.01


def test_interventional_chain_optimum_value(registry):
    spec = registry["chain"].spec
    rows = sample_interventional(spec, Intervention(("Z",), (-3.2,)), 10_000, seed=5)
    y = np.array([r.assignment["Y"] for r in rows])
    assert abs(y.mean() - (-2.17)) < 0.05
    assert all(r.assignment["Z"] == -3.2 for r in rows[:5])


def test_interventional_chain_zero(registry):
    spec = registry["chain"].spec
    rows = sample_interventional(spec, Intervention(("Z",), (0.0,)), 10_000, seed=6)
    y = np.mean([r.assignment["Y"] for r in rows])
    assert abs(y - 0.0) < 0.05


def test_interventional_value_outside_domain(registry):
    spec = registry["chain"].spec
    with pytest.raises(ScmError):
        sample_interventional(spec, Intervention(("Z",), (50.0,)), 1, seed=0)


def test_psa_do_matches_direct_simulation_oracle(registry):
    """Brute-force oracle: simulate the health-care equations directly with
    numpy and compare the mean outcome under do(C=0, D=1)."""

    n = 100_000
    rng = np.random.default_rng(123)
    a = rng.uniform(55, 75, n)
    b = 27.0 - 0.01 * a + rng.normal(0, math.sqrt(0.7), n)
    c = np.full(n, 0.0)
    d = np.full(n, 1.0)
    e = 1.0 / (1.0 + np.exp(-(2.2 - 0.05 * a + 0.01 * b - 0.04 * d + 0.02 * c)))
    f = 6.8 + 0.04 * a - 0.15 * b - 0.60 * d + 0.55 * c + e + rng.normal(0, math.sqrt(0.4), n)
    oracle_mean = f.mean()
    oracle_se = f.std(ddof=1) / math.sqrt(n)

    spec = registry["psa"].spec
    rows = sample_interventional(spec, Intervention(("C", "D"), (0.0, 1.0)), n, seed=321)
    got = np.mean([r.assignment["F"] for r in rows])
    got_se = np.std([r.assignment["F"] for r in rows], ddof=1) / math.sqrt(n)
    assert abs(got - oracle_mean) < 3 * math.hypot(oracle_se, got_se)


def test_interventional_on_parents_matches_direct_function_eval(registry):
    """do(Z=1) on the chain must equal cos(1) - e^{-1/20} plus the target
    noise, distributionally (two-sample KS)."""

    spec = registry["chain"].spec
    n = 10_000
    rows = sample_interventional(spec, Intervention(("Z",), (1.0,)), n, seed=9)
    sampled = np.array([r.assignment["Y"] for r in rows])
    rng = np.random.default_rng(20)
    direct = math.cos(1.0) - math.exp(-1.0 / 20.0) + rng.normal(0, 0.1, n)
    stat, _ = ks_2samp(sampled, direct)
    # alpha = 0.01 critical value for the two-sample KS statistic
    threshold = 1.628 * math.sqrt(2.0 / n)
    assert stat <= threshold


def test_mc_ground_truth_chain(registry):
    spec = registry["chain"].spec
    mean, se = mc_ground_truth(spec, Intervention(("Z",), (-3.2,)), n=100_000, seed=1)
    assert abs(mean - (-2.17)) < 0.05
    assert se < 0.01


def test_mc_ground_truth_empty_is_observational_mean(registry):
    spec = registry["chain_uc"].spec
    mean, _ = mc_ground_truth(spec, Intervention(), n=200_000, seed=2)
    rows = sample_observational(spec, ["Y"], 200_000, seed=3)
    obs = np.mean([r.assignment["Y"] for r in rows])
    assert abs(mean - obs) < 0.02


def test_grid_minimum_coarse(registry):
    spec = registry["chain"].spec
    argmin, value, _ = grid_minimum(spec, ("Z",), step=0.05, n_mc=20_000, seed=4)
    assert abs(argmin[0] - (-3.2)) <= 0.1
    assert abs(value - (-2.17)) <= 0.05


# ---------------------------------------------------------------------------
# the registry and the model-file format
# ---------------------------------------------------------------------------

def test_registry_contents(registry):
    assert set(registry) == {"chain", "chain_uc", "synthetic", "psa", "synthetic_mab"}
    assert registry["chain"].spec.domain("Z") == Interval(-5, 20)
    assert registry["psa"].spec.manipulative == {"D", "C"}
    assert "xor" in str(registry["synthetic_mab"].spec.functions["Y"])
    assert registry["chain_uc"].spec.noise["eps_Z"] == NoiseDist.normal(-1, 0.5)


def test_registry_costs_and_budget(registry):
    for bm in registry.values():
        assert bm.observe_cost_per_variable == 0.25
        assert bm.intervene_cost_per_variable == 16.0
        assert bm.budget == 300.0


def test_exact_discrete_mean_matches_sampling(registry):
    spec = registry["synthetic_mab"].spec
    iv = Intervention(("W",), (1.0,))
    exact = exact_discrete_mean(spec, iv)
    mc, se = mc_ground_truth(spec, iv, n=200_000, seed=8)
    assert abs(exact - mc) < 4 * se


def test_scm_file_error_reports_line():
    bad = "[nodes]\nX Y\n[functions]\nX = exp(\n"
    with pytest.raises((ScmFileError, ExprError)):
        parse_scm_text(bad)
    with pytest.raises(ScmFileError) as err:
        parse_scm_text("[nodes]\nX\n[unknown]\n")
    assert "line 3" in str(err.value)


def test_scm_file_requires_roles():
    text = "[nodes]\nX\n[functions]\nX = eps\n[noise]\neps = normal(0, 1)\n[domains]\nX = interval(0, 1)\n"
    with pytest.raises(ScmFileError):
        parse_scm_text(text)


def test_discrete_domain_helpers():
    dom = FiniteSet((0.0, 1.0))
    assert dom.contains(1.0) and not dom.contains(0.5)
    assert dom.width == 1.0
