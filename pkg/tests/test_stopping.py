"""Stopping reward, the lookahead decision and the dynamic-programming
oracle for the stopping-theory properties."""

import math

import numpy as np
import pytest

from osco.estimation import Dataset
from osco.scm import Intervention, Interval, SampleRow, builtin_benchmarks
from osco.stopping import (
    INTERVENE,
    OBSERVE,
    StoppingContext,
    StoppingWeights,
    backward_induction_oracle,
    decide,
    lookahead_stop_set,
    lookahead_value,
    make_monotone_instance,
    make_random_instance,
    stopping_reward,
    volume_ratio,
)
from osco.stopping.oracle import StoppingInstance


@pytest.fixture(scope="module")
def registry():
    return builtin_benchmarks()


# ---------------------------------------------------------------------------
# volume ratio
# ---------------------------------------------------------------------------

CHAIN_DOMAINS = {"Z": Interval(-5, 20), "Y": Interval(-5, 5)}


def test_volume_full_coverage_is_one():
    observed = np.array([[-5.0, -5.0], [20.0, 5.0]])
    assert volume_ratio(CHAIN_DOMAINS, ["Z", "Y"], observed) == pytest.approx(1.0)


def test_volume_empty_dataset_capped():
    assert volume_ratio(CHAIN_DOMAINS, ["Z", "Y"], np.empty((0, 2))) == 100.0
    assert volume_ratio(CHAIN_DOMAINS, ["Z", "Y"], np.array([[0.0, 0.0]])) == 100.0


def test_volume_hand_computed_boxes():
    # observed Z in [-5, 7.5], Y in [-5, 0]: (25*10)/(12.5*5) = 4
    observed = np.array([[-5.0, -5.0], [7.5, 0.0]])
    assert volume_ratio(CHAIN_DOMAINS, ["Z", "Y"], observed) == pytest.approx(4.0)


def test_volume_degenerate_column_capped():
    observed = np.array([[1.0, -5.0], [1.0, 5.0]])
    assert volume_ratio(CHAIN_DOMAINS, ["Z", "Y"], observed) == 100.0


# ---------------------------------------------------------------------------
# stopping reward
# ---------------------------------------------------------------------------

class FakeGain:
    def __init__(self, gain, increment=0.0):
        self.gain = gain
        self._inc = increment

    def peek(self, row):
        return self.gain + self._inc

    def peek_batch(self, rows):
        return np.full(np.asarray(rows).shape[0], self.gain + self._inc)


def make_ctx(registry, **overrides):
    spec = registry["chain"].spec
    data = overrides.pop("dataset", Dataset(nodes=spec.nodes))
    defaults = dict(
        dataset=data,
        candidate=Intervention(("Z",), (0.0,)),
        mos=("Z", "Y"),
        domains=spec.domains,
        weights=StoppingWeights(eta=2.0, kappa=1.0, tau=5.0),
        gamma=1.0,
        observe_cost=0.5,
        intervene_cost=16.0,
        remaining_budget=300.0,
        horizon=500,
    )
    defaults.update(overrides)
    return StoppingContext(**defaults)


def test_terminal_reward_is_zero(registry):
    ctx = make_ctx(registry, terminal=True)
    assert stopping_reward(ctx) == 0.0


def test_horizon_reward_keeps_only_information_term(registry):
    ctx = make_ctx(registry, info_gain=FakeGain(1.25))
    assert stopping_reward(ctx, at_horizon=True) == pytest.approx(2.0 * 1.25)
    empty = make_ctx(registry)
    assert stopping_reward(empty, at_horizon=True) == 0.0


def test_reward_arithmetic_example(registry):
    """eta=2, kappa=1, tau=5, I=1, mu=-0.5, ratio=2, c=16 -> -23.5"""

    spec = registry["chain"].spec
    data = Dataset(nodes=spec.nodes)
    data.append(SampleRow(assignment={"Z": -5.0, "Y": -5.0}, kind="observational"), 0.5)
    data.append(SampleRow(assignment={"Z": 7.5, "Y": 0.0}, kind="observational"), 0.5)
    ctx = make_ctx(
        registry,
        dataset=data,
        info_gain=FakeGain(1.0),
        mu_hat=lambda extra: -0.5,
    )
    assert ctx.coverage_ratio() == pytest.approx(4.0)
    # adjust tau so the ratio term contributes 10 like the worked example
    ctx.weights = StoppingWeights(eta=2.0, kappa=1.0, tau=2.5)
    assert stopping_reward(ctx) == pytest.approx(2.0 + 0.5 - 10.0 - 16.0)


def test_direction_flag_negates_objective(registry):
    ctx = make_ctx(registry, mu_hat=lambda extra: -0.5, direction="max")
    assert ctx.objective_estimate() == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# decide
# ---------------------------------------------------------------------------

def _uniform_simulator(spec, mos):
    def simulate(rng):
        return SampleRow(
            assignment={
                name: float(rng.uniform(spec.domain(name).low, spec.domain(name).high))
                for name in mos
            },
            kind="observational",
        )

    return simulate


def test_huge_observation_cost_forces_intervene(registry):
    spec = registry["chain"].spec
    from osco.surrogate import GpHyper, InfoGainAccumulator

    ctx = make_ctx(
        registry,
        observe_cost=1e9,
        remaining_budget=1e12,
        info_gain=InfoGainAccumulator(GpHyper(), dim=2),
        mu_hat=lambda extra: 0.0,
        simulate=_uniform_simulator(spec, ("Z", "Y")),
    )
    assert decide(ctx, n_mc=5, seed=0).action == INTERVENE


def test_not_identifiable_skips_simulation(registry):
    def boom(rng):
        raise AssertionError("simulation must not run")

    ctx = make_ctx(registry, identifiable=False, simulate=boom)
    decision = decide(ctx, n_mc=5, seed=0)
    assert decision.action == INTERVENE
    assert decision.expected_next is None
    assert "identifiable" in decision.diagnostics[0]


def test_empty_dataset_observes(registry):
    """With no data the coverage and information terms make one cheap
    observation clearly worthwhile (the observation-heavy start)."""

    spec = registry["chain"].spec
    from osco.surrogate import GpHyper, InfoGainAccumulator

    ctx = make_ctx(
        registry,
        info_gain=InfoGainAccumulator(GpHyper(), dim=2),
        mu_hat=lambda extra: 0.0,
        simulate=_uniform_simulator(spec, ("Z", "Y")),
    )
    decision = decide(ctx, n_mc=10, seed=0)
    assert decision.action == OBSERVE
    assert decision.expected_next is not None


def test_decide_monotone_in_observation_cost(registry):
    spec = registry["chain"].spec
    from osco.surrogate import GpHyper, InfoGainAccumulator

    rng = np.random.default_rng(0)
    data = Dataset(nodes=spec.nodes)
    info = InfoGainAccumulator(GpHyper(), dim=2)
    for _ in range(6):
        row = {"Z": float(rng.uniform(-5, 20)), "Y": float(rng.uniform(-5, 5))}
        data.append(SampleRow(assignment=row, kind="observational"), 0.5)
        info.add([row["Z"], row["Y"]])
    previous = OBSERVE
    for cost in (0.01, 0.5, 2.0, 8.0, 32.0, 128.0):
        ctx = make_ctx(
            registry,
            dataset=data,
            observe_cost=cost,
            info_gain=info,
            mu_hat=lambda extra: 0.0,
            simulate=_uniform_simulator(spec, ("Z", "Y")),
        )
        action = decide(ctx, n_mc=8, seed=42).action
        if previous == INTERVENE:
            assert action == INTERVENE  # raising the cost never flips back
        previous = action
    assert previous == INTERVENE


def test_budget_boundary_forces_feasible_action(registry):
    spec = registry["chain"].spec
    ctx = make_ctx(
        registry,
        remaining_budget=16.4,  # observe would strand the intervention
        simulate=_uniform_simulator(spec, ("Z", "Y")),
        mu_hat=lambda extra: 0.0,
    )
    decision = decide(ctx, n_mc=4, seed=1)
    assert decision.action == INTERVENE
    assert any("budget" in d for d in decision.diagnostics)

    ctx = make_ctx(
        registry,
        remaining_budget=4.0,  # intervention no longer affordable at all
        simulate=_uniform_simulator(spec, ("Z", "Y")),
        mu_hat=lambda extra: 0.0,
    )
    assert decide(ctx, n_mc=4, seed=1).action == OBSERVE


def test_simulation_failure_reports_and_intervenes(registry):
    def broken(rng):
        raise RuntimeError("no coverage")

    ctx = make_ctx(registry, simulate=broken, mu_hat=lambda extra: 0.0)
    decision = decide(ctx, n_mc=3, seed=0)
    assert decision.action == INTERVENE
    assert "simulation failed" in decision.diagnostics[0]


def test_decision_always_exists_randomised(registry):
    spec = registry["chain"].spec
    rng = np.random.default_rng(9)
    for trial in range(30):
        data = Dataset(nodes=spec.nodes)
        for _ in range(int(rng.integers(0, 8))):
            row = {"Z": float(rng.uniform(-5, 20)), "Y": float(rng.uniform(-5, 5))}
            data.append(SampleRow(assignment=row, kind="observational"), 0.5)
        ctx = make_ctx(
            registry,
            dataset=data,
            remaining_budget=float(rng.uniform(1.0, 300.0)),
            observe_cost=float(rng.uniform(0.1, 2.0)),
            intervene_cost=float(rng.uniform(1.0, 64.0)),
            horizon=int(rng.integers(1, 400)),
            mu_hat=lambda extra: float(rng.normal()),
            simulate=_uniform_simulator(spec, ("Z", "Y")),
        )
        decision = decide(ctx, n_mc=4, seed=trial)
        assert decision.action in (INTERVENE, OBSERVE)


# ---------------------------------------------------------------------------
# the dynamic-programming oracle
# ---------------------------------------------------------------------------

def test_horizon_one_stops_everywhere():
    inst = StoppingInstance(
        kernel=np.array([[0.0, 1.0], [0.0, 1.0]]),
        stop_reward=np.array([1.0, -2.0]),
        continue_cost=0.1,
        horizon=1,
    )
    sol = backward_induction_oracle(inst)
    np.testing.assert_array_equal(sol.value_at_start(), inst.stop_reward)
    assert sol.stop_sets[0] == frozenset({0, 1})


def test_zero_cost_constant_reward_ties_stop():
    inst = StoppingInstance(
        kernel=np.array([[0.0, 1.0], [0.0, 1.0]]),
        stop_reward=np.array([1.0, 1.0]),
        continue_cost=0.0,
        horizon=4,
    )
    sol = backward_induction_oracle(inst)
    assert lookahead_stop_set(inst) == frozenset({0, 1})
    np.testing.assert_array_equal(sol.value_at_start(), inst.stop_reward)


def test_monotone_instances_lookahead_is_optimal():
    rng = np.random.default_rng(10)
    for _ in range(40):
        inst = make_monotone_instance(int(rng.integers(3, 21)), int(rng.integers(2, 16)), rng)
        sol = backward_induction_oracle(inst)
        la = lookahead_stop_set(inst)
        assert all(s == la for s in sol.stop_sets[1:])
        for state in la:
            successors = np.flatnonzero(inst.kernel[state])
            assert all(int(t) in la for t in successors)
        np.testing.assert_array_equal(lookahead_value(inst), sol.value_at_start())


def test_dp_dominates_lookahead_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(25):
        inst = make_random_instance(int(rng.integers(3, 15)), int(rng.integers(2, 10)), rng)
        sol = backward_induction_oracle(inst)
        assert np.all(lookahead_value(inst) <= sol.value_at_start() + 1e-12)


def test_dp_monotone_stop_sets():
    rng = np.random.default_rng(12)
    for _ in range(25):
        inst = make_random_instance(int(rng.integers(3, 15)), int(rng.integers(3, 10)), rng)
        sol = backward_induction_oracle(inst)
        for bigger, smaller in zip(sol.stop_sets[1:], sol.stop_sets[2:]):
            assert smaller <= bigger


def test_discounted_instance_validates():
    with pytest.raises(ValueError):
        StoppingInstance(
            kernel=np.array([[0.5, 0.4]]),  # not square
            stop_reward=np.array([0.0]),
            continue_cost=0.1,
        )
