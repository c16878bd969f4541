"""Exact dynamic programming for finite observe-or-stop problems.

Used to validate the one-step-lookahead rule: on instances whose expected
reward increments shrink along every transition (the margin structure the
closure result assumes), the lookahead policy must match the exact optimum
and all stopping sets must coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StoppingInstance",
    "DpSolution",
    "backward_induction_oracle",
    "lookahead_stop_set",
    "lookahead_value",
    "make_monotone_instance",
    "make_random_instance",
]


@dataclass(frozen=True)
class StoppingInstance:
    """Finite-state stopping problem: stop collects ``stop_reward`` and ends
    the process; continue pays ``continue_cost`` and moves by ``kernel``."""

    kernel: np.ndarray  # (n, n) row-stochastic
    stop_reward: np.ndarray  # (n,)
    continue_cost: float
    gamma: float = 1.0
    horizon: int = 5

    def __post_init__(self) -> None:
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise ValueError("kernel must be square")
        if not np.allclose(kernel.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("kernel rows must sum to one")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    @property
    def n_states(self) -> int:
        return int(np.asarray(self.stop_reward).shape[0])


@dataclass(frozen=True)
class DpSolution:
    """Value per (remaining steps, state) plus the stopping sets.

    ``values[l]`` is V* with ``l`` steps remaining (``values[0]`` is the
    forced stop); ``stop_sets[l]`` for l >= 1 lists states where stopping is
    optimal with ``l`` steps remaining (ties stop).
    """

    values: np.ndarray  # (horizon, n)
    stop_sets: list[frozenset[int]]

    def value_at_start(self) -> np.ndarray:
        return self.values[-1]


def backward_induction_oracle(instance: StoppingInstance) -> DpSolution:
    """Solve the Bellman recursion exactly.

    V_0 = r;  V_l(s) = max(r(s), gamma * E[V_{l-1}(s')] - c).
    """

    r = np.asarray(instance.stop_reward, dtype=float)
    kernel = np.asarray(instance.kernel, dtype=float)
    values = np.empty((instance.horizon, instance.n_states))
    values[0] = r
    stop_sets: list[frozenset[int]] = [frozenset(range(instance.n_states))]
    for l in range(1, instance.horizon):
        cont = instance.gamma * kernel @ values[l - 1] - instance.continue_cost
        values[l] = np.maximum(r, cont)
        stop_sets.append(frozenset(np.flatnonzero(r >= cont).tolist()))
    return DpSolution(values=values, stop_sets=stop_sets)


def lookahead_stop_set(instance: StoppingInstance) -> frozenset[int]:
    """States where stopping now beats one more observation then stopping."""

    r = np.asarray(instance.stop_reward, dtype=float)
    one_step = instance.gamma * np.asarray(instance.kernel) @ r - instance.continue_cost
    return frozenset(np.flatnonzero(r >= one_step).tolist())


def lookahead_value(instance: StoppingInstance) -> np.ndarray:
    """Exact value of the one-step-lookahead policy from every start state."""

    stop = lookahead_stop_set(instance)
    r = np.asarray(instance.stop_reward, dtype=float)
    kernel = np.asarray(instance.kernel, dtype=float)
    values = np.empty((instance.horizon, instance.n_states))
    values[0] = r
    stop_mask = np.zeros(instance.n_states, dtype=bool)
    stop_mask[list(stop)] = True
    for l in range(1, instance.horizon):
        cont = instance.gamma * kernel @ values[l - 1] - instance.continue_cost
        values[l] = np.where(stop_mask, r, cont)
    return values[-1]


def _random_upper_kernel(n: int, rng: np.random.Generator) -> np.ndarray:
    """Row-stochastic kernel whose mass moves strictly forward; the last
    state is absorbing (datasets only grow)."""

    kernel = np.zeros((n, n))
    for i in range(n - 1):
        weights = rng.random(n - i - 1) + 1e-3
        kernel[i, i + 1 :] = weights / weights.sum()
    kernel[n - 1, n - 1] = 1.0
    return kernel


def make_monotone_instance(
    n_states: int,
    horizon: int,
    rng: np.random.Generator,
    cost_scale: float = 1.0,
) -> StoppingInstance:
    """Instance satisfying the shrinking-increment structure.

    The expected one-step reward increment h(s) = E[r(s')|s] - r(s) is made
    non-increasing along every transition (a diminishing information gain
    plus a growing exploitation term produce exactly this shape), which
    keeps the one-step-lookahead stopping set closed.
    """

    kernel = _random_upper_kernel(n_states, rng)
    # nonnegative increments, non-increasing in the state index
    h = np.sort(rng.exponential(scale=1.0, size=n_states))[::-1].copy()
    h[n_states - 1] = 0.0  # absorbing state gains nothing
    for i in range(n_states - 2, -1, -1):
        successors = np.flatnonzero(kernel[i])
        h[i] = max(h[i], h[successors].max())
    reward = np.empty(n_states)
    reward[n_states - 1] = rng.normal()
    for i in range(n_states - 2, -1, -1):
        reward[i] = float(kernel[i] @ reward) - h[i]
    cost = float(rng.uniform(0.05, 1.5)) * cost_scale
    return StoppingInstance(
        kernel=kernel,
        stop_reward=reward,
        continue_cost=cost,
        gamma=1.0,
        horizon=horizon,
    )


def make_random_instance(
    n_states: int,
    horizon: int,
    rng: np.random.Generator,
) -> StoppingInstance:
    """Unconstrained instance (no monotone structure guaranteed)."""

    kernel = _random_upper_kernel(n_states, rng)
    reward = rng.normal(size=n_states) * rng.uniform(0.5, 3.0)
    return StoppingInstance(
        kernel=kernel,
        stop_reward=reward,
        continue_cost=float(rng.uniform(0.0, 1.0)),
        gamma=1.0,
        horizon=horizon,
    )
