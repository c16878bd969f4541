"""Observe-or-intervene trade-off policies (the heuristic baselines)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TradeoffPolicy", "select_tradeoff_baseline"]

_KINDS = ("osco", "always_intervene", "always_observe", "random", "epsilon_greedy")


@dataclass(frozen=True)
class TradeoffPolicy:
    kind: str
    p_observe: float = 0.5
    coverage_target: int = 200

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; choose from {_KINDS}")
        if not 0.0 <= self.p_observe <= 1.0:
            raise ValueError("p_observe must lie in [0, 1]")
        if self.coverage_target < 1:
            raise ValueError("coverage_target must be positive")

    @staticmethod
    def osco() -> "TradeoffPolicy":
        return TradeoffPolicy("osco")

    @staticmethod
    def always_intervene() -> "TradeoffPolicy":
        return TradeoffPolicy("always_intervene")

    @staticmethod
    def always_observe() -> "TradeoffPolicy":
        return TradeoffPolicy("always_observe")

    @staticmethod
    def random(p_observe: float = 0.5) -> "TradeoffPolicy":
        return TradeoffPolicy("random", p_observe=p_observe)

    @staticmethod
    def epsilon_greedy(coverage_target: int = 200) -> "TradeoffPolicy":
        return TradeoffPolicy("epsilon_greedy", coverage_target=coverage_target)

    @property
    def label(self) -> str:
        if self.kind == "random":
            return f"random{self.p_observe:g}"
        return self.kind


def select_tradeoff_baseline(
    policy: TradeoffPolicy,
    n_observations: int,
    coverage_fraction: float,
    rng: np.random.Generator,
) -> str:
    """Action for the heuristic baselines ("observe" / "intervene").

    The epsilon-greedy schedule observes with probability
    min(1, (n_obs / coverage_target) * coverage_fraction): near zero while
    few observations exist, growing with both count and domain coverage.
    """

    if policy.kind == "always_observe":
        return "observe"
    if policy.kind == "always_intervene":
        return "intervene"
    if policy.kind == "random":
        return "observe" if rng.random() < policy.p_observe else "intervene"
    if policy.kind == "epsilon_greedy":
        eps = min(1.0, (n_observations / policy.coverage_target) * max(coverage_fraction, 0.0))
        return "observe" if rng.random() < eps else "intervene"
    raise ValueError("the optimal-stopping policy is decided by the stopping rule")
