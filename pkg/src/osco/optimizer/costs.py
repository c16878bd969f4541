"""Per-action cost model and evaluation budget."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

__all__ = ["CostModel"]


@dataclass(frozen=True)
class CostModel:
    """Linear per-variable costs: observing a set L costs |L| * observe_factor,
    intervening costs |L| * intervene_factor.

    The empty intervention is evaluated by measuring the target once, so it
    is charged ``empty_intervention_cost`` (one variable's observation) to
    keep every action strictly positive.
    """

    observe_factor: float = 0.25
    intervene_factor: float = 16.0
    budget: float = 300.0
    empty_intervention_cost: float = 0.25

    def __post_init__(self) -> None:
        if min(self.observe_factor, self.intervene_factor, self.empty_intervention_cost) <= 0:
            raise ValueError("costs must be strictly positive")
        if not (self.budget > 0 and self.budget < float("inf")):
            raise ValueError("budget must be positive and finite")

    def observe_cost(self, variables: Iterable[str]) -> float:
        count = len(tuple(variables))
        if count == 0:
            raise ValueError("observing an empty variable set is meaningless")
        return count * self.observe_factor

    def intervene_cost(self, targets: Iterable[str]) -> float:
        count = len(tuple(targets))
        if count == 0:
            return self.empty_intervention_cost
        return count * self.intervene_factor
