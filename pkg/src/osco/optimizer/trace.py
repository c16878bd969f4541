"""Run traces: per-step records, CSV schema, and the simple-regret curve."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..scm.spec import Intervention

__all__ = ["TraceRow", "Trace", "TRACE_HEADER", "simple_regret"]

TRACE_HEADER = (
    "step",
    "stage_kind",
    "intervention_set",
    "intervention_values",
    "cost",
    "cum_cost",
    "best_mu_hat",
    "true_mu_at_choice",
    "wall_ms",
)


def _set_label(targets: tuple[str, ...]) -> str:
    return ",".join(targets) if targets else "()"


@dataclass
class TraceRow:
    step: int
    stage_kind: str  # "intervene" | "observe"
    intervention: Intervention
    cost: float
    cum_cost: float
    best_mu_hat: float
    true_mu_at_choice: float = math.nan
    wall_ms: float = 0.0

    def record(self) -> list[str]:
        return [
            str(self.step),
            self.stage_kind,
            _set_label(self.intervention.targets),
            "|".join(repr(v) for v in self.intervention.values),
            repr(self.cost),
            repr(self.cum_cost),
            repr(self.best_mu_hat),
            repr(self.true_mu_at_choice),
            repr(self.wall_ms),
        ]


@dataclass
class Trace:
    scm_name: str
    policy: str
    seed: int
    budget: float
    rows: list[TraceRow] = field(default_factory=list)
    best_intervention: Intervention | None = None
    best_mu_hat: float = math.nan
    incomplete: bool = False
    error: str | None = None

    @property
    def total_cost(self) -> float:
        return self.rows[-1].cum_cost if self.rows else 0.0

    def n_actions(self, kind: str) -> int:
        return sum(1 for row in self.rows if row.stage_kind == kind)

    def check_invariants(self) -> None:
        last = 0.0
        for row in self.rows:
            if row.cum_cost < last - 1e-9:
                raise ValueError("cumulative cost must be non-decreasing")
            last = row.cum_cost
        if self.rows and self.rows[-1].cum_cost >= self.budget + 1e-9:
            raise ValueError("trace exceeded the budget")

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TRACE_HEADER)
            for row in self.rows:
                writer.writerow(row.record())

    @staticmethod
    def read_rows(path: str | Path) -> list[dict[str, str]]:
        with Path(path).open(newline="") as handle:
            reader = csv.DictReader(handle)
            return list(reader)


def simple_regret(trace: Trace, optimum: float) -> list[tuple[float, float]]:
    """Running best true objective at the evaluated interventions minus the
    optimum, indexed by cumulative cost.

    Observation steps extend the curve (they cost budget) without adding an
    evaluated intervention; before the first intervention the regret is
    infinite.
    """

    if not trace.rows:
        raise ValueError("empty trace has no regret curve")
    curve: list[tuple[float, float]] = []
    best = math.inf
    for row in trace.rows:
        if row.stage_kind == "intervene" and not math.isnan(row.true_mu_at_choice):
            best = min(best, row.true_mu_at_choice)
        regret = best - optimum if math.isfinite(best) else math.inf
        curve.append((row.cum_cost, regret))
    return curve
