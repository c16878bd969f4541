"""The stopping reward and its evaluation context.

The reward of intervening now combines the information the collected rows
carry about the objective, the surrogate's estimate at the candidate, the
domain-coverage ratio and the intervention cost:

    r = eta * gain - kappa * mu_hat - tau * coverage_ratio - intervene_cost

At the forced horizon only the information term remains, and the absorbing
terminal state is worth zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..estimation.dataset import Dataset
from ..estimation.models import FittedScm
from ..identification.estimand import Estimand
from ..scm.spec import Domain, Intervention, SampleRow, ScmError
from ..surrogate.gp import GpModel
from ..surrogate.infogain import InfoGainAccumulator
from .volume import DEFAULT_RATIO_CAP, volume_ratio

__all__ = ["StoppingWeights", "StoppingContext", "stopping_reward"]


@dataclass(frozen=True)
class StoppingWeights:
    eta: float = 2.0
    kappa: float = 1.0
    tau: float = 5.0

    def check(self) -> None:
        if min(self.eta, self.kappa, self.tau) < 0:
            raise ValueError("stopping weights must be nonnegative")


@dataclass
class StoppingContext:
    """Everything one observe-or-intervene decision needs.

    The surrogate/fitted fields carry the probabilistic models; ``mu_hat``
    and ``simulate`` are the model services the loop wires in (posterior
    refresh with an extra simulated row, and drawing that row).
    """

    dataset: Dataset
    candidate: Intervention
    mos: tuple[str, ...]
    domains: Mapping[str, Domain]
    weights: StoppingWeights
    gamma: float
    observe_cost: float
    intervene_cost: float
    remaining_budget: float
    horizon: int
    step_index: int = 1
    terminal: bool = False
    identifiable: bool = True
    direction: str = "min"
    fitted: FittedScm | None = None
    surrogate: GpModel | None = None
    estimand: Estimand | None = None
    info_gain: InfoGainAccumulator | None = None
    ratio_cap: float = DEFAULT_RATIO_CAP
    mu_hat: Callable[[SampleRow | None], float] | None = None
    mu_hat_batch: Callable[[list[SampleRow]], np.ndarray] | None = None
    simulate: Callable[[np.random.Generator], SampleRow | None] | None = None
    simulate_batch: Callable[[np.random.Generator, int], list[SampleRow]] | None = None
    _mos_cache: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.weights.check()
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.remaining_budget < 0:
            raise ValueError("remaining budget must be nonnegative")
        if self.direction not in ("min", "max"):
            raise ValueError("direction is 'min' or 'max'")

    # -- component evaluation ------------------------------------------------
    def mos_matrix(self, extra: SampleRow | None = None) -> np.ndarray:
        if self._mos_cache is None:
            self._mos_cache = self.dataset.column_matrix(self.mos)
        matrix = self._mos_cache
        if extra is not None:
            row = np.array([[extra.assignment[c] for c in self.mos]])
            matrix = np.vstack([matrix, row]) if matrix.size else row
        return matrix

    def coverage_ratio(self, extra: SampleRow | None = None) -> float:
        return volume_ratio(self.domains, self.mos, self.mos_matrix(extra), cap=self.ratio_cap)

    def coverage_ratio_batch(self, rows: np.ndarray) -> np.ndarray:
        """Coverage ratios with one hypothetical row appended, per row."""

        rows = np.asarray(rows, dtype=float).reshape(-1, len(self.mos))
        base = self.mos_matrix()
        out = np.empty(rows.shape[0])
        if base.shape[0] < 1:  # one total row still falls below the 2-row floor
            out[:] = self.ratio_cap
            return out
        lows = base.min(axis=0)
        highs = base.max(axis=0)
        widths = np.array([self.domains[name].width for name in self.mos])
        keep = widths > 0
        full = float(np.prod(widths[keep])) if keep.any() else 1.0
        spread = np.maximum(highs[None, :], rows) - np.minimum(lows[None, :], rows)
        ratios = np.empty(rows.shape[0])
        for i in range(rows.shape[0]):
            s = spread[i][keep]
            if np.any(s <= 0):
                ratios[i] = self.ratio_cap
            else:
                ratios[i] = min(full / float(np.prod(s)), self.ratio_cap)
        return ratios

    def gain(self, extra: SampleRow | None = None) -> float:
        if self.info_gain is None:
            return 0.0
        if extra is None:
            return self.info_gain.gain
        return self.info_gain.peek([extra.assignment[c] for c in self.mos])

    def objective_estimate(self, extra: SampleRow | None = None) -> float:
        if self.mu_hat is None:
            return 0.0
        value = self.mu_hat(extra)
        return value if self.direction == "min" else -value

    def lookahead_rewards(self, rows: list[SampleRow]) -> np.ndarray:
        """Vector of r(S ∪ {o}) over simulated rows (vectorised where the
        batch services are wired, identical arithmetic either way)."""

        matrix = np.array([[row.assignment[c] for c in self.mos] for row in rows])
        if self.info_gain is not None:
            gains = self.info_gain.peek_batch(matrix)
        else:
            gains = np.zeros(len(rows))
        if self.mu_hat_batch is not None:
            mus = np.asarray(self.mu_hat_batch(rows), dtype=float)
        elif self.mu_hat is not None:
            mus = np.array([self.mu_hat(row) for row in rows])
        else:
            mus = np.zeros(len(rows))
        if self.direction == "max":
            mus = -mus
        ratios = self.coverage_ratio_batch(matrix)
        return (
            self.weights.eta * gains
            - self.weights.kappa * mus
            - self.weights.tau * ratios
            - self.intervene_cost
        )


def stopping_reward(
    ctx: StoppingContext,
    extra: SampleRow | None = None,
    at_horizon: bool = False,
) -> float:
    """Reward of intervening in the (possibly hypothetically grown) state."""

    if ctx.terminal:
        return 0.0
    gain = ctx.gain(extra)
    if at_horizon or ctx.step_index >= ctx.horizon:
        return ctx.weights.eta * gain
    return (
        ctx.weights.eta * gain
        - ctx.weights.kappa * ctx.objective_estimate(extra)
        - ctx.weights.tau * ctx.coverage_ratio(extra)
        - ctx.intervene_cost
    )
