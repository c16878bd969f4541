"""The one-step-lookahead observe-or-intervene rule.

Intervening is declared optimal as soon as the reward of stopping now is at
least the expected reward after one more (simulated) observation minus the
observation cost.  Non-identifiable candidates skip the lookahead entirely:
their effect can only be estimated by experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .reward import StoppingContext, stopping_reward

__all__ = ["StoppingDecision", "decide", "INTERVENE", "OBSERVE"]

INTERVENE = "intervene"
OBSERVE = "observe"


@dataclass(frozen=True)
class StoppingDecision:
    action: str
    reward_now: float
    expected_next: float | None
    observation_cost: float
    mc_std: float
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.action not in (INTERVENE, OBSERVE):
            raise ValueError(f"unknown action {self.action!r}")


def decide(ctx: StoppingContext, n_mc: int = 10, seed: int = 0) -> StoppingDecision:
    """Evaluate the lookahead inequality with ``n_mc`` simulated rows.

    Ties within the Monte-Carlo standard error resolve to intervening (the
    only action that completes a stage).  Budget boundaries force the
    cheapest feasible action.
    """

    if ctx.terminal:
        raise ValueError("terminal state admits no further decisions")

    notes: list[str] = []
    if not ctx.identifiable:
        return StoppingDecision(
            action=INTERVENE,
            reward_now=stopping_reward(ctx),
            expected_next=None,
            observation_cost=ctx.observe_cost,
            mc_std=0.0,
            diagnostics=("candidate effect not identifiable; observation cannot estimate it",),
        )

    # Budget boundaries: observing must leave a feasible continuation, and
    # an unaffordable action cannot be chosen.
    can_intervene = ctx.intervene_cost < ctx.remaining_budget
    can_observe = ctx.observe_cost < ctx.remaining_budget
    after_observe = ctx.remaining_budget - ctx.observe_cost
    forced = (
        not can_intervene
        or not can_observe
        or ctx.horizon <= 1
        or ctx.intervene_cost >= after_observe
    )
    if forced:
        action = INTERVENE if can_intervene else OBSERVE
        notes.append("budget boundary: forced " + action)
        return StoppingDecision(
            action=action,
            reward_now=stopping_reward(ctx),
            expected_next=None,
            observation_cost=ctx.observe_cost,
            mc_std=0.0,
            diagnostics=tuple(notes),
        )

    reward_now = stopping_reward(ctx)
    if ctx.simulate is None:
        return StoppingDecision(
            action=INTERVENE,
            reward_now=reward_now,
            expected_next=None,
            observation_cost=ctx.observe_cost,
            mc_std=0.0,
            diagnostics=("no observation simulator available",),
        )

    rng = np.random.default_rng(seed)
    try:
        if ctx.simulate_batch is not None:
            rows = ctx.simulate_batch(rng, n_mc)
        else:
            rows = [ctx.simulate(rng) for _ in range(n_mc)]
    except Exception as err:  # simulation coverage failure
        return StoppingDecision(
            action=INTERVENE,
            reward_now=reward_now,
            expected_next=None,
            observation_cost=ctx.observe_cost,
            mc_std=0.0,
            diagnostics=(f"simulation failed: {err}",),
        )
    if any(row is None for row in rows) or len(rows) != n_mc:
        return StoppingDecision(
            action=INTERVENE,
            reward_now=reward_now,
            expected_next=None,
            observation_cost=ctx.observe_cost,
            mc_std=0.0,
            diagnostics=("simulation unavailable",),
        )
    draws = ctx.lookahead_rewards(rows)

    expected_next = float(np.mean(draws))
    mc_std = float(np.std(draws, ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    margin = (ctx.gamma * expected_next - ctx.observe_cost) - reward_now
    action = OBSERVE if margin > mc_std else INTERVENE
    return StoppingDecision(
        action=action,
        reward_now=reward_now,
        expected_next=expected_next,
        observation_cost=ctx.observe_cost,
        mc_std=mc_std,
        diagnostics=tuple(notes),
    )
