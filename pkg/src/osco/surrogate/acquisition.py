"""Cost-aware causal expected improvement over a bank of per-set surrogates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from ..scm.spec import Domain, FiniteSet, Intervention, Interval
from .gp import GpHyper, GpModel, fit_gp
from .prior import CausalPrior

__all__ = ["ArmSurrogate", "SurrogateBank", "candidate_grid", "expected_improvement", "causal_expected_improvement"]


def candidate_grid(domains: Sequence[Domain], n_points: int, seed: int) -> np.ndarray:
    """Deterministic candidate set: scrambled low-discrepancy points for
    continuous dimensions, full enumeration for finite ones."""

    finite = [d for d in domains if isinstance(d, FiniteSet)]
    continuous = [d for d in domains if isinstance(d, Interval)]
    if not domains:
        return np.zeros((1, 0))
    if not continuous:
        axes = [np.asarray(sorted(d.values), dtype=float) for d in finite]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    sampler = qmc.Sobol(d=len(continuous), scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(n_points, 2)))))
    unit = sampler.random_base2(m)[:n_points]
    lows = np.array([d.low for d in continuous])
    highs = np.array([d.high for d in continuous])
    cont_pts = lows + unit * (highs - lows)

    if not finite:
        return cont_pts

    axes = [np.asarray(sorted(d.values), dtype=float) for d in finite]
    mesh = np.meshgrid(*axes, indexing="ij")
    fin_pts = np.stack([m.ravel() for m in mesh], axis=-1)
    out = np.empty((cont_pts.shape[0] * fin_pts.shape[0], len(domains)))
    row = 0
    for fin in fin_pts:
        for cont in cont_pts:
            fin_iter = iter(fin)
            cont_iter = iter(cont)
            out[row] = [
                next(fin_iter) if isinstance(d, FiniteSet) else next(cont_iter)
                for d in domains
            ]
            row += 1
    return out


@dataclass
class ArmSurrogate:
    """Objective model for one intervention set over its value domain."""

    targets: tuple[str, ...]
    domains: tuple[Domain, ...]
    grid: np.ndarray
    prior: CausalPrior
    gp: GpModel

    @property
    def name(self) -> str:
        return ",".join(self.targets) if self.targets else "()"

    def posterior(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.gp.posterior(points)

    def with_observation(self, values: Sequence[float], outcome: float) -> "ArmSurrogate":
        point = np.asarray(values, dtype=float).reshape(1, -1)
        return replace(self, gp=self.gp.extended(point, outcome))

    def refit(self, prior: CausalPrior, hyper: GpHyper) -> "ArmSurrogate":
        gp = fit_gp(
            self.gp.x_train,
            self.gp.y_train,
            prior_mean=prior.mean,
            prior_std_scale=prior.std_scale,
            hyper=hyper,
        )
        return replace(self, prior=prior, gp=gp)


@dataclass
class SurrogateBank:
    """One surrogate per possibly-optimal intervention set."""

    arms: dict[tuple[str, ...], ArmSurrogate] = field(default_factory=dict)

    def keys_sorted(self) -> list[tuple[str, ...]]:
        return sorted(self.arms, key=lambda k: (len(k), k))

    def check_keys(self, pomis: frozenset[frozenset[str]]) -> None:
        expected = {tuple(sorted(s)) for s in pomis}
        if set(self.arms) != expected:
            raise ValueError("surrogate bank keys do not match the intervention-set family")


def expected_improvement(
    mean: np.ndarray, std: np.ndarray, incumbent: float, xi: float = 0.01
) -> np.ndarray:
    """EI for minimisation: E[max(incumbent - f - xi, 0)]."""

    gap = incumbent - mean - xi
    out = np.maximum(gap, 0.0)
    positive = std > 0
    if np.any(positive):
        z = gap[positive] / std[positive]
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        cdf = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
        out[positive] = gap[positive] * cdf + std[positive] * pdf
    return out


def causal_expected_improvement(
    bank: SurrogateBank,
    intervene_cost: Callable[[tuple[str, ...]], float],
    incumbent: float,
    xi: float = 0.01,
) -> tuple[Intervention, float]:
    """Argmax of EI per unit intervention cost across all arms.

    Ties break lexicographically on the arm name and then on the candidate
    point so repeated runs pick identical interventions.
    """

    if not bank.arms:
        raise ValueError("empty surrogate bank")
    best: tuple[float, tuple[str, ...], tuple[float, ...]] | None = None
    for key in bank.keys_sorted():
        arm = bank.arms[key]
        mean, std = arm.posterior(arm.grid)
        cost = max(intervene_cost(key), 1e-12)
        scores = expected_improvement(mean, std, incumbent, xi) / cost
        order = np.argsort(-scores, kind="stable")
        idx = int(order[0])
        candidate = (float(scores[idx]), key, tuple(float(v) for v in arm.grid[idx]))
        if best is None or candidate[0] > best[0] + 1e-15:
            best = candidate
    assert best is not None
    _, key, values = best
    return Intervention(key, values), best[0]
