"""Evaluating estimands on data: the do-calculus plug-in estimators.

Finite-domain models get an exact plug-in sum over empirical conditional
tables (with bootstrap uncertainty); continuous models get a Monte-Carlo
evaluation that samples the estimand's generator factors (empirical joints
and conditional GP regressors fitted per factor) and averages the outcome
factor's conditional mean.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..scm.spec import Domain, FiniteSet, Intervention, ScmError
from ..surrogate.gp import GpHyper, GpModel, fit_gp
from .dataset import Dataset
from .models import FittedScm, estimate_residual_variance, simulate_observation
from ..identification.estimand import (
    CondFactor,
    Estimand,
    EstimandNode,
    Marginal,
    Product,
    Quotient,
)

__all__ = [
    "EstimationError",
    "FactorModels",
    "estimate_causal_effect",
    "estimate_effect_batch",
    "evaluate_discrete_exact",
]


class EstimationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Tree flattening (alpha-renaming of shadowed sum variables)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _FlatFactor:
    outcome: tuple[str, ...]  # renamed
    given: tuple[str, ...]  # renamed
    outcome_orig: tuple[str, ...]
    given_orig: tuple[str, ...]


def _flatten(node: EstimandNode, rename: dict[str, str], bound: set[str], out: list[_FlatFactor]) -> None:
    if isinstance(node, CondFactor):
        out.append(
            _FlatFactor(
                outcome=tuple(rename.get(v, v) for v in node.outcome),
                given=tuple(rename.get(v, v) for v in node.given),
                outcome_orig=node.outcome,
                given_orig=node.given,
            )
        )
        return
    if isinstance(node, Marginal):
        inner = dict(rename)
        for v in node.over:
            fresh = v
            while fresh in bound:
                fresh += "'"
            inner[v] = fresh
            bound.add(fresh)
        _flatten(node.child, inner, bound, out)
        return
    if isinstance(node, Product):
        for child in node.children:
            _flatten(child, rename, bound, out)
        return
    raise EstimationError(
        "quotient estimands need density models and are not supported by the "
        "sampling evaluator"
    )


# ---------------------------------------------------------------------------
# Continuous path: factor models
# ---------------------------------------------------------------------------

@dataclass
class _ConditionalFactorGp:
    given: tuple[str, ...]
    gp: GpModel

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.gp.posterior(x)

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean, std = self.gp.posterior(x)
        return mean + np.sqrt(std**2 + self.gp.hyper.noise_variance) * rng.standard_normal(
            mean.shape[0]
        )

    def extended(self, given_vals: Sequence[float], value: float) -> "_ConditionalFactorGp":
        return _ConditionalFactorGp(self.given, self.gp.extended(np.asarray(given_vals), value))


@dataclass
class _EmpiricalJointFactor:
    variables: tuple[str, ...]
    matrix: np.ndarray  # (n, len(variables))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.matrix.shape[0], size=n)
        return self.matrix[idx]

    def exact_mean_se(self, var: str) -> tuple[float, float]:
        col = self.matrix[:, self.variables.index(var)]
        n = col.shape[0]
        se = float(np.std(col, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
        return float(np.mean(col)), se

    def extended(self, values: Sequence[float]) -> "_EmpiricalJointFactor":
        return _EmpiricalJointFactor(
            self.variables, np.vstack([self.matrix, np.asarray(values, dtype=float)[None, :]])
        )


class FactorModels:
    """Per-factor models fitted lazily from a dataset's observational rows.

    ``with_row`` produces an updated bundle in O(n^2) per cached factor so a
    lookahead can fold a simulated observation into the causal-prior data
    without refitting.
    """

    def __init__(
        self,
        data: Dataset,
        hyper: GpHyper | None = None,
        max_points: int = 600,
    ):
        self.data = data
        self.hyper = hyper or GpHyper()
        self.max_points = max_points
        self._cond: dict[tuple[str, tuple[str, ...]], _ConditionalFactorGp] = {}
        self._joint: dict[tuple[str, ...], _EmpiricalJointFactor] = {}
        self._extra_rows: list[Mapping[str, float]] = []

    # -- fitting -------------------------------------------------------------
    def _matrix(self, columns: tuple[str, ...]) -> np.ndarray:
        matrix = self.data.column_matrix(columns)
        extra = [
            [row[c] for c in columns]
            for row in self._extra_rows
            if all(c in row for c in columns)
        ]
        if extra:
            matrix = np.vstack([matrix, np.asarray(extra)]) if matrix.size else np.asarray(extra)
        return matrix

    def conditional(self, outcome: str, given: tuple[str, ...]) -> _ConditionalFactorGp:
        key = (outcome, given)
        if key not in self._cond:
            matrix = self._matrix((outcome, *given))
            if matrix.shape[0] == 0:
                raise EstimationError(f"no rows cover factor P({outcome}|{','.join(given)})")
            y, x = matrix[:, 0], matrix[:, 1:]
            if matrix.shape[0] > self.max_points:
                idx = np.linspace(0, matrix.shape[0] - 1, self.max_points).astype(int)
                x, y = x[idx], y[idx]
            noise = estimate_residual_variance(x, y, self.hyper.noise_variance)
            hyper = GpHyper(self.hyper.lengthscale, self.hyper.signal_variance, noise)
            self._cond[key] = _ConditionalFactorGp(given, fit_gp(x, y, hyper=hyper))
        return self._cond[key]

    def joint(self, variables: tuple[str, ...]) -> _EmpiricalJointFactor:
        if variables not in self._joint:
            matrix = self._matrix(variables)
            if matrix.shape[0] == 0:
                raise EstimationError(f"no rows cover joint factor P({','.join(variables)})")
            self._joint[variables] = _EmpiricalJointFactor(variables, matrix)
        return self._joint[variables]

    def with_row(self, row: Mapping[str, float], row_in_data: bool = False) -> "FactorModels":
        """Extend every cached factor model with one record.

        ``row_in_data`` marks rows already appended to the backing dataset
        (so later lazy fits see them exactly once); hypothetical lookahead
        rows leave it False.
        """

        clone = FactorModels.__new__(FactorModels)
        clone.data = self.data
        clone.hyper = self.hyper
        clone.max_points = self.max_points
        clone._extra_rows = self._extra_rows if row_in_data else self._extra_rows + [dict(row)]
        clone._joint = {}
        clone._cond = {}
        for key, factor in self._joint.items():
            if all(v in row for v in key):
                clone._joint[key] = factor.extended([float(row[v]) for v in key])
            else:
                clone._joint[key] = factor
        for (outcome, given), factor in self._cond.items():
            if outcome in row and all(g in row for g in given):
                clone._cond[(outcome, given)] = factor.extended(
                    [float(row[g]) for g in given], float(row[outcome])
                )
            else:
                clone._cond[(outcome, given)] = factor
        return clone


def _evaluate_continuous_batch(
    estimand: Estimand,
    models: FactorModels,
    targets: tuple[str, ...],
    points: np.ndarray,
    n_mc: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluation at several intervention points at once.

    Generator factors are sampled over the (points x draws) batch and the
    outcome factor's conditional mean is averaged per point; the reported
    std combines the Monte-Carlo error with the outcome model's predictive
    uncertainty.
    """

    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    m = points.shape[0]

    factors: list[_FlatFactor] = []
    _flatten(estimand.root, {}, set(estimand.variables()) | set(targets), factors)
    outcome_factors = [f for f in factors if estimand.outcome in f.outcome]
    if len(outcome_factors) != 1:
        raise EstimationError("estimand must contain exactly one outcome factor")
    head = outcome_factors[0]

    # Pure empirical case (e.g. the empty intervention): exact sample mean.
    if not head.given and len(factors) == 1:
        joint = models.joint(head.outcome_orig)
        mean, se = joint.exact_mean_se(estimand.outcome)
        return np.full(m, mean), np.full(m, se)

    pending = [f for f in factors if f is not head]
    if not pending:
        n_mc = 1  # nothing to marginalise; the conditional mean is exact
    batch = m * n_mc
    env: dict[str, np.ndarray] = {
        name: np.repeat(points[:, j], n_mc) for j, name in enumerate(targets)
    }
    while pending:
        ready = next((f for f in pending if all(g in env for g in f.given)), None)
        if ready is None:
            missing = sorted({g for f in pending for g in f.given if g not in env})
            raise EstimationError(f"cannot order estimand factors; unresolved {missing}")
        pending.remove(ready)
        if not ready.given:
            joint = models.joint(ready.outcome_orig)
            draws = joint.sample(batch, rng)
            for pos, name in enumerate(ready.outcome):
                env[name] = draws[:, pos]
        else:
            if len(ready.outcome) != 1:
                raise EstimationError("conditional factors with several outcomes are unsupported")
            factor = models.conditional(ready.outcome_orig[0], ready.given_orig)
            x = np.column_stack([env[g] for g in ready.given])
            env[ready.outcome[0]] = factor.sample(x, rng)

    if not head.given:
        raise EstimationError("outcome factor without conditioning needs a lone joint factor")
    factor = models.conditional(estimand.outcome, head.given_orig)
    x = np.column_stack([env[g] for g in head.given])
    mean_i, std_i = factor.predict(x)
    mean_i = mean_i.reshape(m, n_mc)
    std_i = std_i.reshape(m, n_mc)
    means = mean_i.mean(axis=1)
    mc_var = mean_i.var(axis=1, ddof=1) / n_mc if n_mc > 1 else np.zeros(m)
    pred_var = (std_i**2).mean(axis=1)
    return means, np.sqrt(mc_var + pred_var)


def _evaluate_continuous(
    estimand: Estimand,
    models: FactorModels,
    iv_env: Mapping[str, float],
    n_mc: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    targets = tuple(sorted(iv_env))
    point = np.asarray([[iv_env[t] for t in targets]])
    means, stds = _evaluate_continuous_batch(estimand, models, targets, point, n_mc, rng)
    return float(means[0]), float(stds[0])


def estimate_effect_batch(
    estimand: Estimand,
    models: "FactorModels",
    targets: tuple[str, ...],
    points: np.ndarray,
    n_mc: int = 96,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-path batch estimator over several intervention points."""

    if set(targets) != set(estimand.fixed):
        raise EstimationError(f"targets {targets} do not match estimand slots {estimand.fixed}")
    rng = np.random.default_rng(seed)
    return _evaluate_continuous_batch(estimand, models, targets, np.asarray(points), n_mc, rng)


# ---------------------------------------------------------------------------
# Discrete path: exact plug-in over empirical tables
# ---------------------------------------------------------------------------

class _Tables:
    def __init__(self, matrix: np.ndarray, columns: tuple[str, ...]):
        self.columns = columns
        self.matrix = matrix
        self._index = {c: i for i, c in enumerate(columns)}
        self._cache: dict = {}

    def prob(
        self,
        outcome: tuple[str, ...],
        outcome_vals: tuple[float, ...],
        given: tuple[str, ...],
        given_vals: tuple[float, ...],
    ) -> tuple[float, bool]:
        key = (outcome, given, given_vals)
        if key not in self._cache:
            mask = np.ones(self.matrix.shape[0], dtype=bool)
            for var, val in zip(given, given_vals):
                mask &= self.matrix[:, self._index[var]] == val
            self._cache[key] = mask
        mask = self._cache[key]
        denom = int(mask.sum())
        if denom == 0:
            return 1.0 / _n_outcome_cells(self, outcome), False
        sub = mask.copy()
        for var, val in zip(outcome, outcome_vals):
            sub &= self.matrix[:, self._index[var]] == val
        return float(sub.sum()) / denom, True


def _n_outcome_cells(tables: _Tables, outcome: tuple[str, ...]) -> int:
    # uniform fallback for unseen conditioning cells
    return max(2 ** len(outcome), 2)


def _levels(domains: Mapping[str, Domain], var: str) -> tuple[float, ...]:
    dom = domains[var]
    if not isinstance(dom, FiniteSet):
        raise EstimationError(f"{var} is not finite-domain")
    return tuple(sorted(dom.values))


def _discrete_value(
    node: EstimandNode,
    env: dict[str, float],
    tables: _Tables,
    domains: Mapping[str, Domain],
    flags: list[str],
) -> float:
    if isinstance(node, CondFactor):
        p, seen = tables.prob(
            node.outcome,
            tuple(env[v] for v in node.outcome),
            node.given,
            tuple(env[v] for v in node.given),
        )
        if not seen:
            flags.append(f"unseen cell for P({','.join(node.outcome)}|{','.join(node.given)})")
        return p
    if isinstance(node, Marginal):
        total = 0.0
        level_sets = [_levels(domains, v) for v in node.over]
        saved = {v: env.get(v) for v in node.over}
        for combo in itertools.product(*level_sets):
            for v, value in zip(node.over, combo):
                env[v] = value
            total += _discrete_value(node.child, env, tables, domains, flags)
        for v, value in saved.items():
            if value is None:
                env.pop(v, None)
            else:
                env[v] = value
        return total
    if isinstance(node, Product):
        out = 1.0
        for child in node.children:
            out *= _discrete_value(child, env, tables, domains, flags)
            if out == 0.0:
                return 0.0
        return out
    if isinstance(node, Quotient):
        den = _discrete_value(node.denominator, env, tables, domains, flags)
        if den == 0.0:
            flags.append("zero denominator")
            return 0.0
        return _discrete_value(node.numerator, env, tables, domains, flags) / den
    raise TypeError(f"not an estimand node: {node!r}")


def evaluate_discrete_exact(
    estimand: Estimand,
    matrix: np.ndarray,
    columns: tuple[str, ...],
    iv_env: Mapping[str, float],
    domains: Mapping[str, Domain],
) -> tuple[float, list[str]]:
    """Exact plug-in mean of the outcome under the estimand, using the
    empirical conditional tables of ``matrix``."""

    tables = _Tables(matrix, columns)
    flags: list[str] = []
    levels = _levels(domains, estimand.outcome)
    weights = []
    for y_val in levels:
        env = dict(iv_env)
        env[estimand.outcome] = y_val
        weights.append(_discrete_value(estimand.root, env, tables, domains, flags))
    total = sum(weights)
    if total <= 0.0:
        flags.append("estimand mass is zero under the empirical law")
        mean = float(np.mean(levels))
    else:
        mean = sum(y * w for y, w in zip(levels, weights)) / total
    return mean, flags


def _evaluate_discrete(
    estimand: Estimand,
    data: Dataset,
    iv_env: Mapping[str, float],
    domains: Mapping[str, Domain],
    rng: np.random.Generator,
    n_boot: int = 40,
) -> tuple[float, float]:
    columns = tuple(sorted(estimand.variables()))
    matrix = data.column_matrix(columns)
    if matrix.shape[0] == 0:
        raise EstimationError("no observational rows cover the estimand variables")
    mean, flags = evaluate_discrete_exact(estimand, matrix, columns, iv_env, domains)
    n = matrix.shape[0]
    boots = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        boots[b], _ = evaluate_discrete_exact(estimand, matrix[idx], columns, iv_env, domains)
    std = float(np.std(boots, ddof=1))
    if flags:
        levels = _levels(domains, estimand.outcome)
        std = max(std, 0.5 * (max(levels) - min(levels)))
    return mean, std


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def estimate_causal_effect(
    estimand: Estimand,
    source: Dataset | FittedScm | FactorModels,
    iv: Intervention,
    n_mc: int = 1000,
    seed: int = 0,
    domains: Mapping[str, Domain] | None = None,
    hyper: GpHyper | None = None,
    max_points: int = 600,
) -> tuple[float, float]:
    """Estimate (mean, std) of the outcome under ``iv`` via the estimand.

    Finite domains (per ``domains``) trigger the exact plug-in path with
    bootstrap uncertainty; otherwise generator factors are sampled and the
    outcome factor's GP mean is averaged over ``n_mc`` draws.
    """

    if set(iv.targets) != set(estimand.fixed):
        raise EstimationError(
            f"intervention {iv} does not match estimand slots {estimand.fixed}"
        )
    iv_env = iv.as_mapping()
    rng = np.random.default_rng(seed)

    if isinstance(source, FittedScm):
        needed = sorted(estimand.variables())
        rows = simulate_observation(source, needed, rng, n=max(n_mc, 500))
        data = Dataset(nodes=tuple(needed))
        data.extend(rows, cost_each=0.0)
        source = data

    discrete = domains is not None and all(
        isinstance(domains.get(v), FiniteSet) for v in estimand.variables()
    )
    if isinstance(source, Dataset):
        if discrete:
            assert domains is not None
            return _evaluate_discrete(estimand, source, iv_env, domains, rng)
        source = FactorModels(source, hyper=hyper, max_points=max_points)
    return _evaluate_continuous(estimand, source, iv_env, n_mc, rng)
