"""Per-node probabilistic models fitted from observational rows.

Each observed node gets a model of itself given whichever of its graph
parents were also observed: a GP regressor for continuous nodes, a
conditional frequency table for finite-domain nodes, and an empirical
marginal when no parent column is available.  The fitted bundle supports
ancestral simulation of future observations over an observation set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..scm.graph import CausalGraph
from ..scm.spec import Domain, FiniteSet, SampleRow, ScmError
from ..surrogate.gp import GpHyper, GpModel, fit_gp
from .dataset import Dataset

__all__ = ["FittedScm", "fit_scm_models", "simulate_observation", "estimate_residual_variance"]


def estimate_residual_variance(x: np.ndarray, y: np.ndarray, floor: float) -> float:
    """Nearest-neighbour noise estimate: half the mean squared difference of
    outputs at adjacent inputs.  Used so factor GPs do not interpolate
    measurement noise."""

    n = x.shape[0]
    if n < 3:
        return floor
    sub = np.arange(n) if n <= 400 else np.linspace(0, n - 1, 400).astype(int)
    xs = x[sub]
    ys = y[sub]
    scale = np.std(xs, axis=0)
    scale[scale == 0.0] = 1.0
    normed = xs / scale
    sq = (
        np.sum(normed**2, axis=1)[:, None]
        + np.sum(normed**2, axis=1)[None, :]
        - 2.0 * normed @ normed.T
    )
    np.fill_diagonal(sq, np.inf)
    nearest = np.argmin(sq, axis=1)
    noise = 0.5 * float(np.mean((ys - ys[nearest]) ** 2))
    return max(noise, floor)


@dataclass
class GpNodeModel:
    parents: tuple[str, ...]
    gp: GpModel

    def mean_std(self, parent_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.gp.posterior(parent_values)

    def sample(self, parent_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean, std = self.gp.posterior(parent_values)
        total = np.sqrt(std**2 + self.gp.hyper.noise_variance)
        return mean + total * rng.standard_normal(mean.shape[0])

    def extended(self, parent_values: Sequence[float], value: float) -> "GpNodeModel":
        return GpNodeModel(self.parents, self.gp.extended(np.asarray(parent_values), value))


@dataclass
class EmpiricalNodeModel:
    values: np.ndarray

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Smoothed bootstrap: resample with a Silverman-bandwidth jitter so
        simulated futures are not verbatim copies of the past."""

        m = self.values.shape[0]
        idx = rng.integers(0, m, size=n)
        draw = self.values[idx]
        spread = float(np.std(self.values))
        if m >= 2 and spread > 0:
            draw = draw + 1.06 * spread * m ** (-0.2) * rng.standard_normal(n)
        return draw

    def extended(self, value: float) -> "EmpiricalNodeModel":
        return EmpiricalNodeModel(np.append(self.values, value))


@dataclass
class TableNodeModel:
    parents: tuple[str, ...]
    levels: tuple[float, ...]
    counts: dict[tuple[float, ...], np.ndarray]

    def probs(self, parent_values: tuple[float, ...]) -> tuple[np.ndarray, bool]:
        """Maximum-likelihood cell distribution and a cell-was-observed flag."""

        cell = self.counts.get(parent_values)
        if cell is None or cell.sum() == 0:
            return np.full(len(self.levels), 1.0 / len(self.levels)), False
        return cell / cell.sum(), True

    def sample(self, parent_values: tuple[float, ...], rng: np.random.Generator) -> float:
        # simulation uses a weak add-half prior so sparse cells still vary
        cell = self.counts.get(parent_values)
        if cell is None:
            cell = np.zeros(len(self.levels))
        smoothed = cell + 0.5
        probs = smoothed / smoothed.sum()
        return float(rng.choice(np.asarray(self.levels), p=probs))

    def extended(self, parent_values: tuple[float, ...], value: float) -> "TableNodeModel":
        counts = {k: v.copy() for k, v in self.counts.items()}
        cell = counts.setdefault(parent_values, np.zeros(len(self.levels)))
        cell[self.levels.index(value)] += 1
        return TableNodeModel(self.parents, self.levels, counts)


NodeModel = GpNodeModel | EmpiricalNodeModel | TableNodeModel


@dataclass
class FittedScm:
    """Models for every node seen in the data; unfitted nodes raise."""

    graph: CausalGraph
    models: dict[str, NodeModel]
    columns: frozenset[str]

    def model_for(self, node: str) -> NodeModel:
        try:
            return self.models[node]
        except KeyError:
            raise ScmError(f"no fitted model for node {node!r}") from None

    def with_row(self, row: Mapping[str, float]) -> "FittedScm":
        """Bundle updated with one extra observational record (cheap)."""

        models = dict(self.models)
        for node, model in self.models.items():
            if node not in row:
                continue
            if isinstance(model, EmpiricalNodeModel):
                models[node] = model.extended(float(row[node]))
            elif isinstance(model, GpNodeModel):
                if all(p in row for p in model.parents):
                    parent_values = [float(row[p]) for p in model.parents]
                    models[node] = model.extended(parent_values, float(row[node]))
            elif isinstance(model, TableNodeModel):
                if all(p in row for p in model.parents):
                    key = tuple(float(row[p]) for p in model.parents)
                    models[node] = model.extended(key, float(row[node]))
        return FittedScm(self.graph, models, self.columns | frozenset(row))


def fit_scm_models(
    graph: CausalGraph,
    data: Dataset,
    domains: Mapping[str, Domain] | None = None,
    hyper: GpHyper | None = None,
    max_points: int = 600,
) -> FittedScm:
    """Fit one model per observed node given its observed graph parents.

    GP noise is floored at the hyper's noise variance but raised to a
    nearest-neighbour residual estimate when the data are noisier.
    """

    hyper = hyper or GpHyper()
    domains = domains or {}
    observed: set[str] = set()
    for row in data.observational_rows():
        observed |= set(row.assignment)
    if not observed:
        raise ScmError("no observational rows to fit")

    models: dict[str, NodeModel] = {}
    for node in graph.topological_order():
        if node not in observed:
            continue
        parents = tuple(p for p in sorted(graph.parents(node)) if p in observed)
        needed = (node, *parents)
        matrix = data.column_matrix(needed)
        if matrix.shape[0] == 0:
            continue
        y = matrix[:, 0]
        x = matrix[:, 1:]
        dom = domains.get(node)
        if isinstance(dom, FiniteSet):
            levels = tuple(sorted(dom.values))
            counts: dict[tuple[float, ...], np.ndarray] = {}
            for i in range(matrix.shape[0]):
                key = tuple(float(v) for v in x[i])
                cell = counts.setdefault(key, np.zeros(len(levels)))
                cell[levels.index(float(y[i]))] += 1
            models[node] = TableNodeModel(parents, levels, counts)
        elif not parents:
            models[node] = EmpiricalNodeModel(y.copy())
        else:
            if matrix.shape[0] > max_points:
                idx = np.linspace(0, matrix.shape[0] - 1, max_points).astype(int)
                x, y = x[idx], y[idx]
            noise = estimate_residual_variance(x, y, hyper.noise_variance)
            node_hyper = GpHyper(hyper.lengthscale, hyper.signal_variance, noise)
            models[node] = GpNodeModel(parents, fit_gp(x, y, hyper=node_hyper))
    return FittedScm(graph=graph, models=models, columns=frozenset(observed))


def _simulation_order(fitted: FittedScm, mos: Sequence[str]) -> list[str]:
    needed: set[str] = set()
    order = fitted.graph.topological_order()
    stack = list(mos)
    while stack:
        node = stack.pop()
        if node in needed:
            continue
        needed.add(node)
        model = fitted.model_for(node)
        if isinstance(model, (GpNodeModel, TableNodeModel)):
            stack.extend(model.parents)
    return [v for v in order if v in needed]


def simulate_observation(
    fitted: FittedScm,
    mos: Sequence[str],
    rng: np.random.Generator,
    n: int = 1,
) -> list[SampleRow]:
    """Draw ``n`` future observations of the ``mos`` columns by ancestral
    sampling through the fitted models."""

    mos = list(mos)
    missing = [v for v in mos if v not in fitted.models]
    if missing:
        raise ScmError(f"no fitted model for node {missing[0]!r}")
    env: dict[str, np.ndarray] = {}
    for node in _simulation_order(fitted, mos):
        model = fitted.model_for(node)
        if isinstance(model, EmpiricalNodeModel):
            env[node] = model.sample(n, rng)
        elif isinstance(model, GpNodeModel):
            parent_values = np.column_stack([env[p] for p in model.parents])
            env[node] = model.sample(parent_values, rng)
        else:
            values = np.empty(n)
            for i in range(n):
                key = tuple(float(env[p][i]) for p in model.parents)
                values[i] = model.sample(key, rng)
            env[node] = values
    return [
        SampleRow(assignment={v: float(env[v][i]) for v in mos}, kind="observational")
        for i in range(n)
    ]
