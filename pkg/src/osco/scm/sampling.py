"""Vectorised ancestral sampling and Monte-Carlo ground-truth oracles."""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .expr import eval_expr
from .graph import GraphError
from .spec import FiniteSet, Intervention, SampleRow, ScmError, ScmSpec, validate

__all__ = [
    "sample_observational",
    "sample_interventional",
    "simulate",
    "mc_ground_truth",
    "grid_minimum",
]


def _draw_noise(spec: ScmSpec, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """One draw per sample for every declared noise term (shared terms are
    drawn once, which is what realises the declared confounding)."""

    out: dict[str, np.ndarray] = {}
    for name in spec.noise:
        dist = spec.noise[name]
        if dist.kind == "normal":
            mean, std = dist.params
            out[name] = rng.normal(mean, std, size=n)
        elif dist.kind == "uniform":
            low, high = dist.params
            out[name] = rng.uniform(low, high, size=n)
        elif dist.kind == "bernoulli":
            (p,) = dist.params
            out[name] = (rng.random(n) < p).astype(float)
        else:  # pragma: no cover - rejected by validation
            raise ScmError(f"unknown noise kind {dist.kind!r}")
    return out


def simulate(
    spec: ScmSpec,
    n: int,
    rng: np.random.Generator,
    iv: Intervention | None = None,
    measurement_noise_std: float | None = None,
) -> dict[str, np.ndarray]:
    """Evaluate the structural functions in topological order for ``n``
    samples, with intervened nodes clamped to their levels.

    ``measurement_noise_std`` adds extra Gaussian noise to the target column
    only; by default the target's own noise term is the measurement noise.
    """

    if n < 1:
        raise ScmError("need n >= 1 samples")
    clamp = iv.as_mapping() if iv is not None else {}
    env: dict[str, np.ndarray] = dict(_draw_noise(spec, n, rng))
    for node in spec.graph.topological_order():
        if node in clamp:
            env[node] = np.full(n, float(clamp[node]))
        else:
            value = eval_expr(spec.functions[node], env)
            env[node] = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if measurement_noise_std:
        env[spec.target] = env[spec.target] + rng.normal(0.0, measurement_noise_std, size=n)
    return {v: env[v] for v in spec.nodes}


def _to_rows(
    values: Mapping[str, np.ndarray],
    keep: Iterable[str],
    kind: str,
    iv: Intervention | None,
    first_step: int,
) -> list[SampleRow]:
    keep = list(keep)
    n = len(next(iter(values.values())))
    rows = []
    for i in range(n):
        rows.append(
            SampleRow(
                assignment={v: float(values[v][i]) for v in keep},
                kind=kind,
                step_index=first_step + i,
                intervention=iv,
            )
        )
    return rows


def sample_observational(
    spec: ScmSpec,
    observe: Iterable[str],
    n: int,
    seed: int,
    measurement_noise_std: float | None = None,
    first_step: int = 1,
) -> list[SampleRow]:
    """Draw ``n`` passive observations restricted to the ``observe`` columns."""

    observe = list(observe)
    unknown = set(observe) - set(spec.nodes)
    if unknown:
        raise GraphError(f"unknown variable name(s): {sorted(unknown)}")
    report = validate(spec)
    if not report.ok:
        raise ScmError(f"invalid model: {report.problems[0]}")
    rng = np.random.default_rng(seed)
    values = simulate(spec, n, rng, iv=None, measurement_noise_std=measurement_noise_std)
    return _to_rows(values, observe, "observational", None, first_step)


def sample_interventional(
    spec: ScmSpec,
    iv: Intervention,
    n: int,
    seed: int,
    measurement_noise_std: float | None = None,
    first_step: int = 1,
) -> list[SampleRow]:
    """Run ``n`` controlled trials of ``iv`` and record the measured target.

    Rows carry the intervened values plus the target outcome.  The empty
    intervention degenerates to observational measurement of the target.
    """

    spec.validate_intervention(iv)
    rng = np.random.default_rng(seed)
    values = simulate(spec, n, rng, iv=iv, measurement_noise_std=measurement_noise_std)
    keep = list(iv.targets) + [spec.target]
    return _to_rows(values, keep, "interventional", iv, first_step)


def mc_ground_truth(
    spec: ScmSpec,
    iv: Intervention,
    n: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the mean target under ``iv``.

    Returns (mean, standard error).  This is an evaluation oracle for tests
    and benchmark scoring; the optimiser never calls it.
    """

    spec.validate_intervention(iv)
    rng = np.random.default_rng(seed)
    values = simulate(spec, n, rng, iv=iv)
    y = values[spec.target]
    return float(np.mean(y)), float(np.std(y, ddof=1) / math.sqrt(n))


def exact_discrete_mean(spec: ScmSpec, iv: Intervention) -> float:
    """Exact mean target under ``iv`` for finite-domain models, by summing
    over all joint noise assignments.  Only usable when every noise term is
    Bernoulli."""

    names = list(spec.noise)
    for name in names:
        if spec.noise[name].kind != "bernoulli":
            raise ScmError("exact enumeration needs all-Bernoulli noise")
    clamp = iv.as_mapping()
    total = 0.0
    k = len(names)
    for mask in range(2**k):
        env: dict[str, float] = {}
        prob = 1.0
        for i, name in enumerate(names):
            bit = (mask >> i) & 1
            (p,) = spec.noise[name].params
            env[name] = float(bit)
            prob *= p if bit else (1.0 - p)
        if prob == 0.0:
            continue
        for node in spec.graph.topological_order():
            if node in clamp:
                env[node] = float(clamp[node])
            else:
                env[node] = float(eval_expr(spec.functions[node], env))
        total += prob * env[spec.target]
    return total


def grid_minimum(
    spec: ScmSpec,
    target_set: tuple[str, ...],
    step: float = 0.01,
    n_mc: int = 100_000,
    seed: int = 0,
) -> tuple[tuple[float, ...], float, float]:
    """Dense-grid oracle for the best single intervention on ``target_set``.

    Scans a regular grid over the (1-D or 2-D) intervention domain, estimating
    each point with ``n_mc`` Monte-Carlo samples, and returns
    (argmin values, minimum mean, standard error at the argmin).
    """

    if not target_set:
        mean, se = mc_ground_truth(spec, Intervention(), n=n_mc, seed=seed)
        return (), mean, se

    axes = []
    for name in target_set:
        dom = spec.domain(name)
        if isinstance(dom, FiniteSet):
            axes.append(np.asarray(dom.values, dtype=float))
        else:
            count = int(round((dom.high - dom.low) / step)) + 1
            axes.append(np.linspace(dom.low, dom.high, count))

    rng = np.random.default_rng(seed)
    noise = _draw_noise(spec, n_mc, rng)
    best: tuple[float, tuple[float, ...], float] = (math.inf, (), math.inf)
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    for point in flat:
        env: dict[str, np.ndarray] = dict(noise)
        clamp = dict(zip(target_set, point))
        for node in spec.graph.topological_order():
            if node in clamp:
                env[node] = np.full(n_mc, float(clamp[node]))
            else:
                value = eval_expr(spec.functions[node], env)
                env[node] = np.broadcast_to(np.asarray(value, dtype=float), (n_mc,))
        y = env[spec.target]
        mean = float(np.mean(y))
        if mean < best[0]:
            best = (mean, tuple(float(v) for v in point), float(np.std(y) / math.sqrt(n_mc)))
    return best[1], best[0], best[2]
