"""Causal priors for the objective surrogate.

The prior mean at an interventional input is the do-calculus estimate of
the effect from observational data; the prior std scale is that estimate's
reported uncertainty.  Both are evaluated on a grid over the intervention
domain and interpolated in between.  Non-identifiable intervention sets get
a zero mean and a constant std scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Mapping, Sequence

import numpy as np

from ..identification.estimand import Estimand
from ..scm.spec import Domain, FiniteSet, Intervention, Interval
from .gp import GpHyper

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from ..estimation.dataset import Dataset
    from ..estimation.effects import FactorModels

__all__ = ["CausalPrior", "build_causal_prior", "domain_axis"]

MeanFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CausalPrior:
    """Interpolated prior mean / std-scale over an intervention domain."""

    targets: tuple[str, ...]
    mean: MeanFn
    std_scale: MeanFn
    available: bool
    grid_means: np.ndarray | None = None
    grid_stds: np.ndarray | None = None

    @staticmethod
    def flat(targets: tuple[str, ...], std: float = 1.0) -> "CausalPrior":
        return CausalPrior(
            targets=targets,
            mean=lambda x: np.zeros(np.asarray(x).shape[0] if np.ndim(x) else 1),
            std_scale=lambda x: np.full(np.asarray(x).shape[0] if np.ndim(x) else 1, std),
            available=False,
        )


def domain_axis(domain: Domain, grid_size: int) -> np.ndarray:
    if isinstance(domain, FiniteSet):
        return np.asarray(sorted(domain.values), dtype=float)
    assert isinstance(domain, Interval)
    return np.linspace(domain.low, domain.high, grid_size)


def _make_interpolators(
    axes: list[np.ndarray], means: np.ndarray, stds: np.ndarray
) -> tuple[MeanFn, MeanFn]:
    if not axes:  # the empty intervention: constants
        mean_val = float(means.reshape(-1)[0])
        std_val = float(stds.reshape(-1)[0])
        return (
            lambda x: np.full(np.asarray(x).shape[0], mean_val),
            lambda x: np.full(np.asarray(x).shape[0], std_val),
        )
    if len(axes) == 1:
        axis = axes[0]
        m = means.reshape(-1)
        s = stds.reshape(-1)

        def mean_fn(x: np.ndarray) -> np.ndarray:
            q = np.clip(np.asarray(x, dtype=float).reshape(-1), axis[0], axis[-1])
            return np.interp(q, axis, m)

        def std_fn(x: np.ndarray) -> np.ndarray:
            q = np.clip(np.asarray(x, dtype=float).reshape(-1), axis[0], axis[-1])
            return np.interp(q, axis, s)

        return mean_fn, std_fn

    from scipy.interpolate import RegularGridInterpolator

    mean_interp = RegularGridInterpolator(axes, means, bounds_error=False, fill_value=None)
    std_interp = RegularGridInterpolator(axes, stds, bounds_error=False, fill_value=None)
    lows = np.array([a[0] for a in axes])
    highs = np.array([a[-1] for a in axes])

    def mean_fn(x: np.ndarray) -> np.ndarray:
        q = np.clip(np.asarray(x, dtype=float).reshape(-1, len(axes)), lows, highs)
        return np.asarray(mean_interp(q), dtype=float)

    def std_fn(x: np.ndarray) -> np.ndarray:
        q = np.clip(np.asarray(x, dtype=float).reshape(-1, len(axes)), lows, highs)
        return np.abs(np.asarray(std_interp(q), dtype=float))

    return mean_fn, std_fn


def build_causal_prior(
    estimand: Estimand | None,
    source: Dataset | FactorModels,
    target_domains: Sequence[tuple[str, Domain]],
    grid_size: int = 25,
    n_mc: int = 128,
    seed: int = 0,
    domains: Mapping[str, Domain] | None = None,
    hyper: GpHyper | None = None,
    fallback_std: float = 1.0,
) -> CausalPrior:
    """Evaluate the do-calculus estimate over a grid and interpolate.

    Returns an unavailable flat prior when the effect is not identifiable or
    the data do not yet cover the estimand.
    """

    from ..estimation.dataset import Dataset
    from ..estimation.effects import (
        EstimationError,
        FactorModels,
        estimate_causal_effect,
        estimate_effect_batch,
    )

    targets = tuple(name for name, _ in target_domains)
    if estimand is None:
        return CausalPrior.flat(targets, std=fallback_std)

    axes = [domain_axis(dom, grid_size) for _, dom in target_domains]
    if axes:
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
    else:
        points = np.zeros((1, 0))

    discrete = domains is not None and all(
        isinstance(domains.get(v), FiniteSet) for v in estimand.variables()
    )
    try:
        if discrete or isinstance(source, Dataset):
            means = np.empty(points.shape[0])
            stds = np.empty(points.shape[0])
            for i, point in enumerate(points):
                iv = Intervention(targets, tuple(float(v) for v in point))
                means[i], stds[i] = estimate_causal_effect(
                    estimand, source, iv, n_mc=n_mc, seed=seed + i, domains=domains, hyper=hyper
                )
        else:
            assert isinstance(source, FactorModels)
            means, stds = estimate_effect_batch(
                estimand, source, targets, points, n_mc=n_mc, seed=seed
            )
    except EstimationError:
        return CausalPrior.flat(targets, std=fallback_std)
    if not np.all(np.isfinite(means)) or not np.all(np.isfinite(stds)):
        return CausalPrior.flat(targets, std=fallback_std)

    shape = tuple(len(a) for a in axes) if axes else (1,)
    mean_fn, std_fn = _make_interpolators(axes, means.reshape(shape), stds.reshape(shape))
    return CausalPrior(
        targets=targets,
        mean=mean_fn,
        std_scale=std_fn,
        available=True,
        grid_means=means.reshape(shape),
        grid_stds=stds.reshape(shape),
    )
