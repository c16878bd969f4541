"""Domain-coverage ratio that rewards early observation collection."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..scm.spec import Domain

__all__ = ["volume_ratio", "DEFAULT_RATIO_CAP"]

DEFAULT_RATIO_CAP = 100.0


def volume_ratio(
    domains: Mapping[str, Domain],
    columns: Sequence[str],
    observed: np.ndarray,
    cap: float = DEFAULT_RATIO_CAP,
) -> float:
    """Volume of the declared domain box over the observed bounding box,
    both restricted to ``columns``.

    Axis-aligned boxes stand in for convex hulls (hulls are degenerate for
    one-dimensional or collinear data).  Fewer than two rows, or a
    zero-volume observed box, return the cap.
    """

    observed = np.asarray(observed, dtype=float)
    if observed.ndim == 1:
        observed = observed[:, None]
    if observed.shape[0] < 2:
        return cap

    full = 1.0
    seen = 1.0
    for j, name in enumerate(columns):
        width = domains[name].width
        if width <= 0:
            continue  # degenerate dimension contributes to neither box
        spread = float(observed[:, j].max() - observed[:, j].min())
        if spread <= 0:
            return cap
        full *= width
        seen *= spread
    return min(full / seen, cap)
