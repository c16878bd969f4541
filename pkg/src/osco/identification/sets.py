"""Intervention-set families and minimal observation sets.

``enumerate_mis`` uses the ancestral non-redundancy criterion (every member
of the set must remain an ancestor of the outcome once the set is
intervened on).  ``enumerate_pomis`` brute-forces the confounded-territory /
interventional-border characterisation, absorbing non-manipulative border
variables into the territory because they cannot be intervened on.

Both accept an ``override`` family: benchmark registries pin the published
families where they differ from the graph criteria, and the published data
wins for experiment configuration.
"""

from __future__ import annotations

import itertools
from typing import Iterable

from ..scm.graph import CausalGraph, GraphError, mutilate
from .dsep import c_components
from .estimand import Estimand
from .identify import IdResult, Identifiable

__all__ = [
    "minimal_observation_set",
    "enumerate_mis",
    "enumerate_pomis",
    "muct_and_border",
    "family_sorted",
]


def minimal_observation_set(result: IdResult | Estimand) -> frozenset[str]:
    """The variables that must be measured to evaluate the estimand."""

    if isinstance(result, Estimand):
        return result.variables()
    if isinstance(result, Identifiable):
        return result.estimand.variables()
    raise ValueError(f"effect is not identifiable: {result.witness}")


def family_sorted(family: Iterable[frozenset[str]]) -> list[tuple[str, ...]]:
    """Stable, readable ordering of a family of variable sets."""

    return sorted((tuple(sorted(s)) for s in family), key=lambda t: (len(t), t))


def enumerate_mis(
    graph: CausalGraph,
    outcome: str,
    manipulative: Iterable[str],
    override: frozenset[frozenset[str]] | None = None,
) -> frozenset[frozenset[str]]:
    """All non-redundant intervention sets: X such that every member is
    still an ancestor of the outcome in the mutilated graph."""

    if override is not None:
        return frozenset(frozenset(s) for s in override)
    manipulative = sorted(set(manipulative))
    if outcome in manipulative:
        raise GraphError("outcome cannot be manipulative")
    family: set[frozenset[str]] = set()
    for size in range(len(manipulative) + 1):
        for combo in itertools.combinations(manipulative, size):
            cut = mutilate(graph, combo)
            anc = cut.ancestors([outcome])
            if all(member in anc for member in combo):
                family.add(frozenset(combo))
    return frozenset(family)


def muct_and_border(
    graph: CausalGraph,
    outcome: str,
    manipulative: frozenset[str],
) -> tuple[frozenset[str], frozenset[str]]:
    """Confounded territory around the outcome and its parent border.

    The territory grows by c-component co-membership and descendants inside
    the ancestral subgraph of the outcome; border variables that are not
    manipulable are absorbed into the territory (they can never be the
    intervened frontier).
    """

    anc = graph.ancestors([outcome])
    g = graph.subgraph(anc)
    comp_of: dict[str, frozenset[str]] = {}
    for comp in c_components(g):
        for v in comp:
            comp_of[v] = comp

    territory: set[str] = {outcome}
    while True:
        changed = True
        while changed:
            changed = False
            for v in list(territory):
                grown = comp_of[v] | g.descendants([v])
                if not grown <= territory:
                    territory |= grown
                    changed = True
        border = g.parents(territory) - territory
        stuck = border - manipulative
        if not stuck:
            return frozenset(territory), frozenset(border)
        territory |= stuck


def enumerate_pomis(
    graph: CausalGraph,
    outcome: str,
    manipulative: Iterable[str],
    override: frozenset[frozenset[str]] | None = None,
) -> frozenset[frozenset[str]]:
    """Possibly-optimal minimal intervention sets.

    A candidate set qualifies exactly when it equals the interventional
    border obtained after mutilating it away.
    """

    if override is not None:
        return frozenset(frozenset(s) for s in override)
    manip = frozenset(manipulative)
    if outcome in manip:
        raise GraphError("outcome cannot be manipulative")
    family: set[frozenset[str]] = set()
    names = sorted(manip)
    for size in range(len(names) + 1):
        for combo in itertools.combinations(names, size):
            candidate = frozenset(combo)
            _, border = muct_and_border(mutilate(graph, candidate), outcome, manip)
            if border == candidate:
                family.add(candidate)
    return frozenset(family)
