"""d-separation on mixed graphs via the latent projection.

Bidirected edges are expanded into explicit latent common parents and the
standard reachability procedure (Koller & Friedman, Alg. 3.1) is run on the
augmented DAG.
"""

from __future__ import annotations

from typing import Iterable

from ..scm.graph import CausalGraph, GraphError

__all__ = ["d_separated", "c_components"]


def _augmented_adjacency(graph: CausalGraph) -> tuple[dict[str, set[str]], dict[str, set[str]]]:
    parents: dict[str, set[str]] = {v: set() for v in graph.nodes}
    children: dict[str, set[str]] = {v: set() for v in graph.nodes}
    for p, c in graph.directed_edges:
        parents[c].add(p)
        children[p].add(c)
    for i, pair in enumerate(sorted(graph.bidirected_edges, key=sorted)):
        a, b = sorted(pair)
        latent = f"~latent{i}~{a}~{b}"
        parents[latent] = set()
        children[latent] = {a, b}
        parents[a].add(latent)
        parents[b].add(latent)
    return parents, children


def d_separated(
    graph: CausalGraph,
    a: Iterable[str] | str,
    b: Iterable[str] | str,
    given: Iterable[str] | str = (),
) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked by ``given``."""

    set_a = {a} if isinstance(a, str) else set(a)
    set_b = {b} if isinstance(b, str) else set(b)
    set_z = {given} if isinstance(given, str) else set(given)
    for name in set_a | set_b | set_z:
        if name not in set(graph.nodes):
            raise GraphError(f"unknown variable name(s): [{name!r}]")
    if not set_a or not set_b:
        return True

    parents, children = _augmented_adjacency(graph)

    # Ancestors of the conditioning set (inclusive) in the augmented DAG.
    anc_z: set[str] = set(set_z)
    stack = list(set_z)
    while stack:
        for p in parents[stack.pop()]:
            if p not in anc_z:
                anc_z.add(p)
                stack.append(p)

    # (node, direction) reachability; "up" means the trail arrived from a
    # child, "down" means it arrived from a parent.
    visited: set[tuple[str, str]] = set()
    reachable: set[str] = set()
    frontier: list[tuple[str, str]] = [(x, "up") for x in set_a]
    while frontier:
        node, direction = frontier.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in set_z:
            reachable.add(node)
        if direction == "up" and node not in set_z:
            frontier.extend((p, "up") for p in parents[node])
            frontier.extend((c, "down") for c in children[node])
        elif direction == "down":
            if node not in set_z:
                frontier.extend((c, "down") for c in children[node])
            if node in anc_z:
                frontier.extend((p, "up") for p in parents[node])
    return not (reachable & set_b)


def c_components(graph: CausalGraph) -> frozenset[frozenset[str]]:
    """Partition of the nodes into connected components of the
    bidirected-edge-only subgraph (singletons for unconfounded nodes)."""

    siblings = {v: set() for v in graph.nodes}
    for pair in graph.bidirected_edges:
        a, b = sorted(pair)
        siblings[a].add(b)
        siblings[b].add(a)
    seen: set[str] = set()
    parts: list[frozenset[str]] = []
    for start in graph.nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            for nxt in siblings[stack.pop()]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        seen |= comp
        parts.append(frozenset(comp))
    return frozenset(parts)


def c_component_of(graph: CausalGraph, node: str) -> frozenset[str]:
    for comp in c_components(graph):
        if node in comp:
            return comp
    raise GraphError(f"unknown variable name(s): [{node!r}]")
