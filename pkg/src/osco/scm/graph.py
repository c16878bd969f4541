"""Acyclic directed mixed graphs (directed + bidirected edges)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

__all__ = ["CausalGraph", "GraphError", "mutilate"]


class GraphError(ValueError):
    """Raised for malformed graphs or unknown variable names."""


def _as_pair(edge: Iterable[str]) -> tuple[str, str]:
    a, b = tuple(edge)
    return (a, b)


@dataclass(frozen=True)
class CausalGraph:
    """A causal diagram: directed edges for causation, bidirected edges for
    unobserved confounding between a pair of observed variables.

    ``nodes`` is an ordered tuple; the order is used as a stable tie-break
    everywhere but carries no semantics.
    """

    nodes: tuple[str, ...]
    directed_edges: frozenset[tuple[str, str]]
    bidirected_edges: frozenset[frozenset[str]]

    @staticmethod
    def create(
        nodes: Iterable[str],
        directed: Iterable[tuple[str, str]] = (),
        bidirected: Iterable[Iterable[str]] = (),
    ) -> "CausalGraph":
        graph = CausalGraph(
            nodes=tuple(nodes),
            directed_edges=frozenset(_as_pair(e) for e in directed),
            bidirected_edges=frozenset(frozenset(e) for e in bidirected),
        )
        graph.check()
        return graph

    def check(self) -> None:
        """Raise GraphError on any violated structural invariant."""

        for problem in self.violations():
            raise GraphError(problem)

    def violations(self) -> list[str]:
        problems: list[str] = []
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            problems.append("duplicate node names")
        for parent, child in sorted(self.directed_edges):
            if parent not in node_set or child not in node_set:
                problems.append(f"directed edge ({parent}, {child}) uses undeclared node")
            if parent == child:
                problems.append(f"self-loop on {parent}")
        for pair in self.bidirected_edges:
            members = sorted(pair)
            if len(members) != 2:
                problems.append(f"bidirected edge {members} must connect two distinct nodes")
                continue
            if any(m not in node_set for m in members):
                problems.append(f"bidirected edge {members} uses undeclared node")
        if self.topological_order_or_none() is None:
            problems.append("directed part contains a cycle")
        return problems

    @cached_property
    def _parents(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {v: set() for v in self.nodes}
        for parent, child in self.directed_edges:
            out[child].add(parent)
        return {v: frozenset(s) for v, s in out.items()}

    @cached_property
    def _children(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {v: set() for v in self.nodes}
        for parent, child in self.directed_edges:
            out[parent].add(child)
        return {v: frozenset(s) for v, s in out.items()}

    @cached_property
    def _siblings(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {v: set() for v in self.nodes}
        for pair in self.bidirected_edges:
            a, b = sorted(pair)
            out[a].add(b)
            out[b].add(a)
        return {v: frozenset(s) for v, s in out.items()}

    def parents(self, of: Iterable[str] | str) -> frozenset[str]:
        names = [of] if isinstance(of, str) else list(of)
        self._require(names)
        out: set[str] = set()
        for name in names:
            out |= self._parents[name]
        return frozenset(out)

    def children(self, of: Iterable[str] | str) -> frozenset[str]:
        names = [of] if isinstance(of, str) else list(of)
        self._require(names)
        out: set[str] = set()
        for name in names:
            out |= self._children[name]
        return frozenset(out)

    def siblings(self, of: str) -> frozenset[str]:
        self._require([of])
        return self._siblings[of]

    def ancestors(self, of: Iterable[str] | str, include_self: bool = True) -> frozenset[str]:
        """Ancestors via directed paths (bidirected edges do not count)."""

        seeds = [of] if isinstance(of, str) else list(of)
        self._require(seeds)
        seen: set[str] = set(seeds)
        stack = list(seeds)
        while stack:
            for parent in self._parents[stack.pop()]:
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        if not include_self:
            seen -= set(seeds)
        return frozenset(seen)

    def descendants(self, of: Iterable[str] | str, include_self: bool = True) -> frozenset[str]:
        seeds = [of] if isinstance(of, str) else list(of)
        self._require(seeds)
        seen: set[str] = set(seeds)
        stack = list(seeds)
        while stack:
            for child in self._children[stack.pop()]:
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        if not include_self:
            seen -= set(seeds)
        return frozenset(seen)

    def topological_order_or_none(self) -> tuple[str, ...] | None:
        indeg = {v: 0 for v in self.nodes}
        for _, child in self.directed_edges:
            if child in indeg:
                indeg[child] += 1
        ready = [v for v in self.nodes if indeg[v] == 0]
        order: list[str] = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            for child in sorted(self._children.get(node, ())):
                indeg[child] -= 1
                if indeg[child] == 0:
                    ready.append(child)
        return tuple(order) if len(order) == len(self.nodes) else None

    def topological_order(self) -> tuple[str, ...]:
        order = self.topological_order_or_none()
        if order is None:
            raise GraphError("directed part contains a cycle")
        return order

    def subgraph(self, keep: Iterable[str]) -> "CausalGraph":
        kept = set(keep)
        self._require(kept)
        return CausalGraph(
            nodes=tuple(v for v in self.nodes if v in kept),
            directed_edges=frozenset(
                (p, c) for p, c in self.directed_edges if p in kept and c in kept
            ),
            bidirected_edges=frozenset(
                pair for pair in self.bidirected_edges if pair <= kept
            ),
        )

    def _require(self, names: Iterable[str]) -> None:
        unknown = [n for n in names if n not in set(self.nodes)]
        if unknown:
            raise GraphError(f"unknown variable name(s): {sorted(unknown)}")


def mutilate(graph: CausalGraph, targets: Iterable[str]) -> CausalGraph:
    """Remove all arrowheads into ``targets``: directed edges into them and
    bidirected edges incident to them.  Nodes are retained."""

    target_set = set(targets)
    graph._require(target_set)
    return CausalGraph(
        nodes=graph.nodes,
        directed_edges=frozenset(
            (p, c) for p, c in graph.directed_edges if c not in target_set
        ),
        bidirected_edges=frozenset(
            pair for pair in graph.bidirected_edges if not (pair & target_set)
        ),
    )
