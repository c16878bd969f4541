"""Causal-effect identification for ADMGs.

``identify`` returns an observational estimand for P(outcome | do(targets)),
or a hedge witness when the effect is not uniquely computable from the
observational law.  The search prefers covariate-adjustment formulas (they
match the compact textbook forms); when no valid adjustment set exists it
falls back to the general recursive identification algorithm over
c-component factorisations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

from ..scm.graph import CausalGraph, GraphError, mutilate
from .dsep import c_components, d_separated
from .estimand import (
    CondFactor,
    Estimand,
    EstimandNode,
    Marginal,
    Product,
    Quotient,
    free_variables,
)

__all__ = [
    "Identifiable",
    "NotIdentifiable",
    "IdResult",
    "identify",
    "find_adjustment_set",
    "simplify_node",
]


@dataclass(frozen=True)
class Identifiable:
    estimand: Estimand

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class NotIdentifiable:
    witness: str

    @property
    def ok(self) -> bool:
        return False


IdResult = Union[Identifiable, NotIdentifiable]


class _Hedge(Exception):
    def __init__(self, witness: str):
        super().__init__(witness)
        self.witness = witness


# ---------------------------------------------------------------------------
# Covariate adjustment
# ---------------------------------------------------------------------------

def _proper_causal_nodes(graph: CausalGraph, x: frozenset[str], y: str) -> frozenset[str]:
    """Nodes (other than X) lying on a proper causal path from X to Y."""

    no_in_x = CausalGraph(
        nodes=graph.nodes,
        directed_edges=frozenset((p, c) for p, c in graph.directed_edges if c not in x),
        bidirected_edges=graph.bidirected_edges,
    )
    downstream = no_in_x.descendants(x) - x
    return frozenset(d for d in downstream if y in no_in_x.descendants([d]))


def _proper_backdoor_graph(graph: CausalGraph, x: frozenset[str], pcp: frozenset[str]) -> CausalGraph:
    """Remove the first edge of every proper causal path from X."""

    removed = frozenset((p, c) for p, c in graph.directed_edges if p in x and c in pcp)
    return CausalGraph(
        nodes=graph.nodes,
        directed_edges=graph.directed_edges - removed,
        bidirected_edges=graph.bidirected_edges,
    )


def find_adjustment_set(graph: CausalGraph, x: Iterable[str], y: str) -> frozenset[str] | None:
    """Smallest valid adjustment set for P(y | do(x)), or None.

    Ties between equal-size sets break lexicographically on the sorted
    variable names so results are reproducible.
    """

    x = frozenset(x)
    if not x:
        return frozenset()
    pcp = _proper_causal_nodes(graph, x, y)
    forbidden = set(x) | {y}
    for w in pcp:
        forbidden |= graph.descendants([w])
    pbd = _proper_backdoor_graph(graph, x, pcp)
    candidates = sorted(set(graph.nodes) - forbidden)
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            if d_separated(pbd, x, {y}, combo):
                return frozenset(combo)
    return None


def _adjustment_estimand(x: tuple[str, ...], y: str, adj: frozenset[str]) -> EstimandNode:
    given = tuple(sorted(set(x) | adj))
    factor = CondFactor((y,), given)
    if not adj:
        return factor
    weight = CondFactor(tuple(sorted(adj)), ())
    return Marginal(tuple(sorted(adj)), Product((factor, weight)))


# ---------------------------------------------------------------------------
# General identification over c-components
# ---------------------------------------------------------------------------

_JOINT = "~joint~"  # marker for the unmodified observational joint


def _marg(node: EstimandNode | str, over: Iterable[str], all_nodes: tuple[str, ...]) -> EstimandNode | str:
    over = [v for v in over]
    if not over:
        return node
    if isinstance(node, str) and node == _JOINT:
        keep = tuple(v for v in all_nodes if v not in set(over))
        return CondFactor(keep, ())
    if isinstance(node, CondFactor) and not node.given and set(over) <= set(node.outcome):
        # marginal of a joint marginal is again a joint marginal
        return CondFactor(tuple(v for v in node.outcome if v not in set(over)), ())
    if isinstance(node, Marginal):
        return Marginal(tuple(sorted(set(node.over) | set(over))), node.child)
    return Marginal(tuple(sorted(over)), node)


def _conditional(
    p: EstimandNode | str,
    var: str,
    given: tuple[str, ...],
    scope: tuple[str, ...],
) -> EstimandNode:
    """P(var | given) relative to the current distribution ``p`` whose scope
    (non-marginalised variables) is ``scope``."""

    if isinstance(p, str) and p == _JOINT:
        return CondFactor((var,), given)
    if isinstance(p, CondFactor) and not p.given and var in p.outcome and set(given) <= set(p.outcome):
        # conditionals of a joint marginal are ordinary observational conditionals
        return CondFactor((var,), given)
    rest = [v for v in scope if v != var and v not in given]
    num = _marg(p, rest, scope)
    den = _marg(p, [v for v in scope if v not in given], scope)
    assert not isinstance(num, str) and not isinstance(den, str)
    if not given:
        return num
    return Quotient(num, den)


def _id(
    y: frozenset[str],
    x: frozenset[str],
    p: EstimandNode | str,
    graph: CausalGraph,
    order: tuple[str, ...],
) -> EstimandNode | str:
    """The recursive identification algorithm.

    ``p`` is the current distribution expression (the marker ``_JOINT``
    denotes the untouched observational joint); ``order`` is a fixed
    topological order of the full graph used for chain-rule factors.
    """

    nodes = frozenset(graph.nodes)
    scope = tuple(v for v in order if v in nodes)

    # line 1: no intervention left
    if not x:
        return _marg(p, sorted(nodes - y), scope)

    # line 2: restrict to ancestors of y
    anc = graph.ancestors(y)
    if nodes - anc:
        return _id(y, x & anc, _marg(p, sorted(nodes - anc), scope), graph.subgraph(anc), order)

    # line 3: absorb variables that act like interventions
    g_bar_x = mutilate(graph, x)
    w = (nodes - x) - g_bar_x.ancestors(y)
    if w:
        return _id(y, x | w, p, graph, order)

    # line 4: factorise over the c-components of G minus X
    sub = graph.subgraph(nodes - x)
    comps = sorted(c_components(sub), key=lambda s: tuple(sorted(s)))
    if len(comps) > 1:
        factors = [_id(comp, nodes - comp, p, graph, order) for comp in comps]
        assert all(not isinstance(f, str) for f in factors)
        product = Product(tuple(factors))  # type: ignore[arg-type]
        return _marg(product, sorted(nodes - (y | x)), scope)

    (s,) = comps
    whole = c_components(graph)

    # line 5: hedge — the whole graph is one confounded component
    if frozenset(graph.nodes) in whole:
        raise _Hedge(
            "hedge: c-forest pair over component {" +
            ", ".join(sorted(graph.nodes)) + "} and subset {" + ", ".join(sorted(s)) + "}"
        )

    # line 6: s is itself a c-component of G
    if s in whole:
        factors = []
        for i, v in enumerate(scope):
            if v in s:
                factors.append(_conditional(p, v, scope[:i], scope))
        node: EstimandNode = factors[0] if len(factors) == 1 else Product(tuple(factors))
        return _marg(node, sorted(s - y), scope)

    # line 7: recurse inside the c-component containing s
    s_prime = next(comp for comp in whole if s <= comp)
    factors = []
    for i, v in enumerate(scope):
        if v in s_prime:
            factors.append(_conditional(p, v, scope[:i], scope))
    new_p: EstimandNode = factors[0] if len(factors) == 1 else Product(tuple(factors))
    return _id(y, x & s_prime, new_p, graph.subgraph(s_prime), order)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def _drop_separated_conditions(node: EstimandNode, graph: CausalGraph) -> EstimandNode:
    if isinstance(node, CondFactor):
        given = list(node.given)
        changed = True
        while changed:
            changed = False
            for g in sorted(given):
                rest = [v for v in given if v != g]
                if d_separated(graph, set(node.outcome), {g}, rest):
                    given.remove(g)
                    changed = True
                    break
        return CondFactor(node.outcome, tuple(given))
    if isinstance(node, Marginal):
        return Marginal(node.over, _drop_separated_conditions(node.child, graph))
    if isinstance(node, Product):
        return Product(tuple(_drop_separated_conditions(c, graph) for c in node.children))
    if isinstance(node, Quotient):
        return Quotient(
            _drop_separated_conditions(node.numerator, graph),
            _drop_separated_conditions(node.denominator, graph),
        )
    raise TypeError(f"not an estimand node: {node!r}")


def _eliminate_unit_sums(node: EstimandNode) -> EstimandNode:
    """Remove ``Σ_v P(v|·)`` factors that integrate to one."""

    if isinstance(node, Marginal):
        child = _eliminate_unit_sums(node.child)
        over = list(node.over)
        if isinstance(child, Product):
            children = list(child.children)
            changed = True
            while changed:
                changed = False
                for v in list(over):
                    using = [c for c in children if v in free_variables(c)]
                    if (
                        len(using) == 1
                        and isinstance(using[0], CondFactor)
                        and using[0].outcome == (v,)
                    ):
                        children.remove(using[0])
                        over.remove(v)
                        changed = True
            child = children[0] if len(children) == 1 else Product(tuple(children))
        elif isinstance(child, CondFactor) and len(child.outcome) > 1:
            # Σ_v P(v, rest | g) = P(rest | g) for v in the outcome block
            outcome = list(child.outcome)
            for v in list(over):
                if v in outcome and len(outcome) > 1:
                    outcome.remove(v)
                    over.remove(v)
            child = CondFactor(tuple(outcome), child.given)
        if not over:
            return child
        return Marginal(tuple(over), child)
    if isinstance(node, Product):
        flat: list[EstimandNode] = []
        for c in node.children:
            c = _eliminate_unit_sums(c)
            if isinstance(c, Product):
                flat.extend(c.children)
            else:
                flat.append(c)
        return flat[0] if len(flat) == 1 else Product(tuple(flat))
    if isinstance(node, Quotient):
        return Quotient(
            _eliminate_unit_sums(node.numerator), _eliminate_unit_sums(node.denominator)
        )
    return node


def simplify_node(node: EstimandNode, graph: CausalGraph) -> EstimandNode:
    """Sound cleanups: drop d-separated conditioning variables and cancel
    sums of bare conditionals."""

    node = _drop_separated_conditions(node, graph)
    node = _eliminate_unit_sums(node)
    return node


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def identify(
    graph: CausalGraph,
    targets: Iterable[str],
    outcome: str,
    simplify: bool = True,
) -> IdResult:
    """Identify P(outcome | do(targets)) from the observational law.

    The empty intervention returns the joint-marginal form
    ``Σ_{V∖Y} P(V)`` (its variable set is all of V, matching the convention
    that evaluating the empty intervention observationally records a full
    sample).
    """

    x = frozenset(targets)
    node_set = set(graph.nodes)
    unknown = (x | {outcome}) - node_set
    if unknown:
        raise GraphError(f"unknown variable name(s): {sorted(unknown)}")
    if outcome in x:
        raise GraphError("outcome cannot be intervened on")

    if not x:
        root = Marginal(
            tuple(v for v in graph.nodes if v != outcome),
            CondFactor(tuple(graph.nodes), ()),
        )
        return Identifiable(Estimand(root=root, fixed=(), outcome=outcome))

    adj = find_adjustment_set(graph, x, outcome)
    if adj is not None:
        root = _adjustment_estimand(tuple(sorted(x)), outcome, adj)
    else:
        order = graph.topological_order()
        try:
            raw = _id(frozenset({outcome}), x, _JOINT, graph, order)
        except _Hedge as hedge:
            return NotIdentifiable(witness=hedge.witness)
        if isinstance(raw, str):  # pragma: no cover - joint marker never escapes
            raise AssertionError("identification returned the bare joint")
        root = raw
    if simplify:
        root = simplify_node(root, graph)
    return Identifiable(Estimand(root=root, fixed=tuple(sorted(x)), outcome=outcome))
