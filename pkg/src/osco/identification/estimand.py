"""Expression trees for observational probability estimands.

An estimand is a do-free expression built from conditional factors,
marginalisation, products and quotients.  Intervention variables appear as
free references inside factors; the enclosing :class:`Estimand` records them
so evaluation can substitute the intervention levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

__all__ = [
    "CondFactor",
    "Marginal",
    "Product",
    "Quotient",
    "EstimandNode",
    "Estimand",
    "free_variables",
    "all_variables",
    "canonical",
    "structurally_equal",
    "pretty",
]


@dataclass(frozen=True)
class CondFactor:
    """P(outcome | given); ``given`` empty means a (joint) marginal factor."""

    outcome: tuple[str, ...]
    given: tuple[str, ...] = ()


@dataclass(frozen=True)
class Marginal:
    """Sum (or integral, for continuous variables) over ``over``."""

    over: tuple[str, ...]
    child: "EstimandNode"


@dataclass(frozen=True)
class Product:
    children: tuple["EstimandNode", ...]


@dataclass(frozen=True)
class Quotient:
    numerator: "EstimandNode"
    denominator: "EstimandNode"


EstimandNode = Union[CondFactor, Marginal, Product, Quotient]


@dataclass(frozen=True)
class Estimand:
    """The full estimand: expression plus the intervention slots.

    ``fixed`` lists the intervention variables whose free occurrences in the
    tree are bound to the intervention levels at evaluation time.
    """

    root: EstimandNode
    fixed: tuple[str, ...]
    outcome: str

    def variables(self) -> frozenset[str]:
        return all_variables(self.root) | {self.outcome}


def all_variables(node: EstimandNode) -> frozenset[str]:
    """Every variable name occurring anywhere in the tree (free or bound)."""

    if isinstance(node, CondFactor):
        return frozenset(node.outcome) | frozenset(node.given)
    if isinstance(node, Marginal):
        return frozenset(node.over) | all_variables(node.child)
    if isinstance(node, Product):
        out: frozenset[str] = frozenset()
        for child in node.children:
            out |= all_variables(child)
        return out
    if isinstance(node, Quotient):
        return all_variables(node.numerator) | all_variables(node.denominator)
    raise TypeError(f"not an estimand node: {node!r}")


def free_variables(node: EstimandNode) -> frozenset[str]:
    """Variables not bound by an enclosing marginal inside the tree."""

    if isinstance(node, CondFactor):
        return frozenset(node.outcome) | frozenset(node.given)
    if isinstance(node, Marginal):
        return free_variables(node.child) - frozenset(node.over)
    if isinstance(node, Product):
        out: frozenset[str] = frozenset()
        for child in node.children:
            out |= free_variables(child)
        return out
    if isinstance(node, Quotient):
        return free_variables(node.numerator) | free_variables(node.denominator)
    raise TypeError(f"not an estimand node: {node!r}")


def canonical(node: EstimandNode) -> EstimandNode:
    """Canonical form for structural comparison: sorted factor variable
    tuples, sorted marginal sets, flattened products with sorted children."""

    if isinstance(node, CondFactor):
        return CondFactor(tuple(sorted(node.outcome)), tuple(sorted(node.given)))
    if isinstance(node, Marginal):
        child = canonical(node.child)
        if not node.over:
            return child
        if isinstance(child, Marginal):
            return Marginal(tuple(sorted(set(node.over) | set(child.over))), child.child)
        return Marginal(tuple(sorted(node.over)), child)
    if isinstance(node, Product):
        flat: list[EstimandNode] = []
        for child in node.children:
            c = canonical(child)
            if isinstance(c, Product):
                flat.extend(c.children)
            else:
                flat.append(c)
        if len(flat) == 1:
            return flat[0]
        return Product(tuple(sorted(flat, key=repr)))
    if isinstance(node, Quotient):
        return Quotient(canonical(node.numerator), canonical(node.denominator))
    raise TypeError(f"not an estimand node: {node!r}")


def structurally_equal(a: EstimandNode, b: EstimandNode) -> bool:
    """Equality up to factor reordering and marginal-variable order."""

    return canonical(a) == canonical(b)


def _pretty(node: EstimandNode, bound: frozenset[str], rename: dict[str, str]) -> str:
    if isinstance(node, CondFactor):
        out = ",".join(rename.get(v, v) for v in node.outcome)
        if node.given:
            giv = ",".join(rename.get(v, v) for v in node.given)
            return f"P({out}|{giv})"
        return f"P({out})"
    if isinstance(node, Marginal):
        rename = dict(rename)
        shown = []
        for v in node.over:
            label = v + "'" if v in bound or v in rename.values() else v
            rename[v] = label
            shown.append(label)
        inner_bound = bound | set(node.over)
        inner = _pretty(node.child, inner_bound, rename)
        return f"Σ_{{{','.join(shown)}}} {inner}"
    if isinstance(node, Product):
        parts = []
        for child in node.children:
            text = _pretty(child, bound, rename)
            if isinstance(child, (Marginal, Quotient)):
                text = f"[{text}]"
            parts.append(text)
        return "".join(parts)
    if isinstance(node, Quotient):
        num = _pretty(node.numerator, bound, rename)
        den = _pretty(node.denominator, bound, rename)
        return f"({num})/({den})"
    raise TypeError(f"not an estimand node: {node!r}")


def pretty(estimand: Estimand | EstimandNode) -> str:
    """Render in the usual summation notation, e.g. ``Σ_{S} P(Y|B,S)P(S)``.

    Marginal variables that shadow an outer name are primed, as in
    ``Σ_{Z} P(Z|X)[Σ_{X'} P(X')P(Y|X',Z)]``.
    """

    node = estimand.root if isinstance(estimand, Estimand) else estimand
    seed = frozenset(estimand.fixed) if isinstance(estimand, Estimand) else frozenset()
    return _pretty(node, seed, {})
