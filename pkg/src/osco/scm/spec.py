"""Structural causal model specifications and their validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .expr import Expr, expr_names
from .graph import CausalGraph

__all__ = [
    "NoiseDist",
    "Interval",
    "FiniteSet",
    "Domain",
    "Intervention",
    "SampleRow",
    "ScmSpec",
    "ValidationReport",
    "ScmError",
    "validate",
]


class ScmError(ValueError):
    """Raised when an operation is asked to use an invalid model."""


@dataclass(frozen=True)
class NoiseDist:
    """Noise law for one exogenous term.

    kind is one of ``normal`` (params: mean, std), ``uniform`` (params: low,
    high) or ``bernoulli`` (params: p).
    """

    kind: str
    params: tuple[float, ...]

    @staticmethod
    def normal(mean: float, std: float) -> "NoiseDist":
        return NoiseDist("normal", (float(mean), float(std)))

    @staticmethod
    def uniform(low: float, high: float) -> "NoiseDist":
        return NoiseDist("uniform", (float(low), float(high)))

    @staticmethod
    def bernoulli(p: float) -> "NoiseDist":
        return NoiseDist("bernoulli", (float(p),))

    def violations(self, name: str) -> list[str]:
        if self.kind == "normal":
            if len(self.params) != 2 or self.params[1] < 0:
                return [f"noise {name}: normal needs (mean, std>=0)"]
        elif self.kind == "uniform":
            if len(self.params) != 2 or self.params[0] > self.params[1]:
                return [f"noise {name}: uniform needs (low <= high)"]
        elif self.kind == "bernoulli":
            if len(self.params) != 1 or not (0.0 <= self.params[0] <= 1.0):
                return [f"noise {name}: bernoulli needs p in [0, 1]"]
        else:
            return [f"noise {name}: unknown kind {self.kind!r}"]
        return []


@dataclass(frozen=True)
class Interval:
    low: float
    high: float

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high

    @property
    def width(self) -> float:
        return self.high - self.low

    def __str__(self) -> str:
        return f"[{self.low}, {self.high}]"


@dataclass(frozen=True)
class FiniteSet:
    values: tuple[float, ...]

    def contains(self, value: float) -> bool:
        return any(value == v for v in self.values)

    @property
    def low(self) -> float:
        return min(self.values)

    @property
    def high(self) -> float:
        return max(self.values)

    @property
    def width(self) -> float:
        return self.high - self.low

    def __str__(self) -> str:
        return "{" + ", ".join(repr(v) for v in self.values) + "}"


Domain = Union[Interval, FiniteSet]


@dataclass(frozen=True)
class Intervention:
    """An atomic intervention fixing ``targets`` to ``values``.

    The empty intervention (no targets) is a first-class value: evaluating it
    means measuring the target under the observational regime.
    """

    targets: tuple[str, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.targets) != len(self.values):
            raise ScmError("intervention needs one value per target")
        if len(set(self.targets)) != len(self.targets):
            raise ScmError("intervention targets must be distinct")

    @property
    def is_empty(self) -> bool:
        return not self.targets

    def as_mapping(self) -> dict[str, float]:
        return dict(zip(self.targets, self.values))

    def key(self) -> tuple[str, ...]:
        return tuple(sorted(self.targets))

    def __str__(self) -> str:
        if self.is_empty:
            return "do()"
        inner = ", ".join(f"{t}={v!r}" for t, v in zip(self.targets, self.values))
        return f"do({inner})"


@dataclass(frozen=True)
class SampleRow:
    """One measured record: observational or the outcome of one trial."""

    assignment: dict[str, float]
    kind: str  # "observational" | "interventional"
    step_index: int = 1
    intervention: Intervention | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("observational", "interventional"):
            raise ScmError(f"unknown row kind {self.kind!r}")
        if self.kind == "interventional" and self.intervention is None:
            raise ScmError("interventional row needs its intervention")


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:  # truthy iff clean
        return self.ok


@dataclass(frozen=True)
class ScmSpec:
    """Generative model: graph, structural functions, noise laws, roles and
    domains.  Instances are immutable and safe to share across runs."""

    graph: CausalGraph
    functions: Mapping[str, Expr]
    noise: Mapping[str, NoiseDist]
    manipulative: frozenset[str]
    non_manipulative: frozenset[str]
    target: str
    domains: Mapping[str, Domain]
    target_bound: float = 1000.0

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.graph.nodes

    def domain(self, node: str) -> Domain:
        try:
            return self.domains[node]
        except KeyError:
            raise ScmError(f"no domain declared for {node!r}") from None

    def is_discrete(self) -> bool:
        return all(isinstance(self.domains[v], FiniteSet) for v in self.nodes)

    def noise_terms_of(self, node: str) -> frozenset[str]:
        return frozenset(expr_names(self.functions[node])) - set(self.nodes)

    def shared_noise_pairs(self) -> frozenset[frozenset[str]]:
        """Node pairs that share at least one noise term."""

        users: dict[str, list[str]] = {}
        for node in self.nodes:
            if node not in self.functions:
                continue
            for term in self.noise_terms_of(node):
                users.setdefault(term, []).append(node)
        pairs: set[frozenset[str]] = set()
        for nodes in users.values():
            for i, a in enumerate(nodes):
                for b in nodes[i + 1 :]:
                    pairs.add(frozenset({a, b}))
        return frozenset(pairs)

    def validate_intervention(self, iv: Intervention) -> None:
        for tgt, val in zip(iv.targets, iv.values):
            if tgt not in self.manipulative:
                raise ScmError(f"{tgt!r} is not manipulative")
            if not self.domain(tgt).contains(val):
                raise ScmError(f"value {val!r} outside dom({tgt}) = {self.domain(tgt)}")


def validate(spec: ScmSpec) -> ValidationReport:
    """Collect every violated invariant; an empty report means well-formed."""

    problems: list[str] = []
    problems.extend(spec.graph.violations())
    node_set = set(spec.graph.nodes)

    if spec.target not in node_set:
        problems.append(f"target {spec.target!r} is not a declared node")
    if spec.target not in spec.non_manipulative:
        problems.append("target must be non-manipulative")
    overlap = spec.manipulative & spec.non_manipulative
    if overlap:
        problems.append(f"roles overlap: {sorted(overlap)}")
    stray = (spec.manipulative | spec.non_manipulative) - node_set
    if stray:
        problems.append(f"role members are not nodes: {sorted(stray)}")

    for node in spec.graph.nodes:
        if node not in spec.functions:
            problems.append(f"no structural function for {node}")
        if node not in spec.domains:
            problems.append(f"no domain for {node}")

    declared_noise = set(spec.noise)
    for node, fn in spec.functions.items():
        if node not in node_set:
            problems.append(f"function for undeclared node {node}")
            continue
        refs = expr_names(fn)
        parent_refs = refs & node_set
        extra = parent_refs - spec.graph.parents(node)
        if extra:
            problems.append(f"f_{node} references non-parents: {sorted(extra)}")
        noise_refs = refs - node_set
        unknown_noise = noise_refs - declared_noise
        if unknown_noise:
            problems.append(f"f_{node} uses undeclared noise: {sorted(unknown_noise)}")

    for name, dist in spec.noise.items():
        problems.extend(dist.violations(name))

    # Shared noise terms and bidirected edges must match one-to-one.
    shared = spec.shared_noise_pairs()
    declared_pairs = spec.graph.bidirected_edges
    for pair in sorted(shared - declared_pairs, key=sorted):
        problems.append(
            f"nodes {sorted(pair)} share a noise term but no bidirected edge is declared"
        )
    for pair in sorted(declared_pairs - shared, key=sorted):
        problems.append(
            f"bidirected edge {sorted(pair)} has no shared noise term backing it"
        )

    if spec.target in spec.domains:
        dom = spec.domains[spec.target]
        bound = max(abs(dom.low), abs(dom.high))
        if not math.isfinite(bound) or bound > spec.target_bound:
            problems.append(
                f"target domain {dom} exceeds declared bound {spec.target_bound}"
            )

    return ValidationReport(tuple(problems))
