"""Reader for the sectioned text format that model files are shipped in.

A model file is one document with the sections ``[nodes]``, ``[edges]``,
``[bidirected]``, ``[functions]``, ``[noise]``, ``[domains]`` and ``[roles]``,
plus the optional ``[costs]`` and ``[reference]`` sections used by the
built-in benchmark registry.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import parse_expr
from .graph import CausalGraph
from .spec import FiniteSet, Interval, NoiseDist, ScmSpec

__all__ = ["ScmFileError", "ParsedScmFile", "parse_scm_text", "load_scm_file"]

_SECTIONS = {
    "nodes",
    "edges",
    "bidirected",
    "functions",
    "noise",
    "domains",
    "roles",
    "costs",
    "reference",
}

_REQUIRED = ("nodes", "functions", "noise", "domains", "roles")


class ScmFileError(ValueError):
    """Raised with a line number when a model file cannot be parsed."""


@dataclass
class ParsedScmFile:
    spec: ScmSpec
    costs: dict[str, float] = field(default_factory=dict)
    reference: dict[str, object] = field(default_factory=dict)


def _split_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ScmFileError(f"line {lineno}: unknown section [{name}]")
            if name in sections:
                raise ScmFileError(f"line {lineno}: duplicate section [{name}]")
            sections[name] = []
            current = name
            continue
        if current is None:
            raise ScmFileError(f"line {lineno}: content before any section header")
        sections[current].append((lineno, line))
    for required in _REQUIRED:
        if required not in sections:
            raise ScmFileError(f"missing required section [{required}]")
    return sections


def _parse_tokens(line: str) -> list[str]:
    return [tok for tok in re.split(r"[\s,]+", line) if tok]


def _parse_keyval(lineno: int, line: str) -> tuple[str, str]:
    if "=" not in line:
        raise ScmFileError(f"line {lineno}: expected 'name = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


_CALL_RE = re.compile(r"^([a-z_]+)\s*\((.*)\)$")


def _parse_call(lineno: int, value: str) -> tuple[str, list[float]]:
    match = _CALL_RE.match(value.strip())
    if match is None:
        raise ScmFileError(f"line {lineno}: expected name(args), got {value!r}")
    name, inner = match.groups()
    args = []
    for piece in inner.split(","):
        piece = piece.strip()
        if piece:
            try:
                args.append(float(piece))
            except ValueError:
                raise ScmFileError(f"line {lineno}: bad number {piece!r}") from None
    return name, args


def _parse_noise(lineno: int, value: str) -> NoiseDist:
    name, args = _parse_call(lineno, value)
    try:
        if name == "normal":
            return NoiseDist.normal(*args)
        if name == "uniform":
            return NoiseDist.uniform(*args)
        if name == "bernoulli":
            return NoiseDist.bernoulli(*args)
    except TypeError:
        raise ScmFileError(f"line {lineno}: wrong arity for {name}") from None
    raise ScmFileError(f"line {lineno}: unknown noise law {name!r}")


def _parse_domain(lineno: int, value: str):
    name, args = _parse_call(lineno, value)
    if name == "interval":
        if len(args) != 2:
            raise ScmFileError(f"line {lineno}: interval(low, high)")
        return Interval(args[0], args[1])
    if name == "set":
        if not args:
            raise ScmFileError(f"line {lineno}: set(...) needs at least one value")
        return FiniteSet(tuple(args))
    raise ScmFileError(f"line {lineno}: unknown domain kind {name!r}")


def parse_set_literal(text: str) -> frozenset[str]:
    """Parse ``{A,B}`` / ``{}`` into a frozenset of names."""

    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ScmFileError(f"expected a set literal, got {text!r}")
    inner = text[1:-1].strip()
    return frozenset(_parse_tokens(inner)) if inner else frozenset()


def parse_family_literal(text: str) -> frozenset[frozenset[str]]:
    """Parse ``{A} | {B,C} | {}`` into a family of sets."""

    return frozenset(parse_set_literal(part) for part in text.split("|"))


def parse_scm_text(text: str) -> ParsedScmFile:
    sections = _split_sections(text)

    nodes: list[str] = []
    for lineno, line in sections["nodes"]:
        nodes.extend(_parse_tokens(line))

    directed: list[tuple[str, str]] = []
    for lineno, line in sections.get("edges", []):
        parts = [p.strip() for p in line.split("->")]
        if len(parts) < 2:
            raise ScmFileError(f"line {lineno}: expected 'A -> B', got {line!r}")
        for parent, child in zip(parts, parts[1:]):
            directed.append((parent, child))

    bidirected: list[tuple[str, str]] = []
    for lineno, line in sections.get("bidirected", []):
        parts = [p.strip() for p in line.split("<->")]
        if len(parts) != 2:
            raise ScmFileError(f"line {lineno}: expected 'A <-> B', got {line!r}")
        bidirected.append((parts[0], parts[1]))

    functions = {}
    for lineno, line in sections["functions"]:
        key, value = _parse_keyval(lineno, line)
        functions[key] = parse_expr(value)

    noise = {}
    for lineno, line in sections["noise"]:
        key, value = _parse_keyval(lineno, line)
        noise[key] = _parse_noise(lineno, value)

    domains = {}
    for lineno, line in sections["domains"]:
        key, value = _parse_keyval(lineno, line)
        domains[key] = _parse_domain(lineno, value)

    roles: dict[str, list[str]] = {}
    for lineno, line in sections["roles"]:
        key, value = _parse_keyval(lineno, line)
        roles[key] = _parse_tokens(value)
    for role_key in ("manipulative", "target"):
        if role_key not in roles:
            raise ScmFileError(f"[roles] section must set {role_key}")
    if len(roles["target"]) != 1:
        raise ScmFileError("exactly one target variable is supported")

    graph = CausalGraph(
        nodes=tuple(nodes),
        directed_edges=frozenset(directed),
        bidirected_edges=frozenset(frozenset(e) for e in bidirected),
    )
    spec = ScmSpec(
        graph=graph,
        functions=functions,
        noise=noise,
        manipulative=frozenset(roles["manipulative"]),
        non_manipulative=frozenset(roles.get("non_manipulative", [])) | {roles["target"][0]},
        target=roles["target"][0],
        domains=domains,
    )

    costs: dict[str, float] = {}
    for lineno, line in sections.get("costs", []):
        key, value = _parse_keyval(lineno, line)
        try:
            costs[key] = float(value)
        except ValueError:
            raise ScmFileError(f"line {lineno}: bad number {value!r}") from None

    reference: dict[str, object] = {"mos": {}}
    for lineno, line in sections.get("reference", []):
        key, value = _parse_keyval(lineno, line)
        if key in ("mis", "pomis"):
            reference[key] = parse_family_literal(value)
        elif key.startswith("mos"):
            set_spec = key[len("mos") :].strip()
            targets = parse_set_literal(set_spec) if set_spec.startswith("{") else frozenset(
                _parse_tokens(set_spec)
            )
            reference["mos"][targets] = frozenset(_parse_tokens(value))
        elif key.startswith("optimum"):
            reference[key] = value
        else:
            raise ScmFileError(f"line {lineno}: unknown reference key {key!r}")
    return ParsedScmFile(spec=spec, costs=costs, reference=reference)


def load_scm_file(path: str | Path) -> ParsedScmFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScmFileError(f"cannot read {path}: {err}") from None
    return parse_scm_text(text)
