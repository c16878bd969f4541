"""Registry of the built-in benchmark models.

Each benchmark bundles the generative model with its default cost settings
and the reference intervention/observation set families used by the harness
and the test suite.  The reference families are pinned data: where the
generic set-enumeration algorithms disagree with them, the reference wins
(the registry is the per-model override mechanism).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .scmfile import ParsedScmFile, load_scm_file, parse_scm_text
from .spec import ScmSpec

__all__ = ["Benchmark", "builtin_benchmarks", "get_benchmark", "benchmark_names"]

_BUILTIN = ("chain", "chain_uc", "synthetic", "psa", "synthetic_mab")


@dataclass(frozen=True)
class Benchmark:
    name: str
    spec: ScmSpec
    observe_cost_per_variable: float
    intervene_cost_per_variable: float
    budget: float
    reference_mis: frozenset[frozenset[str]] | None
    reference_pomis: frozenset[frozenset[str]] | None
    reference_mos: dict[frozenset[str], frozenset[str]] = field(default_factory=dict)
    optimum_targets: tuple[str, ...] = ()
    optimum_values: tuple[float, ...] = ()
    optimum_mean: float | None = None


def _from_parsed(name: str, parsed: ParsedScmFile) -> Benchmark:
    costs = parsed.costs
    ref = parsed.reference
    opt_targets = tuple(str(ref.get("optimum_targets", "")).split()) if "optimum_targets" in ref else ()
    opt_values = (
        tuple(float(v) for v in str(ref["optimum_values"]).split())
        if "optimum_values" in ref
        else ()
    )
    return Benchmark(
        name=name,
        spec=parsed.spec,
        observe_cost_per_variable=costs.get("observe_per_variable", 0.25),
        intervene_cost_per_variable=costs.get("intervene_per_variable", 16.0),
        budget=costs.get("budget", 300.0),
        reference_mis=ref.get("mis"),
        reference_pomis=ref.get("pomis"),
        reference_mos=dict(ref.get("mos", {})),
        optimum_targets=opt_targets,
        optimum_values=opt_values,
        optimum_mean=float(ref["optimum_mean"]) if "optimum_mean" in ref else None,
    )


def load_benchmark_file(path: str | Path, name: str | None = None) -> Benchmark:
    """Load a benchmark from a model file on disk."""

    path = Path(path)
    return _from_parsed(name or path.stem, load_scm_file(path))


def builtin_benchmarks() -> dict[str, Benchmark]:
    """The five shipped benchmarks, loaded from their model files."""

    registry: dict[str, Benchmark] = {}
    for name in _BUILTIN:
        text = resources.files("osco.scm").joinpath(f"data/{name}.scm").read_text()
        registry[name] = _from_parsed(name, parse_scm_text(text))
    return registry


def benchmark_names() -> tuple[str, ...]:
    return _BUILTIN


def get_benchmark(name: str) -> Benchmark:
    registry = builtin_benchmarks()
    if name not in registry:
        raise KeyError(f"unknown benchmark {name!r}; available: {', '.join(_BUILTIN)}")
    return registry[name]
