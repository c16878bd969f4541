"""Experiment configuration files (INI sections, strict keys)."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from ..optimizer.cbo import CboConfig
from ..optimizer.costs import CostModel
from ..optimizer.policies import TradeoffPolicy
from ..scm.benchmarks import Benchmark, benchmark_names, get_benchmark, load_benchmark_file
from ..stopping.reward import StoppingWeights
from ..surrogate.gp import GpHyper

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    pass


_SCHEMA: dict[str, dict[str, str]] = {
    "scm": {"name": "str", "file": "str"},
    "policy": {"policies": "strlist", "p_observe": "float", "coverage_target": "int"},
    "costs": {
        "observe_factor": "float",
        "intervene_factor": "float",
        "budget": "float",
        "empty_intervention_cost": "float",
        "observation_cost_grid": "floatlist",
    },
    "stopping": {
        "eta": "float",
        "kappa": "float",
        "tau": "float",
        "gamma": "float",
        "n_mc_lookahead": "int",
        "ratio_cap": "float",
    },
    "gp": {"lengthscale": "float", "signal_variance": "float", "noise_variance": "float"},
    "run": {
        "seeds": "intlist",
        "output_dir": "str",
        "workers": "int",
        "loop": "str",
        "n_candidates": "int",
        "prior_grid_size": "int",
        "prior_n_mc": "int",
        "prior_refresh_every": "int",
        "refresh_n_mc": "int",
        "ei_xi": "float",
        "wall_clock": "bool",
        "oracle_n_mc": "int",
        "regret_epsilon": "float",
        "max_stages": "int",
    },
}

_POLICY_NAMES = {
    "osco": TradeoffPolicy.osco,
    "always_intervene": TradeoffPolicy.always_intervene,
    "always_observe": TradeoffPolicy.always_observe,
    "random": TradeoffPolicy.random,
    "epsilon_greedy": TradeoffPolicy.epsilon_greedy,
}


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: Benchmark
    policies: tuple[TradeoffPolicy, ...]
    cost_models: tuple[CostModel, ...]
    seeds: tuple[int, ...]
    cbo: CboConfig
    output_dir: Path
    workers: int = 1
    loop: str = "auto"  # auto | cbo | cucb
    regret_epsilon: float = 0.1

    def run_matrix(self) -> list[tuple[TradeoffPolicy, CostModel, int]]:
        return [
            (policy, cost, seed)
            for policy in self.policies
            for cost in self.cost_models
            for seed in self.seeds
        ]


def _coerce(kind: str, raw: str, where: str):
    try:
        if kind == "str":
            return raw.strip()
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "floatlist":
            return tuple(float(tok) for tok in raw.split())
        if kind == "intlist":
            return tuple(int(tok) for tok in raw.split())
        if kind == "strlist":
            return tuple(raw.split())
    except ValueError:
        raise ConfigError(f"bad value for {where}: {raw!r} (expected {kind})") from None
    raise ConfigError(f"unknown schema kind {kind}")  # pragma: no cover


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and fully resolve a config file; unknown keys are errors."""

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open() as handle:
            parser.read_file(handle, source=str(path))
    except configparser.Error as err:
        raise ConfigError(f"cannot parse {path}: {err}") from None

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] in {path}")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            values[section][key] = _coerce(_SCHEMA[section][key], raw, f"[{section}] {key}")

    scm_section = values.get("scm", {})
    if "file" in scm_section:
        benchmark = load_benchmark_file(str(scm_section["file"]))
    elif "name" in scm_section:
        name = str(scm_section["name"])
        if name not in benchmark_names():
            raise ConfigError(f"unknown model {name!r}; built-ins: {', '.join(benchmark_names())}")
        benchmark = get_benchmark(name)
    else:
        raise ConfigError("[scm] section must set 'name' or 'file'")

    policy_section = values.get("policy", {})
    names = policy_section.get("policies", ("osco",))
    policies = []
    for token in names:  # type: ignore[union-attr]
        if token not in _POLICY_NAMES:
            raise ConfigError(f"unknown policy {token!r}; choose from {sorted(_POLICY_NAMES)}")
        factory = _POLICY_NAMES[token]
        if token == "random":
            policies.append(factory(float(policy_section.get("p_observe", 0.5))))
        elif token == "epsilon_greedy":
            policies.append(factory(int(policy_section.get("coverage_target", 200))))
        else:
            policies.append(factory())

    costs = values.get("costs", {})
    base = dict(
        observe_factor=float(costs.get("observe_factor", benchmark.observe_cost_per_variable)),
        intervene_factor=float(costs.get("intervene_factor", benchmark.intervene_cost_per_variable)),
        budget=float(costs.get("budget", benchmark.budget)),
    )
    base["empty_intervention_cost"] = float(
        costs.get("empty_intervention_cost", base["observe_factor"])
    )
    grid = costs.get("observation_cost_grid")
    if grid:
        cost_models = tuple(
            CostModel(**{**base, "observe_factor": g, "empty_intervention_cost": float(g)})
            for g in grid  # type: ignore[union-attr]
        )
    else:
        cost_models = (CostModel(**base),)

    stopping = values.get("stopping", {})
    gp_section = values.get("gp", {})
    run = values.get("run", {})
    hyper = GpHyper(
        lengthscale=float(gp_section.get("lengthscale", 1.0)),
        signal_variance=float(gp_section.get("signal_variance", 1.0)),
        noise_variance=float(gp_section.get("noise_variance", GpHyper().noise_variance)),
    )
    cbo_defaults = CboConfig()
    cbo = CboConfig(
        gp=hyper,
        weights=StoppingWeights(
            eta=float(stopping.get("eta", 2.0)),
            kappa=float(stopping.get("kappa", 1.0)),
            tau=float(stopping.get("tau", 5.0)),
        ),
        gamma=float(stopping.get("gamma", 1.0)),
        n_mc_lookahead=int(stopping.get("n_mc_lookahead", cbo_defaults.n_mc_lookahead)),
        ratio_cap=float(stopping.get("ratio_cap", cbo_defaults.ratio_cap)),
        n_candidates=int(run.get("n_candidates", cbo_defaults.n_candidates)),
        prior_grid_size=int(run.get("prior_grid_size", cbo_defaults.prior_grid_size)),
        prior_n_mc=int(run.get("prior_n_mc", cbo_defaults.prior_n_mc)),
        prior_refresh_every=int(run.get("prior_refresh_every", cbo_defaults.prior_refresh_every)),
        refresh_n_mc=int(run.get("refresh_n_mc", cbo_defaults.refresh_n_mc)),
        ei_xi=float(run.get("ei_xi", cbo_defaults.ei_xi)),
        record_wall=bool(run.get("wall_clock", True)),
        oracle_n_mc=int(run.get("oracle_n_mc", cbo_defaults.oracle_n_mc)),
        max_stages=int(run.get("max_stages", cbo_defaults.max_stages)),
    )

    seeds = tuple(run.get("seeds", (0, 1, 2)))  # type: ignore[arg-type]
    if not seeds:
        raise ConfigError("[run] seeds must be non-empty")
    loop = str(run.get("loop", "auto"))
    if loop not in ("auto", "cbo", "cucb"):
        raise ConfigError("loop must be auto, cbo or cucb")

    return ExperimentConfig(
        benchmark=benchmark,
        policies=tuple(policies),
        cost_models=cost_models,
        seeds=seeds,
        cbo=cbo,
        output_dir=Path(str(run.get("output_dir", "runs"))),
        workers=int(run.get("workers", 1)),
        loop=loop,
        regret_epsilon=float(run.get("regret_epsilon", 0.1)),
    )
