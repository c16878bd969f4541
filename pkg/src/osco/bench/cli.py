"""Command-line interface.

Exit codes: 0 success, 1 at least one run failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..identification.identify import Identifiable, identify
from ..identification.estimand import pretty
from ..identification.sets import enumerate_pomis, family_sorted, minimal_observation_set
from ..scm.benchmarks import benchmark_names, get_benchmark, load_benchmark_file
from ..scm.scmfile import ScmFileError
from .config import ConfigError, load_config
from .overhead import measure_overhead
from .plots import emit_overhead_data, emit_plot_data
from .runner import run_experiment

__all__ = ["main"]

OUTPUT_ROOT_ENV = "OSCO_OUTPUT_ROOT"


def _resolve_benchmark(token: str):
    if token in benchmark_names():
        return get_benchmark(token)
    path = Path(token)
    if path.exists():
        return load_benchmark_file(path)
    raise ScmFileError(
        f"{token!r} is neither a built-in benchmark ({', '.join(benchmark_names())}) nor a file"
    )


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, ScmFileError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    root = os.environ.get(OUTPUT_ROOT_ENV)
    summary = run_experiment(cfg, output_root=Path(root) if root else None)
    out_dir = (Path(root) / cfg.output_dir) if root else cfg.output_dir
    emit_plot_data(summary, out_dir, budget=cfg.cost_models[0].budget)
    n_fail = len(summary.failures)
    total = len(summary.results)
    print(f"{total - n_fail}/{total} runs completed; optimum = {summary.optimum:.4f}")
    for res in summary.failures:
        print(f"  FAILED {res.policy} seed {res.seed}: {res.error}", file=sys.stderr)
    for row in summary.aggregate_rows():
        print(
            f"  {row['policy']:>17s} obs={row['observe_factor']:g}: "
            f"final regret {row['final_regret_mean']:.4f} ± {row['final_regret_sem']:.4f}, "
            f"cost-to-eps {row['cost_to_eps_mean']:.1f}"
        )
    return 1 if n_fail else 0


def _cmd_identify(args: argparse.Namespace) -> int:
    try:
        benchmark = _resolve_benchmark(args.scm)
    except ScmFileError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    spec = benchmark.spec
    targets = [t for t in args.do.split(",") if t] if args.do else []
    outcome = args.outcome or spec.target
    result = identify(spec.graph, targets, outcome)
    if isinstance(result, Identifiable):
        print(f"P({outcome} | do({', '.join(targets) or ''})) = {pretty(result.estimand)}")
        mos = minimal_observation_set(result)
        print(f"observation set: {{{', '.join(sorted(mos))}}}")
        return 0
    print(f"not identifiable: {result.witness}")
    return 1


def _cmd_pomis(args: argparse.Namespace) -> int:
    try:
        benchmark = _resolve_benchmark(args.scm)
    except ScmFileError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    spec = benchmark.spec
    family = benchmark.reference_pomis
    source = "pinned reference"
    if family is None or args.computed:
        family = enumerate_pomis(spec.graph, spec.target, spec.manipulative)
        source = "graph criterion"
    print(f"possibly-optimal intervention sets ({source}):")
    for entry in family_sorted(family):
        print("  {" + ", ".join(entry) + "}")
    return 0


def _cmd_overhead(args: argparse.Namespace) -> int:
    try:
        benchmark = _resolve_benchmark(args.scm)
    except ScmFileError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    measurements = measure_overhead(benchmark, n_iter=args.n_iter, seed=args.seed)
    root = os.environ.get(OUTPUT_ROOT_ENV, ".")
    path = emit_overhead_data(measurements, Path(root), benchmark.name)
    for policy, (mean_ms, std_ms) in sorted(measurements.items()):
        print(f"  {policy:>17s}: {mean_ms:.2f} ± {std_ms:.2f} ms/iter")
    if "osco" in measurements and "always_intervene" in measurements:
        ratio = measurements["osco"][0] / measurements["always_intervene"][0]
        print(f"  overhead ratio: {ratio:.2f}x")
    print(f"wrote {path}")
    return 0


def _cmd_list(_args: argparse.Namespace) -> int:
    for name in benchmark_names():
        bm = get_benchmark(name)
        kind = "discrete" if bm.spec.is_discrete() else "continuous"
        print(f"  {name:15s} {kind:10s} target={bm.spec.target} budget={bm.budget:g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="osco",
        description="Causal Bayesian optimisation with an observe-or-intervene stopping rule.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to the INI experiment file")
    p_run.set_defaults(func=_cmd_run)

    p_id = sub.add_parser("identify", help="print the estimand and observation set")
    p_id.add_argument("scm", help="built-in benchmark name or model file")
    p_id.add_argument("--do", default="", help="comma-separated intervention variables")
    p_id.add_argument("--outcome", default=None, help="outcome variable (default: model target)")
    p_id.set_defaults(func=_cmd_identify)

    p_pomis = sub.add_parser("pomis", help="list possibly-optimal intervention sets")
    p_pomis.add_argument("scm")
    p_pomis.add_argument("--computed", action="store_true", help="ignore pinned reference data")
    p_pomis.set_defaults(func=_cmd_pomis)

    p_over = sub.add_parser("bench-overhead", help="measure per-iteration overhead")
    p_over.add_argument("scm")
    p_over.add_argument("--n-iter", type=int, default=100)
    p_over.add_argument("--seed", type=int, default=0)
    p_over.set_defaults(func=_cmd_overhead)

    p_list = sub.add_parser("list-benchmarks", help="list the built-in models")
    p_list.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
