"""Command-line front door: graph inspection, oracle queries, runs and sweeps.

Exit codes: 0 success, 2 usage, 3 config/parse error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .admg import (
    c_components,
    effective_parents,
    example_graph,
    extended_parents,
    has_unblocked_backdoor,
    identifiable_sufficient,
    load_graph,
)
from .errors import CausalBanditsError, ConfigInvalid, ParseError
from .harness import load_config, run_sweep, write_report
from .scm import (
    CostSet,
    load_model,
    make_parallel_model,
    make_xor_model,
    optimal_value,
    oracle_means,
    ratio_best_arm,
    reward_best_arm,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalbandits",
        description="Budgeted bandits on causal graphs: inspect graphs, query "
        "exact oracles, and run regret experiments.",
    )
    parser.add_argument("--version", action="version", version=f"causalbandits {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_inspect = sub.add_parser(
        "inspect-graph", help="print the structural analysis of a graph file"
    )
    p_inspect.add_argument("graph", help="graph file (or a bundled graph name)")

    p_oracle = sub.add_parser(
        "oracle", help="exact per-arm means, best arms and the budget optimum"
    )
    src = p_oracle.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model file")
    src.add_argument("--parallel", type=int, metavar="N", help="parallel generator with N nodes")
    src.add_argument("--xor", metavar="GRAPH", help="parity generator on a graph file/name")
    p_oracle.add_argument("--eps", type=float, default=0.3, help="parallel reward bump (default 0.3)")
    p_oracle.add_argument("--seed", type=int, default=0, help="generator seed (parity models)")
    p_oracle.add_argument("--budget", type=float, default=0.0, help="budget for the knapsack optimum")
    p_oracle.add_argument("--cost", type=float, default=1.0, help="uniform interventional cost (default 1)")
    p_oracle.add_argument("--json", action="store_true", help="emit JSON instead of text")

    for name, help_text in (
        ("run", "execute a config at a single sweep point"),
        ("sweep", "execute every sweep point of a config"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="experiment config file")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--out", help="override the output path (without extension)")
        p.add_argument("--jobs", type=int, help="cap on parallel trial workers")
        if name == "run":
            p.add_argument(
                "--point", type=float, default=None,
                help="sweep value to run (default: the first point)",
            )
    return parser


def cmd_inspect_graph(args) -> int:
    try:
        g = example_graph(args.graph)
    except ValueError:
        g = load_graph(args.graph)
    lines = [f"graph: {len(g.names)} nodes, reward {g.names[g.reward]}"]
    comps = c_components(g)
    lines.append(
        "c-components: "
        + ", ".join("{" + ", ".join(sorted(g.names[v] for v in comp)) + "}" for comp in comps)
    )
    lines.append("effective parents:")
    for j in range(g.n_nodes):
        zs = ", ".join(sorted(g.names[v] for v in effective_parents(g, j)))
        lines.append(f"  {g.names[j]}: {{{zs}}}")
    lines.append("intervenable nodes:")
    for i in g.intervenable:
        zpa, k = extended_parents(g, i)
        zs = ", ".join(sorted(g.names[v] for v in zpa))
        backdoor = has_unblocked_backdoor(g, i)
        ident = identifiable_sufficient(g, i)
        lines.append(
            f"  {g.names[i]}: extended parents {{{zs}}}, component size {k}, "
            f"open backdoor {'yes' if backdoor else 'no'}, "
            f"identifiable (sufficient) {'yes' if ident else 'no'}"
        )
    lines.append(f"no-backdoor graph: {'no' if any(has_unblocked_backdoor(g, i) for i in g.intervenable) else 'yes'}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.model:
        scm = load_model(args.model)
    elif args.parallel:
        scm = make_parallel_model(args.parallel, eps=args.eps)
    else:
        try:
            g = example_graph(args.xor)
        except ValueError:
            g = load_graph(args.xor)
        scm = make_xor_model(g, np.random.default_rng(args.seed))
    g = scm.graph
    means = oracle_means(scm)
    costs = CostSet.uniform(g, args.cost)
    best_ratio = ratio_best_arm(means, costs)
    best_reward = reward_best_arm(means)
    rstar = optimal_value(means, costs, args.budget)
    payload = {
        "means": {a.label(g): means[a] for a in sorted(means)},
        "reward_best_arm": best_reward.label(g),
        "ratio_best_arm": best_ratio.label(g),
        "delta": {
            a.label(g): means[best_ratio] / costs.of(best_ratio) - means[a] / costs.of(a)
            for a in sorted(means)
        },
        "budget": args.budget,
        "rstar": rstar,
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"{'arm':>12}  {'mean':>10}  {'delta':>10}")
    for a in sorted(means):
        print(f"{a.label(g):>12}  {means[a]:>10.6f}  {payload['delta'][a.label(g)]:>10.6f}")
    print(f"best arm by reward: {payload['reward_best_arm']}")
    print(f"best arm by reward per cost: {payload['ratio_best_arm']}")
    print(f"optimum within budget {args.budget:g}: {rstar:.6f}")
    return EXIT_OK


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    if args.out is not None:
        config = replace(config, output=args.out)
    if args.jobs is not None:
        config = replace(config, jobs=args.jobs)
    return config


def _print_summary(report) -> None:
    print(f"{'policy':>22}  {'axis':>6}  {'value':>8}  {'kind':>10}  {'mean':>12}  {'stderr':>10}")
    for c in sorted(report.cells, key=lambda c: (c.policy, c.regret_kind, c.sweep_value)):
        print(
            f"{c.policy:>22}  {report.sweep_axis:>6}  {c.sweep_value:>8g}  "
            f"{c.regret_kind:>10}  {c.mean:>12.6f}  {c.stderr:>10.6f}"
        )


def cmd_run_or_sweep(args, single_point: bool) -> int:
    config = _apply_overrides(load_config(args.config), args)
    if single_point:
        values = config.sweep_values
        point = args.point if args.point is not None else values[0]
        if config.sweep_axis == "budget":
            config = replace(config, budgets=(float(point),))
        else:
            config = replace(config, cost_sweep=(float(point),))
    report = run_sweep(config)
    _print_summary(report)
    if config.output:
        csv_path, json_path = write_report(report, config.output)
        print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "inspect-graph":
            return cmd_inspect_graph(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "run":
            return cmd_run_or_sweep(args, single_point=True)
        if args.command == "sweep":
            return cmd_run_or_sweep(args, single_point=False)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigInvalid, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausalBanditsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
