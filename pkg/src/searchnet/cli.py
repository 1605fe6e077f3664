"""Command-line entry points.

Subcommands: ingest, evolve, metrics, sir, reproduce, validate.  All
commands exit nonzero after printing a diagnostic when anything fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .evolution import (
    EvolutionConfig,
    POLICY_DEGREE,
    POLICY_SIMILARITY,
    POLICY_UNIFORM,
    SearchPolicy,
    run_evolution,
)
from .graph import ParameterError, Side, check_invariants, new_seed_graph
from .harness import (
    ENGINE_OFF,
    ENGINE_ON,
    ENGINE_PAIRED,
    FIGURES,
    ExperimentSpec,
    HarnessError,
    reproduce_figures,
    run_experiment,
)
from .ingest import (
    BipartizeError,
    BipartizeStrategy,
    EmptyInputError,
    ParseError,
    STRATEGY_DIRECT,
    STRATEGY_DOUBLE_COVER,
    STRATEGY_RANDOM_SPLIT,
    bipartize,
    load_edge_list,
    read_bipartite,
    seed_from_dataset,
    write_bipartite,
)
from .metrics import (
    METHOD_MLE,
    METHOD_REGRESSION,
    ComponentTooLargeError,
    FitError,
    degree_histogram,
    diameter_approx,
    diameter_exact,
    fit_power_law,
    fit_record,
)
from .rng import CH_SEED_GRAPH, substream
from .sir import SirConfig, run_sir


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _cmd_ingest(args) -> int:
    strategy = BipartizeStrategy(
        kind=args.strategy, split_fraction=args.split_fraction, seed=args.seed
    )
    raw = load_edge_list(args.input, directed=args.directed)
    if args.c_u or args.c_t:
        graph = seed_from_dataset(raw, strategy, args.c_u or 1, args.c_t or 1)
    else:
        graph = bipartize(raw, strategy)
    write_bipartite(graph, args.out)
    sidecar = Path(str(args.out) + ".provenance.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "users": graph.num_users,
                "topics": graph.num_topics,
                "edges": graph.edge_count,
                **graph.meta,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    print(
        f"ingested {raw.source_path}: {graph.num_users} users, "
        f"{graph.num_topics} topics, {graph.edge_count} edges -> {args.out}"
    )
    return 0


def _cmd_evolve(args) -> int:
    if args.graph:
        graph = read_bipartite(args.graph)
    else:
        graph = new_seed_graph(
            args.users,
            args.topics,
            args.c_u,
            args.c_t,
            connected=True,
            rng=substream(args.seed, 0, CH_SEED_GRAPH),
        )
    policy = SearchPolicy(kind=args.policy, degree_exponent=args.degree_exponent)
    config = EvolutionConfig(
        beta=args.beta,
        p_search=args.p_search if args.engine == ENGINE_ON else 0.0,
        c_u=args.c_u,
        c_t=args.c_t,
        search_policy=policy,
        steps=args.steps,
        seed=args.seed,
    )
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    observers = []
    if trace_fh:

        def emit(report):
            trace_fh.write(
                json.dumps(
                    {
                        "t": report.time,
                        "side": report.arrival_side.name.lower(),
                        "new": report.new_node.index,
                        "prototype": report.prototype.index,
                        "copied": report.copied_edges,
                        "search": report.search_edges,
                    },
                    sort_keys=True,
                )
                + "\n"
            )

        observers.append(emit)
    try:
        trace = run_evolution(graph, config, observers=observers, keep_reports=False)
    finally:
        if trace_fh:
            trace_fh.close()
    write_bipartite(graph, args.out)
    print(
        f"evolved {trace.steps} steps (+{trace.users_added} users, "
        f"+{trace.topics_added} topics, +{trace.edges_added} edges, "
        f"{trace.search_activations} search activations) -> {args.out}"
    )
    return 0


def _cmd_metrics(args) -> int:
    graph = read_bipartite(args.graph)
    side = Side.USER if args.side == "user" else Side.TOPIC
    hist = degree_histogram(graph, side, d_floor=args.d_floor)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    degree_csv = Path(f"{prefix}_degree.csv")
    with open(degree_csv, "w", encoding="utf-8") as fh:
        fh.write("degree,count\n")
        for d, c in hist.counts.items():
            fh.write(f"{d},{c}\n")
    summary: dict = {
        "nodes": {"users": graph.num_users, "topics": graph.num_topics},
        "edges": graph.edge_count,
        "side": args.side,
        "d_floor": args.d_floor,
    }
    if args.fit != "none":
        methods = (
            (METHOD_MLE, METHOD_REGRESSION)
            if args.fit == "both"
            else ((METHOD_MLE,) if args.fit == "mle" else (METHOD_REGRESSION,))
        )
        summary["fits"] = {}
        for method in methods:
            try:
                summary["fits"][method] = fit_record(
                    fit_power_law(hist, args.d_min, method)
                )
            except FitError as exc:
                summary["fits"][method] = {"error": str(exc)}
    if args.diameter != "none":
        try:
            if args.diameter == "exact":
                rep = diameter_exact(graph)
            else:
                rep = diameter_approx(graph, sweeps=args.sweeps, rng=args.seed)
            summary["diameter"] = {
                "lower": rep.lower,
                "upper": rep.upper,
                "component_size": rep.component_size,
                "method": rep.method,
                "is_exact": rep.is_exact,
            }
        except ComponentTooLargeError as exc:
            summary["diameter"] = {"error": str(exc)}
    json_path = Path(f"{prefix}_metrics.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {degree_csv} and {json_path}")
    return 0


def _cmd_sir(args) -> int:
    graph = read_bipartite(args.graph)
    base = SirConfig(
        lambda_adj=args.lambda_adj,
        mu=args.mu,
        xi=args.xi,
        initial_fraction=args.initial_fraction,
        max_steps=args.steps,
        seed=args.seed,
    )
    modes = (
        (ENGINE_ON, ENGINE_OFF) if args.engine == ENGINE_PAIRED else (args.engine,)
    )
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    for mode in modes:
        config = replace(base, engine_enabled=(mode == ENGINE_ON))
        trace = run_sir(graph, config)
        path = Path(f"{prefix}_{mode}.csv")
        trace.to_csv(path)
        print(
            f"{mode}: terminal coverage {trace.coverage[-1]:.4f} "
            f"after {len(trace.coverage) - 1} slots -> {path}"
        )
    return 0


def _cmd_reproduce(args) -> int:
    if args.config:
        spec = ExperimentSpec.from_json(args.config)
        if args.out:
            spec.out_dir = args.out
        if args.seed is not None:
            spec.seed = args.seed
        if args.replicates is not None:
            spec.replicates = args.replicates
        if args.engine:
            spec.engine_mode = args.engine
        spec.threads = args.threads
        artifacts = run_experiment(spec)
        print(f"wrote {artifacts.aggregated_csv} (+{len(artifacts.replicate_csvs)} replicate files)")
        return 1 if artifacts.diagnostics else 0
    figures = FIGURES if args.figure == "all" else (args.figure,)
    status = 0
    for figure in figures:
        artifacts = reproduce_figures(
            figure,
            args.out or "runs",
            quick=args.quick,
            seed=args.seed,
            replicates=args.replicates,
            threads=args.threads,
        )
        print(f"{figure}: wrote {artifacts.extras['figure_csv']}")
        if artifacts.diagnostics:
            status = 1
            for diag in artifacts.diagnostics:
                print(f"warning: {diag}", file=sys.stderr)
    return status


def _cmd_validate(args) -> int:
    graph = read_bipartite(args.graph)
    problems = check_invariants(graph)
    print(
        f"{args.graph}: {graph.num_users} users, {graph.num_topics} topics, "
        f"{graph.edge_count} edges"
    )
    if problems:
        for p in problems:
            print(f"invariant violation: {p}", file=sys.stderr)
        return 1
    print("all invariants hold")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="searchnet",
        description="Evolving bipartite user-topic network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert an edge list into a bipartite seed graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument(
        "--strategy",
        choices=[STRATEGY_DOUBLE_COVER, STRATEGY_RANDOM_SPLIT, STRATEGY_DIRECT],
        default=STRATEGY_DOUBLE_COVER,
    )
    p.add_argument("--split-fraction", type=float, default=0.5)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c-u", type=int, default=0, help="top up users to this degree")
    p.add_argument("--c-t", type=int, default=0, help="top up topics to this degree")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("evolve", help="grow a network for a number of steps")
    p.add_argument("--graph", help="bipartite seed file (omit for synthetic seed)")
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--topics", type=int, default=10)
    p.add_argument("--c-u", type=int, default=2)
    p.add_argument("--c-t", type=int, default=2)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--p-search", type=float, default=0.1)
    p.add_argument("--engine", choices=[ENGINE_ON, ENGINE_OFF], default=ENGINE_ON)
    p.add_argument(
        "--policy",
        choices=[POLICY_UNIFORM, POLICY_DEGREE, POLICY_SIMILARITY],
        default=POLICY_UNIFORM,
    )
    p.add_argument("--degree-exponent", type=float, default=1.0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write per-step reports as JSON lines")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("metrics", help="degree histogram, fits, and diameter")
    p.add_argument("--graph", required=True)
    p.add_argument("--side", choices=["user", "topic"], default="user")
    p.add_argument("--d-floor", type=int, default=1)
    p.add_argument("--fit", choices=["mle", "regression", "both", "none"], default="both")
    p.add_argument("--d-min", type=int, default=11)
    p.add_argument("--diameter", choices=["exact", "approx", "none"], default="exact")
    p.add_argument("--sweeps", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("sir", help="rumor propagation over a frozen graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--lambda", dest="lambda_adj", type=float, default=0.7)
    p.add_argument("--mu", type=float, default=0.07)
    p.add_argument("--xi", type=float, default=0.7)
    p.add_argument("--initial-fraction", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument(
        "--engine", choices=[ENGINE_ON, ENGINE_OFF, ENGINE_PAIRED], default=ENGINE_PAIRED
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_sir)

    p = sub.add_parser("reproduce", help="run built-in figure specs or a config file")
    p.add_argument("--figure", choices=[*FIGURES, "all"], default="all")
    p.add_argument("--config", help="experiment spec JSON or a previous manifest")
    p.add_argument("--out", help="output directory (figures default to ./runs)")
    p.add_argument("--quick", action="store_true", help="reduced desk-scale defaults")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--engine", choices=[ENGINE_ON, ENGINE_OFF, ENGINE_PAIRED])
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("validate", help="check a graph file's structural invariants")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ParameterError,
        ParseError,
        EmptyInputError,
        BipartizeError,
        HarnessError,
        FitError,
        ComponentTooLargeError,
        OSError,
    ) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
