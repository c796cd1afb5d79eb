"""Command-line front end.

Subcommands:
  gen-synthetic  write a synthetic edge list or feature table
  build-summary  one pass over a dataset, persist the summary or guess grid
  query          load a persisted summary/grid, drop removals, pick k elements
  verify         exhaustive small-instance check of the certified value ratio
  experiment     full protocol from a JSON config: CSV report plus figures
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataio, exact
from .errors import SubstreamError
from .grid import ThresholdGrid, grid_from_document
from .harness import ExperimentConfig, resolve_objective, run_experiment
from .objectives import build_coverage, build_movie_objective
from .query import query_summary_greedy, query_summary_sieve
from .summary import (
    build_summary,
    summary_from_document,
    width_for_removals,
)


def _load_oracle(args):
    if args.objective == "coverage":
        document = dataio.load_edge_list(args.input, directed=not args.undirected)
        return build_coverage(document.edges, directed=document.directed)
    if args.objective == "movie":
        table = dataio.load_feature_table(args.input)
        user = dataio.synth_user_vector(table, seed=args.user_seed)
        return build_movie_objective(user, table.movie_vecs(), args.alpha)
    raise SubstreamError(f"unknown objective {args.objective!r}")


def _stream_order(oracle, seed):
    import random

    ids = sorted(oracle.ground_set)
    random.Random(seed).shuffle(ids)
    return ids


def _cmd_gen_synthetic(args) -> int:
    if args.kind == "graph":
        document = dataio.synth_power_law_graph(n=args.nodes, seed=args.seed)
        dataio.save_edge_list(document, args.out)
        print(f"wrote {len(document.edges)} edges over {args.nodes} nodes to {args.out}")
    else:
        table = dataio.synth_feature_table(
            rows=args.rows, dimension=args.dimension, seed=args.seed
        )
        dataio.save_feature_table(table, args.out)
        print(f"wrote {args.rows} rows (d={args.dimension}) to {args.out}")
    return 0


def _cmd_build_summary(args) -> int:
    oracle = _load_oracle(args)
    stream = _stream_order(oracle, args.seed)
    w = args.w if args.w is not None else width_for_removals(args.k, args.m)
    if args.tau is not None:
        summary = build_summary(stream, args.k, w, args.tau, oracle)
        dataio.save_summary(summary, args.out)
        print(
            f"summary: k={args.k} w={w} tau={args.tau} stored={summary.size} "
            f"oracle_calls={summary.stats.oracle_calls}"
        )
    else:
        grid = ThresholdGrid(k=args.k, w=w, m=args.m, epsilon=args.epsilon)
        grid.build(stream, oracle)
        dataio.save_grid(grid, args.out)
        memory = grid.memory_report()
        print(
            f"grid: k={args.k} w={w} m={args.m} eps={args.epsilon} "
            f"instances={memory.instances} stored={memory.stored_total}"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_query(args) -> int:
    oracle = _load_oracle(args)
    text = Path(args.summary).read_text(encoding="utf-8")
    removed = dataio.load_removal_list(args.removals) if args.removals else frozenset()
    if '"format":"substream-grid"' in text.split("\n", 1)[0]:
        grid = grid_from_document(text, oracle if args.check else None)
        result = grid.query(removed, oracle)
    else:
        summary = summary_from_document(text, oracle if args.check else None)
        if args.algorithm == "sieve":
            result = query_summary_sieve(
                summary, removed, args.k, args.epsilon, oracle
            )
        else:
            result = query_summary_greedy(summary, removed, args.k, oracle)
    record = {
        "algorithm": result.algorithm,
        "k": args.k,
        "chosen": sorted(result.chosen),
        "value": result.value,
        "oracle_calls": result.oracle_calls,
    }
    print(json.dumps(record, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=2), encoding="utf-8")
    return 0


def _cmd_verify(args) -> int:
    import random

    failures = 0
    for index in range(args.instances):
        seed = args.seed + index
        rng = random.Random(seed)
        if args.input:
            document = dataio.load_edge_list(args.input)
            edges = document.edges
        else:
            nodes = list(range(args.n))
            edges = []
            for v in nodes:
                degree = rng.randint(0, max(1, args.n // 3))
                for t in rng.sample([u for u in nodes if u != v], degree):
                    edges.append((v, t))
        oracle = build_coverage(edges, isolated_nodes=range(args.n))
        stream = _stream_order(oracle, seed)
        report = exact.verify_robustness(
            stream,
            oracle,
            k=args.k,
            m=args.m,
            mode=args.mode,
            epsilon=args.epsilon,
            descriptor=f"verify-seed{seed}",
        )
        print(json.dumps(report.to_dict()))
        if not report.passed:
            failures += 1
    if failures:
        print(f"FAIL: {failures}/{args.instances} instances below target", file=sys.stderr)
        return 1
    print(f"PASS: {args.instances} instances at or above target ratio")
    return 0


def _cmd_experiment(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        config = ExperimentConfig.from_dict(json.load(handle))
    ctx = resolve_objective(config)
    report = run_experiment(config, ctx)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out, delimiter=args.delimiter)
    print(f"wrote {len(report.rows)} rows to {out}")
    if not args.no_figures:
        from .plotting import render_report_figures

        figure_dir = Path(args.figure_dir) if args.figure_dir else out.parent
        for path in render_report_figures(report, figure_dir, stem=out.stem):
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="substream",
        description="Removal-robust streaming summaries for monotone submodular maximization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a synthetic dataset")
    p.add_argument("--kind", choices=("graph", "movies"), required=True)
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--rows", type=int, default=3900)
    p.add_argument("--dimension", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synthetic)

    def add_oracle_flags(p):
        p.add_argument("--objective", choices=("coverage", "movie"), required=True)
        p.add_argument("--input", required=True, help="edge list or feature table")
        p.add_argument("--undirected", action="store_true")
        p.add_argument("--alpha", type=float, default=0.9)
        p.add_argument("--user-seed", dest="user_seed", type=int, default=0)

    p = sub.add_parser("build-summary", help="stream a dataset into a summary")
    add_oracle_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--w", type=int, default=None, help="default: width for m removals")
    p.add_argument("--tau", type=float, default=None,
                   help="fixed threshold base; omit to build the guess grid")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0, help="stream order seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_summary)

    p = sub.add_parser("query", help="query a stored summary after removals")
    add_oracle_flags(p)
    p.add_argument("--summary", required=True)
    p.add_argument("--removals", default=None, help="file with one id per line")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algorithm", choices=("greedy", "sieve"), default="greedy")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--check", action="store_true",
                   help="revalidate cached values against the oracle on load")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("verify", help="exhaustive ratio check on small instances")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--mode", choices=("single-tau", "grid"), default="single-tau")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=3)
    p.add_argument("--input", default=None, help="optional edge list to verify")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("experiment", help="run a configured comparison")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", required=True, help="report path (delimited values)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--figure-dir", default=None)
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SubstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
