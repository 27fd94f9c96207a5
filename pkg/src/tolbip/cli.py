"""Command-line entry point: ``tolbip <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import baselines
from .analysis import run_sweep
from .errors import TolBipError
from .generators import FAMILIES, generate
from .graph import BIP_CAP, MAXCUT_CAP, edge_count, exact_bip_distance, read_graph, write_graph
from .harness import ExperimentConfig, TrialRow, format_csv, format_records, run_experiment, write_result
from .oracle import AdjacencyOracle, RecordingOracle
from .tester import TesterParams, TieBreak, run_tester_with_sets, predicted_query_count


def _emit(args, record: dict) -> None:
    text = json.dumps(record, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise TolBipError(f"--param expects key=value, got {item!r}")
        for conv in (int, float):
            try:
                value = conv(value)
                break
            except ValueError:
                continue
        out[key.replace("-", "_")] = value
    return out


def cmd_generate(args) -> int:
    inst = generate(args.family, args.seed, **_parse_params(args.param))
    if not args.output:
        raise TolBipError("generate needs --output for the graph file")
    write_graph(args.output, inst.graph)
    Path(str(args.output) + ".json").write_text(inst.metadata_json(), encoding="utf-8")
    print(json.dumps({"graph": str(args.output), "n": inst.graph.n, "edges": edge_count(inst.graph), "certified": inst.certified}))
    return 0


def cmd_distance(args) -> int:
    g = read_graph(args.graph)
    d, f = exact_bip_distance(g, cap=args.cap)
    _emit(args, {"n": g.n, "distance": d, "right": sorted(f.right)})
    return 0


def cmd_test(args) -> int:
    g = read_graph(args.graph)
    params = TesterParams(
        epsilon=args.epsilon,
        k=args.k,
        c1=args.c1,
        c2=args.c2,
        c3=args.c3,
        t=args.t,
        x_size=args.x_size,
        z_size=args.z_size,
        x_size_cap=args.cap,
        tie_break=args.tie,
        seed=args.seed,
    )
    oracle = RecordingOracle(AdjacencyOracle(g)) if args.trace else AdjacencyOracle(g)
    verdict, sets = run_tester_with_sets(oracle, params)
    if args.trace:
        oracle.dump_trace(args.trace)
    record = verdict.record()
    record["predicted_queries"] = predicted_query_count(sets)
    if args.format == "csv":
        row = TrialRow(0, args.seed, verdict.decision.value, verdict.zeta, verdict.ledger.total_queries,
                       verdict.ledger.distinct_pairs, verdict.ledger.sampled_vertices, 0.0)
        text = format_csv([row])
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(text)
    else:
        _emit(args, record)
    return 0


def cmd_baseline(args) -> int:
    g = read_graph(args.graph)
    o = AdjacencyOracle(g)
    common = {"seed": args.seed}
    if args.estimator == "edges":
        est = baselines.estimate_edges(o, args.epsilon, trials=args.trials, **common)
        decision = None
    elif args.estimator == "maxcut_pairs":
        est = baselines.estimate_maxcut_pairs(o, args.epsilon, cap=args.cap, **common)
        decision = None
    elif args.estimator == "maxcut_induced":
        est = baselines.estimate_maxcut_induced(o, args.epsilon, t_override=args.t_override, cap=args.cap, **common)
        decision = None
    elif args.estimator == "bip_distance":
        est = baselines.estimate_bip_distance(o, args.epsilon, t_override=args.t_override, cap=args.cap, **common)
        decision = None
    else:
        decision, est = baselines.tolerant_decide_baseline(
            o, args.epsilon, args.k, t_override=args.t_override, cap=args.cap, **common
        )
    record = {"estimator": args.estimator, **est.record()}
    if decision is not None:
        record["decision"] = decision.value
    _emit(args, record)
    return 0


def cmd_verify(args) -> int:
    summary = run_sweep(max_exhaustive_n=args.max_n, random_count=args.random_count, x_max=args.x_max, seed=args.seed)
    print(summary.table())
    return 0 if summary.ok else 1


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    if args.workers:
        overrides["workers"] = args.workers
    if overrides:
        cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    result = run_experiment(cfg)
    fmt = args.format or cfg.format
    out = args.output or cfg.output
    if out:
        write_result(result, out, fmt)
    else:
        sys.stdout.write(format_csv(result.rows) if fmt == "csv" else format_records(result))
    print(json.dumps(result.aggregate.record(), sort_keys=True), file=sys.stderr)
    return 0


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--seed", type=int, default=d(0), help="rng seed (default 0)")
    flags.add_argument("--output", "-o", default=d(None), help="write the result here instead of stdout")
    flags.add_argument("--format", choices=("csv", "record"), default=d(None), help="output format")
    flags.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tolbip", description=__doc__, parents=[_global_flags(False)])
    # global flags are accepted after the subcommand too; SUPPRESS keeps those
    # copies from overwriting a value given before it
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a generated graph and its metadata sidecar")
    p.add_argument("family", choices=sorted(FAMILIES))
    p.add_argument("--param", "-p", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("distance", parents=[common], help="exact bipartite distance by enumeration")
    p.add_argument("graph")
    p.add_argument("--cap", type=int, default=BIP_CAP)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("test", parents=[common], help="run the tolerant tester once")
    p.add_argument("graph")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--k", default="1")
    p.add_argument("--c1", default="1")
    p.add_argument("--c2", default="1")
    p.add_argument("--c3", default="1")
    p.add_argument("--t", type=int)
    p.add_argument("--x-size", type=int)
    p.add_argument("--z-size", type=int)
    p.add_argument("--cap", type=int, default=16, help="x_size cap")
    p.add_argument("--tie", choices=[t.value for t in TieBreak], default=TieBreak.ALWAYS_L.value)
    p.add_argument("--trace", help="write every query as 'u v answer' to this file")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("baseline", parents=[common], help="run a sampling estimator or the baseline decider")
    p.add_argument("estimator", choices=("edges", "maxcut_pairs", "maxcut_induced", "bip_distance", "decide"))
    p.add_argument("graph")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--k", default="1")
    p.add_argument("--t-override", type=int)
    p.add_argument("--cap", type=int, default=MAXCUT_CAP)
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("verify", parents=[common], help="exhaustive small-graph check of the proof bookkeeping")
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--random-count", type=int, default=3901)
    p.add_argument("--x-max", type=int, default=3)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[common], help="run a trial farm from an INI config")
    p.add_argument("config")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (TolBipError, OSError) as exc:
        print(f"tolbip: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
