"""Command-line entry point: ``graphfeedback simulate | graph-stats | verify``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import GraphFeedbackError
from .graphs import (
    MAS_EXACT_CAP,
    greedy_dominating_set,
    independence_estimate,
    mas_size,
    read_graph,
)
from .harness import emit_csv, load_config, run_many
from .verify import SUITES, run_suite


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    trace = run_many(config, workers=args.workers)
    output = args.output or config.output
    if output in (None, "-"):
        emit_csv(trace, sys.stdout)
    else:
        emit_csv(trace, output)
    return 0


def cmd_graph_stats(args) -> int:
    g = read_graph(args.input)
    alpha = independence_estimate(g)
    if g.k <= MAS_EXACT_CAP:
        mas, mas_kind = mas_size(g, "exact"), "exact"
    else:
        mas, mas_kind = mas_size(g, "peel"), "lower bound (peel)"
    dom = greedy_dominating_set(g)
    print(f"k: {g.k}")
    print(f"arcs: {g.num_arcs}")
    print(f"symmetric: {'yes' if g.is_symmetric else 'no'}")
    print(f"alpha: {alpha.value} ({'exact' if alpha.exact else 'upper bound (clique cover)'})")
    print(f"mas: {mas} ({mas_kind})")
    print(f"greedy dominating set: {len(dom)} {dom}")
    return 0


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.trials, args.max_k, args.seed, r=args.r, symmetrize=args.symmetrize)
    print(report.summary())
    if args.suite == "er":
        d = report.details
        print(f"coordinate sum: mean {d['sum_mean']:.6g}, target {d['sum_target']:.6g}, within 4 s.e.: {d['sum_within_4se']}")
    for f in report.failures[: args.show]:
        print(f"- trial {f.trial}: {f.message}" if f.trial >= 0 else f"- {f.message}")
        if f.graph:
            print("  " + f.graph.strip().replace("\n", "\n  "))
    if len(report.failures) > args.show:
        print(f"... {len(report.failures) - args.show} more failures")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphfeedback", description="Bandits with graph-structured feedback.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment config and write its regret CSV")
    sim.add_argument("--config", required=True, help="YAML or JSON experiment config")
    sim.add_argument("--workers", type=int, default=None, help="worker processes (default: config value)")
    sim.add_argument("--output", default=None, help="CSV path, '-' for stdout (default: config value or stdout)")
    sim.set_defaults(func=cmd_simulate)

    stats = sub.add_parser("graph-stats", help="print combinatorial statistics of a graph file")
    stats.add_argument("--input", required=True, help="graph file ('K <int>' then one 'i j' arc per line)")
    stats.set_defaults(func=cmd_graph_stats)

    ver = sub.add_parser("verify", help="run a randomised inequality suite; exit 0 iff it passes")
    ver.add_argument("--suite", required=True, choices=sorted(SUITES) + ["er"])
    ver.add_argument("--trials", type=int, default=1000, help="trials (for er: graph draws)")
    ver.add_argument("--max-k", type=int, default=12, help="largest action count (for er: the action count)")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--r", type=float, default=0.5, help="arc density for the er suite")
    ver.add_argument("--symmetrize", action="store_true", help="er suite: relabel p randomly on every draw")
    ver.add_argument("--show", type=int, default=5, help="failures to print")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphFeedbackError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
