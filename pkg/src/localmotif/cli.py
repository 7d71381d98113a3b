"""Command-line front end.

Exit status: 0 on success (including runs that find nothing), 1 on domain
or I/O errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys

from . import detector, simulate
from .census import dump_census, enumerate_subgraphs, format_code
from .edgelist import parse_edge_list
from .errors import MotifError
from .graph import MAX_PATTERN_SIZE, Pattern
from .nullmodel import er_model, estimate_pi, expected_degree_model, read_classes, read_model_file

THREADS_ENV = "LOCALMOTIF_THREADS"

log = logging.getLogger("localmotif")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="localmotif", description="Local motif detection in directed networks.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"worker processes (default: ${THREADS_ENV} or 1)")

    d = sub.add_parser("detect", parents=[common], help="score and filter local motifs")
    d.add_argument("--edges", required=True, help="edge list, one 'src dst' per line")
    d.add_argument("--null", choices=["er", "expected-degree", "blockmodel"], default="er")
    d.add_argument("--classes", help="vertex class file for --null blockmodel")
    d.add_argument("--model", help="full blockmodel file (classes and Pi)")
    d.add_argument("--k-min", type=int, default=3)
    d.add_argument("--k-max", type=int, default=4)
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--format", choices=["table", "records"], default="table")
    d.add_argument("--themes", type=int, default=10, help="top themes kept per pair")
    d.add_argument("--diagnostics", action="store_true", help="include zero-order positions")
    d.add_argument("--all", action="store_true", help="report every pair, not only motifs")
    d.add_argument("--all-witnesses", action="store_true")
    d.add_argument("--allow-loops", action="store_true")

    c = sub.add_parser("census", parents=[common], help="connected induced subgraph counts")
    c.add_argument("--edges", required=True)
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--occurrences", action="store_true", help="list vertex sets, not counts")
    c.add_argument("--allow-loops", action="store_true")

    s = sub.add_parser("simulate", parents=[common], help="empirical tail versus bound")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(simulate.PRESETS), default="reference")
    src.add_argument("--model", help="blockmodel file to simulate from")
    s.add_argument("--pattern", default="ffl", help="pattern literal or alias")
    s.add_argument("--delete", type=int, help="pattern vertex to delete (default: max in-degree)")
    s.add_argument("--replicates", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--points", type=int, default=40, help="grid size")

    i = sub.add_parser("inspect-pattern", parents=[common], help="deletion classes of a pattern")
    i.add_argument("pattern", help="literal such as '3;0->1,0->2,1->2' or an alias")
    return p


def _null_model(args, graph, parser):
    if args.model:
        return read_model_file(args.model, graph)
    if args.null == "er":
        return er_model(graph)
    if args.null == "expected-degree":
        return expected_degree_model(graph)
    if not args.classes:
        parser.error("--null blockmodel needs --classes or --model")
    return estimate_pi(graph, read_classes(args.classes, graph))


def _cmd_detect(args, parser, out):
    if not 3 <= args.k_min <= args.k_max <= MAX_PATTERN_SIZE:
        parser.error(f"need 3 <= --k-min <= --k-max <= {MAX_PATTERN_SIZE}")
    graph = parse_edge_list(args.edges, allow_loops=args.allow_loops)
    model = _null_model(args, graph, parser)
    results = detector.detect(
        graph, model, args.k_max, args.alpha, k_min=args.k_min, theme_cap=args.themes,
        diagnostics=args.diagnostics, all_witnesses=args.all_witnesses, threads=args.threads,
    )
    ranked = detector.rank_report(results, include_all=args.all)
    if args.format == "records":
        detector.write_records(ranked, out, graph)
    else:
        out.write(detector.format_table(ranked, graph))


def _cmd_census(args, parser, out):
    graph = parse_edge_list(args.edges, allow_loops=args.allow_loops)
    occ = enumerate_subgraphs(graph, args.k, args.threads)
    if args.occurrences:
        dump_census(occ, out, graph)
        return
    for code, sets in sorted(occ.items(), key=lambda kv: (-len(kv[1]), kv[0])):
        out.write(f"{format_code(code)}\t{Pattern.from_code(code).literal}\t{len(sets)}\n")


def _cmd_simulate(args, parser, out):
    if args.replicates < 1 or args.points < 2:
        parser.error("--replicates must be >= 1 and --points >= 2")
    model = read_model_file(args.model) if args.model else simulate.preset_model(args.preset)
    pattern = Pattern.parse(args.pattern)
    a = simulate.default_deleted_vertex(pattern) if args.delete is None else args.delete
    if not 0 <= a < pattern.k:
        parser.error(f"--delete must name a vertex of the {pattern.k}-vertex pattern")
    cls = pattern.class_of(a)
    stat = simulate.ThemeStatistic(model, pattern, cls)
    grid = simulate.default_t_grid(stat.expected_sub, args.replicates, args.points)
    study = simulate.SimStudy(model, pattern, cls, args.replicates, grid, args.seed)
    result = simulate.empirical_tail(study, workers=args.threads)
    out.write(f"# pattern {pattern.literal} class {cls.describe()} "
              f"E[N(m')]={result.expected_sub:.6g} replicates={args.replicates} seed={args.seed}\n")
    out.write(result.table())


def _cmd_inspect(args, parser, out):
    pattern = Pattern.parse(args.pattern)
    out.write(f"pattern {pattern.literal}\ncode {format_code(pattern.code)}\n")
    out.write(f"automorphisms {len(pattern.automorphisms)}\n")
    for cls in pattern.deletion_classes:
        configs = " ".join("".join(str(int(b)) for b in cfg) for cfg in cls.extension_configs)
        out.write(f"class {cls.index} {cls.describe()} subpattern {cls.subpattern.literal} "
                  f"extensions {configs}\n")


COMMANDS = {
    "detect": _cmd_detect,
    "census": _cmd_census,
    "simulate": _cmd_simulate,
    "inspect-pattern": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        with contextlib.ExitStack() as stack:
            out = stack.enter_context(open(args.out, "w")) if args.out else sys.stdout
            COMMANDS[args.command](args, parser, out)
    except (MotifError, OSError) as exc:
        print(f"localmotif: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
