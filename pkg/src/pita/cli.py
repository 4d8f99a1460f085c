"""Command-line front end.

    pita query FILE QUERY [--oracle | --compare] [--json] [--explanations]
    pita oracle FILE QUERY [--compare] [--json] [--max-worlds N]
    pita dump FILE
    pita bench {hmm,path} [--size N] [--count N] [--seed S]

Exit status: 0 ok, 1 usage, 2 parse error, 3 engine error, 4 comparison
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .bdd import BddError
from .engine import EngineError, EvaluationConfig, decode_paths, run_query
from .ground import GroundingError
from .semantics import DEFAULT_MAX_WORLDS, OracleError, oracle_query
from .syntax import ParseError, format_term, is_ground, parse_atom, parse_program
from .transform import dump_transformed, pita_transform

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_ENGINE, EXIT_COMPARE = 0, 1, 2, 3, 4
COMPARE_TOLERANCE = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class QueryResult:
    query: str
    answers: List[Tuple[str, float]]
    time_ms: float
    stats: dict = field(default_factory=dict)
    explanations: Optional[dict] = None
    oracle: Optional[dict] = None
    difference: Optional[float] = None

    def to_json(self) -> dict:
        out = {
            "query": self.query,
            "answers": [{"answer": a, "prob": p} for a, p in self.answers],
            "time_ms": round(self.time_ms, 3),
            "stats": self.stats,
        }
        if self.explanations is not None:
            for entry in out["answers"]:
                paths = self.explanations.get(entry["answer"], [])
                entry["explanations"] = paths
                entry["explanation_count"] = len(paths)
        if self.oracle is not None:
            out["oracle"] = self.oracle
        if self.difference is not None:
            out["difference"] = self.difference
        return out

    def to_text(self) -> str:
        lines = []
        for a, p in self.answers:
            lines.append(f"{a}\t{p!r}")
            if self.explanations is not None:
                for path in self.explanations.get(a, []):
                    lines.append(f"  {path['choices']}\t{path['prob']!r}")
        if self.oracle is not None:
            lines.append(f"oracle\t{self.oracle['prob']!r}\tworlds={self.oracle['worlds']}")
        if self.difference is not None:
            lines.append(f"difference\t{self.difference:.3e}")
        return "\n".join(lines)


def _read_program(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_program(text)


def _config(args) -> EvaluationConfig:
    return EvaluationConfig(max_depth=args.max_depth)


def _render_path(expl) -> dict:
    parts = []
    for (cid, grounding), values in expl.constraints:
        g = ",".join(format_term(t) for t in grounding)
        vals = ",".join(str(v) for v in sorted(values))
        parts.append(f"C{cid}[{g}]={vals}" if len(values) == 1 else f"C{cid}[{g}] in {{{vals}}}")
    return {"choices": " & ".join(parts) if parts else "true", "prob": expl.probability}


def _run_oracle(program, query, args) -> dict:
    if not is_ground(query):
        raise UsageError("the oracle needs a ground query")
    res = oracle_query(program, query, max_worlds=args.max_worlds)
    return {"prob": res.probability, "worlds": res.worlds}


def cmd_query(args) -> int:
    program = _read_program(args.file)
    query = parse_atom(args.query)
    start = time.perf_counter()
    run = run_query(program, query, _config(args))
    elapsed = (time.perf_counter() - start) * 1000
    answers = [(format_term(a), p) for a, p in run.answers]
    result = QueryResult(args.query, answers, elapsed, run.stats)
    manager = run.session.manager
    if args.explanations:
        result.explanations = {
            format_term(a): [_render_path(e) for e in decode_paths(manager, node)]
            for a, node in run.nodes
        }
    if args.dump_dot:
        node = run.nodes[0][1] if run.nodes else manager.zero()
        with open(args.dump_dot, "w", encoding="utf-8") as fh:
            fh.write(manager.to_dot(node))
    status = EXIT_OK
    if args.oracle or args.compare:
        result.oracle = _run_oracle(program, query, args)
        engine_p = answers[0][1] if answers else 0.0
        result.difference = abs(engine_p - result.oracle["prob"])
        if args.compare and result.difference > COMPARE_TOLERANCE:
            status = EXIT_COMPARE
    _emit(result, args)
    return status


def cmd_oracle(args) -> int:
    program = _read_program(args.file)
    query = parse_atom(args.query)
    start = time.perf_counter()
    oracle = _run_oracle(program, query, args)
    elapsed = (time.perf_counter() - start) * 1000
    result = QueryResult(args.query, [(format_term(query), oracle["prob"])], elapsed,
                         {"worlds": oracle["worlds"]})
    status = EXIT_OK
    if args.compare:
        run = run_query(program, query, _config(args))
        engine_p = run.answers[0][1] if run.answers else 0.0
        result.oracle = oracle
        result.answers = [(format_term(query), engine_p)]
        result.difference = abs(engine_p - oracle["prob"])
        if result.difference > COMPARE_TOLERANCE:
            status = EXIT_COMPARE
    elif not args.json:
        print(f"{format_term(query)}\t{oracle['prob']!r}\tworlds={oracle['worlds']}")
        return status
    _emit(result, args)
    return status


def cmd_dump(args) -> int:
    program = _read_program(args.file)
    sys.stdout.write(dump_transformed(pita_transform(program)))
    return EXIT_OK


def cmd_bench(args) -> int:
    from . import bench

    cfg = _config(args)
    if args.suite == "hmm":
        rows = bench.bench_hmm(args.size if args.size is not None else 15, cfg)
    else:
        max_edges = args.size if args.size is not None else 12
        rows = bench.bench_path(args.count, args.seed, max_edges=max_edges, cfg=cfg)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(bench.CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.fields())
    return EXIT_OK


def _emit(result: QueryResult, args):
    if args.json:
        print(json.dumps(result.to_json(), indent=2))
    else:
        print(result.to_text())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pita", description="Exact inference for LPADs with tabling and BDDs.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, query=True):
        p.add_argument("file")
        if query:
            p.add_argument("query")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--max-depth", type=_positive, default=None,
                       help="term-depth abstraction bound for new subgoals")
        p.add_argument("--max-worlds", type=_positive, default=DEFAULT_MAX_WORLDS,
                       help="cap on enumerated worlds for the oracle")

    q = sub.add_parser("query", help="query probability by tabled evaluation")
    common(q)
    q.add_argument("--oracle", action="store_true", help="also run world enumeration")
    q.add_argument("--compare", action="store_true", help="fail (exit 4) if engine and oracle differ")
    q.add_argument("--explanations", action="store_true", help="list the BDD paths of each answer")
    q.add_argument("--dump-dot", metavar="FILE", help="write the first answer's BDD in DOT format")
    q.set_defaults(func=cmd_query)

    o = sub.add_parser("oracle", help="query probability by world enumeration")
    common(o)
    o.add_argument("--compare", action="store_true", help="also run the engine and compare")
    o.set_defaults(func=cmd_oracle)

    d = sub.add_parser("dump", help="print the transformed program")
    d.add_argument("file")
    d.set_defaults(func=cmd_dump)

    b = sub.add_parser("bench", help="run generated benchmarks and print CSV")
    b.add_argument("suite", choices=["hmm", "path"])
    b.add_argument("--size", type=_positive, default=None,
                   help="largest N for hmm; edge cap for path")
    b.add_argument("--count", type=_positive, default=10, help="number of graphs for path")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--max-depth", type=_positive, default=None)
    b.set_defaults(func=cmd_bench)
    return parser


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pita: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"pita: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (EngineError, OracleError, GroundingError, BddError) as exc:
        print(f"pita: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
