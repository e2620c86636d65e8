"""Command-line entry point.

Exit codes: 0 on success, 1 for usage or input errors, 2 when a
verification suite reports a failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cover import pool_via_nerve
from .errors import NervePoolError
from .homology import betti
from .io import (
    dumps,
    export_dot,
    format_complex,
    parse_complex,
    parse_features,
    parse_partition,
    pooled_document,
)
from .pooling import pool
from .verify import SUITES, random_complex, run_suite

EXIT_USAGE = 1
EXIT_VERIFY = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise NervePoolError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(args):
    K = parse_complex(_read(args.complex))
    S0 = parse_partition(_read(args.partition), K) if getattr(args, "partition", None) else None
    return K, S0


def cmd_pool(args) -> int:
    K, S0 = _load(args)
    features = {}
    for path in args.features or ():
        p, X = parse_features(_read(path), K)
        if p in features:
            raise NervePoolError(f"two feature files for dimension {p}")
        features[p] = X
    result = pool(K, S0, features)
    doc = pooled_document(result, K, normalized_adjacency=args.normalize_adjacency)
    _write(args.out, dumps(doc) + "\n")
    return 0


def cmd_nerve(args) -> int:
    K, S0 = _load(args)
    _write(args.out, format_complex(pool_via_nerve(K, S0.cover())))
    return 0


def cmd_betti(args) -> int:
    K, _ = _load(args)
    print(" ".join(map(str, betti(K))))
    return 0


def cmd_verify(args) -> int:
    def show(report):
        if args.verbose or not report.passed:
            print(report)

    reports = run_suite(args.suite, args.instances, args.seed, progress=show, workers=args.jobs)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} passed")
    return EXIT_VERIFY if failed else 0


def cmd_gen(args) -> int:
    K = random_complex(args.seed, args.vertices, args.max_dim, args.density)
    _write(args.out, format_complex(K))
    return 0


def cmd_dot(args) -> int:
    K, S0 = _load(args)
    if S0 is None:
        _write(args.out, export_dot(K))
    elif args.pooled:
        _write(args.out, export_dot(pool(K, S0), name="pooled"))
    else:
        clusters = None
        if S0.kind == "hard":
            clusters = {v: S0.clusters[row.argmax()] for v, row in zip(S0.vertices, S0.weights)}
        _write(args.out, export_dot(K, clusters))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nervepool", description="NervePool simplicial complex coarsening")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pool", help="pool a complex with the matrix formulation")
    p.add_argument("--complex", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--features", action="append", metavar="FILE",
                   help="feature table for one dimension (repeatable)")
    p.add_argument("--normalize-adjacency", action="store_true",
                   help="also write the degree-normalized adjacency matrices")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("nerve", help="pool a complex with the nerve formulation")
    p.add_argument("--complex", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_nerve)

    p = sub.add_parser("betti", help="print Betti numbers over GF(2)")
    p.add_argument("--complex", required=True)
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("verify", help="check the pooling invariants on random instances")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the batch")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a random complex")
    p.add_argument("--vertices", type=int, required=True)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dot", help="export the 1-skeleton as Graphviz text")
    p.add_argument("--complex", required=True)
    p.add_argument("--partition")
    p.add_argument("--pooled", action="store_true", help="export the pooled complex instead")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NervePoolError as exc:
        print(f"nervepool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
