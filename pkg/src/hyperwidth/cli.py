"""Command-line entry point: ``hyperwidth <subcommand> ...``.

Exit codes for ``decomp`` and ``improve``: 0 yes, 1 no, 2 timeout, 3 error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import HypergraphSyntaxError, load_corpus, load_hypergraph, serialize_hypergraph
from .decomposition import format_decomposition, to_json, validate_decomposition
from .extract.sql import SqlSyntaxError, UnresolvedReference, sql_to_hypergraphs
from .extract.xcsp import XcspError, convert_csp
from .harness import (
    CSV_HEADER,
    NO,
    SOLVERS,
    TIMEOUT,
    YES,
    WidthStatus,
    compute_correlations,
    default_timeout,
    improvement_buckets,
    mean_seconds,
    read_records,
    run_check,
    run_corpus,
    run_improve,
)
from .props import CSV_FIELDS, PropertyReport, analyze

EXIT = {YES: 0, NO: 1, TIMEOUT: 2}
EXIT_ERROR = 3

log = logging.getLogger("hyperwidth")


def parse_kprime(text: str) -> Fraction:
    """``3/2`` or ``1.5``; the denominator may be at most 10."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from err
    if value.denominator > 10:
        raise argparse.ArgumentTypeError(f"denominator of {value} exceeds 10")
    return value


# ---------------------------------------------------------------- subcommands

def cmd_analyze(args) -> int:
    w = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS)
    w.writeheader()
    for h in load_corpus(args.input):
        w.writerow(analyze(h, args.vc_timeout).row())
    return 0


def cmd_decomp(args) -> int:
    h = load_hypergraph(args.input)
    rec = run_check(h, args.method, args.k, args.timeout, validate=args.validate)
    if rec.answer != YES:
        print(rec.answer)
        return EXIT[rec.answer]
    d = rec.decomposition
    print(to_json(d, h) if args.json else format_decomposition(d, h))
    if args.validate:
        v = validate_decomposition(h, d, args.k)
        print(f"validation: {'ok' if v else f'failed ({v.condition}: {v.detail})'}", file=sys.stderr)
        if not v:
            return EXIT_ERROR
    return 0


def cmd_improve(args) -> int:
    h = load_hypergraph(args.input)
    if args.mode == "search" and args.kprime is None:
        print("error: --kprime is required with --mode search", file=sys.stderr)
        return EXIT_ERROR
    rec = run_improve(h, args.mode, args.k, args.kprime, args.timeout)
    if rec.answer != YES:
        print(rec.answer)
        return EXIT[rec.answer]
    d = rec.decomposition
    if args.json:
        print(to_json(d, h))
    else:
        print(format_decomposition(d, h))
        print(f"width: {d.width.numerator}/{d.width.denominator}")
    return 0


def cmd_extract_sql(args) -> int:
    src = Path(args.input)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = sql_to_hypergraphs(src.read_text(encoding="utf-8"), stem=src.stem)
    with open(out / f"{src.stem}_manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "query", "node", "first_line", "last_line", "edges", "warnings"])
        for i, (sq, h) in enumerate(pairs):
            name = f"{src.stem}_{i}.hg"
            (out / name).write_text(serialize_hypergraph(h) + "\n", encoding="utf-8")
            first, last = sq.lines or ("", "")
            w.writerow([name, sq.query_index, sq.node, first, last, h.n_edges, " | ".join(sq.warnings)])
    print(f"wrote {len(pairs)} hypergraph(s) to {out}")
    return 0


def cmd_extract_xcsp(args) -> int:
    src = Path(args.input)
    conv = convert_csp(src.read_text(encoding="utf-8"), name=src.stem)
    Path(args.out).write_text(serialize_hypergraph(conv.hypergraph) + "\n", encoding="utf-8")
    skipped = sum(conv.skipped.values())
    print(f"{conv.hypergraph.n_edges} edges written, {skipped} constraint(s) skipped")
    return 0


def cmd_widthsearch(args) -> int:
    instances = load_corpus(args.input)
    statuses, records = run_corpus(instances, args.method, args.kmax, args.timeout, args.workers)
    bad = [r for r in records if r.answer == YES and args.validate and not r.validated]
    out = open(args.records, "w", newline="") if args.records else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=CSV_HEADER)
        w.writeheader()
        for r in records:
            w.writerow(r.row())
    finally:
        if out is not sys.stdout:
            out.close()
    for st in statuses:
        lo, hi = (st.hw_lower, st.hw_upper) if args.method == "hd" else (st.ghw_lower, st.ghw_upper)
        print(f"{st.instance}: lower={lo if lo is not None else '?'} upper={hi if hi is not None else '?'}",
              file=sys.stderr)
    if bad:
        print(f"{len(bad)} yes-record(s) failed validation", file=sys.stderr)
        return EXIT_ERROR
    return 0


def _read_properties(path: str) -> dict[str, PropertyReport]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            mi = {3: int(row["bmip3"]), 4: int(row["bmip4"])}
            vc = int(row["vc"]) if row["vc"].isdigit() else "timeout"
            out[row["name"]] = PropertyReport(
                row["name"], int(row["vertices"]), int(row["edges"]), int(row["arity"]),
                int(row["degree"]), int(row["bip"]), mi, vc, row["acyclic"] == "true",
            )
    return out


def cmd_report(args) -> int:
    records = read_records(args.records)
    statuses: dict[str, WidthStatus] = {}
    for r in records:
        statuses.setdefault(r.instance, WidthStatus(r.instance)).record(r)

    if args.correlate:
        if args.properties:
            props = _read_properties(args.properties)
        elif args.instances:
            props = {h.name: analyze(h) for h in load_corpus(args.instances)}
        else:
            print("error: --correlate needs --properties or --instances", file=sys.stderr)
            return EXIT_ERROR
        pairs = [(p, statuses.get(name)) for name, p in props.items()]
        corr = compute_correlations(pairs)
        corr.to_csv(sys.stdout)
        print()
        print("rank,a,b,coefficient")
        for i, (a, b, r) in enumerate(corr.ranked()[: args.top], 1):
            print(f"{i},{a},{b},{r:.4f}")
        return 0

    by_key: dict[tuple[str, int], list] = {}
    for r in records:
        by_key.setdefault((r.method, r.k), []).append(r)
    print("method,k,yes,no,timeout,mean_s")
    for (m, k), rs in sorted(by_key.items()):
        counts = {a: sum(r.answer == a for r in rs) for a in (YES, NO, TIMEOUT)}
        print(f"{m},{k},{counts[YES]},{counts[NO]},{counts[TIMEOUT]},{mean_seconds(rs)}")

    improve = [r for r in records if r.method.startswith("improve")]
    base = {name: st.hw for name, st in statuses.items() if st.hw is not None}
    improve = [r for r in improve if r.instance in base]
    if improve:
        print()
        table = improvement_buckets(improve, base)
        cols = list(next(iter(table.values())))
        print(",".join(["hw", *cols]))
        for k, counts in table.items():
            print(",".join([str(k), *(str(counts[c]) for c in cols)]))
    return 0


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 3 so that 2 stays reserved for timeouts."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperwidth", description="Hypertree decompositions and benchmark tooling.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="structural invariants as CSV")
    a.add_argument("--input", required=True, help="hypergraph file or directory")
    a.add_argument("--vc-timeout", type=float, default=60.0)
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("decomp", help="decide CHECK(method, k)")
    d.add_argument("--method", choices=sorted(SOLVERS), default="hd")
    d.add_argument("-k", type=int, required=True)
    d.add_argument("--timeout", type=float, default=None)
    d.add_argument("--input", required=True)
    d.add_argument("--json", action="store_true")
    d.add_argument("--validate", action="store_true")
    d.set_defaults(func=cmd_decomp)

    i = sub.add_parser("improve", help="fractionally improved HD")
    i.add_argument("--mode", choices=("simple", "search"), default="simple")
    i.add_argument("-k", type=int, required=True)
    i.add_argument("--kprime", type=parse_kprime, default=None)
    i.add_argument("--timeout", type=float, default=None)
    i.add_argument("--input", required=True)
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_improve)

    s = sub.add_parser("extract-sql", help="SQL file to hypergraph files")
    s.add_argument("--input", required=True)
    s.add_argument("--outdir", required=True)
    s.set_defaults(func=cmd_extract_sql)

    x = sub.add_parser("extract-xcsp", help="XCSP3 subset to a hypergraph file")
    x.add_argument("--input", required=True)
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_extract_xcsp)

    w = sub.add_parser("widthsearch", help="iterative width search over a file or corpus")
    w.add_argument("--method", choices=sorted(SOLVERS) + ["race"], default="hd")
    w.add_argument("--kmax", type=int, default=3)
    w.add_argument("--timeout", type=float, default=None)
    w.add_argument("--input", required=True)
    w.add_argument("--records", default=None, help="write results CSV here instead of stdout")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--validate", action="store_true")
    w.set_defaults(func=cmd_widthsearch)

    r = sub.add_parser("report", help="summaries and correlations from a results CSV")
    r.add_argument("--records", required=True)
    r.add_argument("--correlate", action="store_true")
    r.add_argument("--properties", default=None, help="CSV written by 'analyze'")
    r.add_argument("--instances", default=None, help="hypergraph directory to analyze instead")
    r.add_argument("--top", type=int, default=10)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    if getattr(args, "timeout", "absent") is None:
        args.timeout = default_timeout()
    try:
        return args.func(args)
    except (OSError, HypergraphSyntaxError, SqlSyntaxError, UnresolvedReference, XcspError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
