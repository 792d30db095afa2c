"""Command-line interface.

Subcommands::

    arbrf dist       distance between two trees
    arbrf matrix     all-against-all comparison of the first M trees of a file
    arbrf ksweep     Jaccard distances for k = 1..K, arboreal and free
    arbrf correspond matched clade pairs of an optimal matching

Exit status is 0 when every solve finished, 2 when a time limit stopped
at least one solve early, and 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from . import __version__
from .arboreal import SolveParams, Status, solve
from .cost import MAX_K, CostFn, delta
from .errors import ArbrfError
from .matching import count_violations, min_cost_matching
from .model import CladeSet, extract_clades
from .newick import parse_file
from .rf import rf_distance

EXIT_OK, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2
DEFAULT_TIME_LIMIT = 120.0

WALL_TIME_EDGES_MS = (0, 10, 100, 1_000, 10_000, 30_000, 60_000, 120_000)
GAP_EDGES = (0, 1, 2, 5, 10, 20, 50, 100)


def format_float(x: float) -> str:
    """Lossless, locale-independent text for a float."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "n/a" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return repr(float(x))


def parse_float(text: str) -> float:
    if text == "n/a":
        return math.inf
    return float(text)


@dataclass
class RunRecord:
    """One compared pair. Weight bounds are those the gap is computed from."""

    tree_i: int
    tree_j: int
    metric: str
    mode: str
    cost_lower: float
    cost_upper: float
    weight_lower: float
    weight_upper: float
    status: str
    gap_percent: float
    wall_time_ms: float
    matched_clades: int
    violations: int
    nodes: int
    error: str = ""

    _INTS = ("tree_i", "tree_j", "matched_clades", "violations", "nodes")
    _FLOATS = (
        "cost_lower", "cost_upper", "weight_lower", "weight_upper",
        "gap_percent", "wall_time_ms",
    )

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> dict[str, str]:
        row = {}
        for name, value in asdict(self).items():
            row[name] = format_float(value) if name in self._FLOATS else str(value)
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "RunRecord":
        kwargs = {}
        for name in cls.columns():
            text = row[name]
            if name in cls._INTS:
                kwargs[name] = int(text)
            elif name in cls._FLOATS:
                kwargs[name] = parse_float(text)
            else:
                kwargs[name] = text
        return cls(**kwargs)

    @property
    def distance_text(self) -> str:
        if self.cost_lower == self.cost_upper:
            return format_float(self.cost_upper)
        return f"[{format_float(self.cost_lower)}, {format_float(self.cost_upper)}]"


def compare(
    c1: CladeSet,
    c2: CladeSet,
    metric: CostFn,
    mode: str,
    params: SolveParams,
    i: int = 0,
    j: int = 1,
):
    """Solve one pair; returns ``(record, matching)``."""
    start = time.perf_counter()
    if mode == "free":
        m = min_cost_matching(c1, c2, metric)
        elapsed = time.perf_counter() - start
        record = RunRecord(
            i, j, str(metric), mode,
            m.cost, m.cost, m.weight_sum, m.weight_sum,
            str(Status.OPTIMAL), 0.0, elapsed * 1000.0,
            len(m), count_violations(m, c1, c2), 0,
        )
        return record, m
    if mode != "arboreal":
        raise ValueError(f"unknown mode {mode!r}")
    res = solve(c1, c2, metric, params)
    m = res.incumbent
    record = RunRecord(
        i, j, str(metric), mode,
        res.cost_lower, res.cost_upper, res.lower_bound, res.upper_bound,
        str(res.status), res.gap_percent, res.wall_time * 1000.0,
        len(m), count_violations(m, c1, c2), res.nodes_explored,
    )
    return record, m


def _pair_task(args):
    i, j, c1, c2, metric, mode, params = args
    try:
        return compare(c1, c2, metric, mode, params, i, j)[0]
    except Exception as exc:  # recorded per row, the run continues
        nan = math.nan
        return RunRecord(i, j, str(metric), mode, nan, nan, nan, nan,
                         "ERROR", nan, 0.0, 0, 0, 0, f"{type(exc).__name__}: {exc}")


def _load_pair(args):
    """Two trees from one file (indices i, j) or two files."""
    doc1 = parse_file(args.file)
    if args.file2 is None:
        i = 0 if args.i is None else args.i
        j = 1 if args.j is None else args.j
        doc2 = doc1
    else:
        i = 0 if args.i is None else args.i
        j = 0 if args.j is None else args.j
        doc2 = parse_file(args.file2, doc1.taxa)
    for idx, doc in ((i, doc1), (j, doc2)):
        if not 0 <= idx < len(doc):
            raise ArbrfError(f"tree index {idx} out of range (file has {len(doc)} trees)")
    return doc1.taxa, doc1[i], doc2[j], i, j


def _params(args) -> SolveParams:
    return SolveParams(time_limit=args.time_limit, node_limit=getattr(args, "node_limit", 0))


def _write_csv(rows, columns, out):
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def cmd_dist(args) -> int:
    _, t1, t2, i, j = _load_pair(args)
    c1, c2 = extract_clades(t1), extract_clades(t2)
    record, _ = compare(c1, c2, args.metric, args.mode, _params(args), i, j)
    out = sys.stdout
    if args.format == "csv":
        _write_csv([record.to_row()], RunRecord.columns(), out)
    elif args.format == "json":
        json.dump(record.to_row(), out, indent=2)
        out.write("\n")
    else:
        out.write(record.distance_text + "\n")
        row = record.to_row()
        for key in ("status", "gap_percent", "cost_lower", "cost_upper", "weight_lower",
                    "weight_upper", "matched_clades", "violations", "nodes", "wall_time_ms"):
            out.write(f"{key}\t{row[key]}\n")
    return EXIT_TIMEOUT if record.status == str(Status.FEASIBLE_TIMEOUT) else EXIT_OK


def _histogram(values, edges):
    counts = [0] * len(edges)
    for v in values:
        for b in range(len(edges) - 1, -1, -1):
            if v >= edges[b]:
                counts[b] += 1
                break
    rows = []
    for b, lo in enumerate(edges):
        hi = edges[b + 1] if b + 1 < len(edges) else math.inf
        rows.append((lo, hi, counts[b]))
    return rows


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("ARBRF_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def run_matrix(clade_sets, metric, mode, params, include_self=False, jobs=1):
    """All-against-all records sorted by ``(tree_i, tree_j)``."""
    m = len(clade_sets)
    tasks = [
        (i, j, clade_sets[i], clade_sets[j], metric, mode, params)
        for i in range(m)
        for j in range(i if include_self else i + 1, m)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_pair_task, tasks, chunksize=1))
    else:
        records = [_pair_task(t) for t in tasks]
    records.sort(key=lambda r: (r.tree_i, r.tree_j))
    return records


def cmd_matrix(args) -> int:
    doc = parse_file(args.file)
    m = len(doc) if args.first is None else min(args.first, len(doc))
    if m < 2 and not args.include_self:
        raise ArbrfError("need at least two trees")
    clade_sets = [extract_clades(t) for t in doc.trees[:m]]
    records = run_matrix(clade_sets, args.metric, args.mode, _params(args),
                         args.include_self, _jobs(args))
    rows = [r.to_row() for r in records]
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            _write_csv(rows, RunRecord.columns(), fh)
    else:
        _write_csv(rows, RunRecord.columns(), sys.stdout)

    optimal = [r for r in records if r.status == str(Status.OPTIMAL)]
    timeout = [r for r in records if r.status == str(Status.FEASIBLE_TIMEOUT)]
    errors = [r for r in records if r.status == "ERROR"]
    summary = (f"pairs={len(records)} optimal={len(optimal)} "
               f"timeout={len(timeout)} errors={len(errors)}")
    hist_rows = [("wall_time_ms_optimal", lo, hi, n)
                 for lo, hi, n in _histogram([r.wall_time_ms for r in optimal], WALL_TIME_EDGES_MS)]
    finite_gaps = [r.gap_percent for r in timeout if math.isfinite(r.gap_percent)]
    hist_rows += [("gap_percent_timeout", lo, hi, n) for lo, hi, n in _histogram(finite_gaps, GAP_EDGES)]
    hist_rows.append(("gap_percent_timeout", "n/a", "n/a", len(timeout) - len(finite_gaps)))
    hist_text = io.StringIO()
    w = csv.writer(hist_text, lineterminator="\n")
    w.writerow(("histogram", "bucket_lo", "bucket_hi", "count"))
    for name, lo, hi, n in hist_rows:
        w.writerow((name, lo if isinstance(lo, str) else format_float(lo),
                    hi if isinstance(hi, str) else format_float(hi), n))
    if args.hist:
        with open(args.hist, "w", encoding="utf-8", newline="") as fh:
            fh.write(hist_text.getvalue())
    log = sys.stderr if not args.out else sys.stdout
    log.write(summary + "\n")
    if not args.hist:
        log.write(hist_text.getvalue())
    if errors:
        return EXIT_ERROR
    return EXIT_TIMEOUT if timeout else EXIT_OK


KSWEEP_COLUMNS = ["k", "d_jrf_arboreal", "d_jrf_free", "matched_clades", "matched_clades_free",
                  "violations", "d_rf", "status"]


def ksweep(c1, c2, d_rf, kmax, mode, params):
    rows = []
    for k in range(1, kmax + 1):
        metric = CostFn.jaccard(k)
        row = dict.fromkeys(KSWEEP_COLUMNS, "")
        row["k"] = str(k)
        row["d_rf"] = str(d_rf)
        if mode in ("both", "arboreal"):
            res = solve(c1, c2, metric, params)
            row["d_jrf_arboreal"] = format_float(res.cost_upper)
            row["matched_clades"] = str(len(res.incumbent))
            row["status"] = str(res.status)
        if mode in ("both", "free"):
            m = min_cost_matching(c1, c2, metric)
            row["d_jrf_free"] = format_float(m.cost)
            row["matched_clades_free"] = str(len(m))
            row["violations"] = str(count_violations(m, c1, c2))
        rows.append(row)
    return rows


def cmd_ksweep(args) -> int:
    _, t1, t2, _, _ = _load_pair(args)
    c1, c2 = extract_clades(t1), extract_clades(t2)
    rows = ksweep(c1, c2, rf_distance(t1, t2), args.kmax, args.mode, _params(args))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            _write_csv(rows, KSWEEP_COLUMNS, fh)
    else:
        _write_csv(rows, KSWEEP_COLUMNS, sys.stdout)
    timed_out = any(r["status"] == str(Status.FEASIBLE_TIMEOUT) for r in rows)
    return EXIT_TIMEOUT if timed_out else EXIT_OK


CORRESPOND_COLUMNS = ["kind", "clade1", "clade2", "delta"]


def correspondence(taxa, c1, c2, matching, metric):
    """Rows for matched pairs, then unmatched clades of each tree."""
    rows = []
    used1, used2 = set(), set()
    for i, j in matching.pairs:
        used1.add(i)
        used2.add(j)
        rows.append({"kind": "match", "clade1": taxa.labels(c1[i].bits),
                     "clade2": taxa.labels(c2[j].bits), "delta": delta(metric, c1[i], c2[j])})
    for i in range(len(c1)):
        if i not in used1:
            rows.append({"kind": "unmatched1", "clade1": taxa.labels(c1[i].bits),
                         "clade2": [], "delta": delta(metric, c1[i], None)})
    for j in range(len(c2)):
        if j not in used2:
            rows.append({"kind": "unmatched2", "clade1": [],
                         "clade2": taxa.labels(c2[j].bits), "delta": delta(metric, None, c2[j])})
    return rows


def tsv_to_rows(text: str) -> list[dict]:
    """Read back the TSV written by ``correspond``."""
    reader = csv.DictReader(io.StringIO(text), delimiter="\t")
    rows = []
    for r in reader:
        rows.append({
            "kind": r["kind"],
            "clade1": [] if r["clade1"] == "-" else r["clade1"].split(","),
            "clade2": [] if r["clade2"] == "-" else r["clade2"].split(","),
            "delta": parse_float(r["delta"]),
        })
    return rows


def cmd_correspond(args) -> int:
    taxa, t1, t2, i, j = _load_pair(args)
    c1, c2 = extract_clades(t1), extract_clades(t2)
    record, m = compare(c1, c2, args.metric, args.mode, _params(args), i, j)
    if record.status != str(Status.OPTIMAL):
        sys.stderr.write(
            f"warning: search stopped at the time limit; reporting the best matching found "
            f"(distance in {record.distance_text})\n")
    rows = correspondence(taxa, c1, c2, m, args.metric)
    out = sys.stdout
    if args.format == "json":
        json.dump({
            "metric": record.metric,
            "mode": record.mode,
            "status": record.status,
            "cost_lower": record.cost_lower,
            "cost_upper": record.cost_upper,
            "rows": rows,
        }, out, indent=2)
        out.write("\n")
    else:
        w = csv.writer(out, delimiter="\t", lineterminator="\n")
        w.writerow(CORRESPOND_COLUMNS)
        for r in rows:
            w.writerow((r["kind"], ",".join(r["clade1"]) or "-", ",".join(r["clade2"]) or "-",
                        format_float(r["delta"])))
    return EXIT_TIMEOUT if record.status == str(Status.FEASIBLE_TIMEOUT) else EXIT_OK


def _metric(text: str) -> CostFn:
    try:
        return CostFn.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; status 2 is reserved for time-limited results
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _kmax(text: str) -> int:
    k = int(text)
    if not 1 <= k <= MAX_K:
        raise argparse.ArgumentTypeError(f"kmax must be in [1, {MAX_K}]")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="arbrf",
        description="Generalized Robinson-Foulds distances between rooted trees.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def pair_args(p):
        p.add_argument("file", help="Newick file")
        p.add_argument("file2", nargs="?", help="second Newick file (default: compare within FILE)")
        p.add_argument("-i", type=int, help="tree index in FILE (default 0)")
        p.add_argument("-j", type=int, help="tree index in FILE2, or in FILE when FILE2 is absent "
                                            "(default 0, or 1 within one file)")

    def solve_args(p, metric_default="jaccard:1"):
        p.add_argument("--metric", type=_metric, default=_metric(metric_default),
                       help="rf, symdiff or jaccard:<k> (default %(default)s)")
        p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT,
                       help="seconds per solve, 0 for none (default %(default)s)")
        p.add_argument("--node-limit", type=int, default=0, help=argparse.SUPPRESS)

    p = sub.add_parser("dist", help="distance between two trees")
    pair_args(p)
    solve_args(p)
    p.add_argument("--mode", choices=("arboreal", "free"), default="arboreal")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("matrix", help="all-against-all comparison")
    p.add_argument("file")
    solve_args(p)
    p.add_argument("--mode", choices=("arboreal", "free"), default="arboreal")
    p.add_argument("--first", type=int, help="use only the first M trees")
    p.add_argument("--jobs", type=int, help="worker processes (default $ARBRF_THREADS or 1)")
    p.add_argument("--include-self", action="store_true", help="also compare each tree with itself")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--hist", help="histogram CSV output path")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("ksweep", help="Jaccard distances over k = 1..K")
    pair_args(p)
    p.add_argument("--kmax", type=_kmax, default=20, help="largest Jaccard order (default 20)")
    p.add_argument("--mode", choices=("both", "arboreal", "free"), default="both")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT,
                   help="seconds per solve, 0 for none (default %(default)s)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_ksweep)

    p = sub.add_parser("correspond", help="matched clade report")
    pair_args(p)
    solve_args(p)
    p.add_argument("--mode", choices=("arboreal", "free"), default="arboreal")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.set_defaults(func=cmd_correspond)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except (ArbrfError, OSError, ValueError) as exc:
        sys.stderr.write(f"arbrf: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
