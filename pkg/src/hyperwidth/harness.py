"""Benchmark protocol: width search, solver races, result CSVs and summaries."""
from __future__ import annotations

import csv
import hashlib
import logging
import os
import statistics
import threading
import time
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .core import Hypergraph, bits
from .deadline import Deadline, SearchTimeout
from .decomposition import Decomposition, validate_decomposition
from .fhd import frac_improve_hd, simple_improve_hd
from .ghd import CatalogTooLarge, check_ghd_balsep, check_ghd_global, check_ghd_local
from .hd import check_hd
from .props import PropertyReport

log = logging.getLogger(__name__)

CSV_HEADER = ("instance", "method", "k", "kprime", "answer", "elapsed_ms", "width", "validated")
DEFAULT_TIMEOUT = 3600.0
TIMEOUT_ENV = "HTK_TIMEOUT_MS"

YES, NO, TIMEOUT = "yes", "no", "timeout"

SOLVERS: dict[str, Callable[..., Decomposition | None]] = {
    "hd": check_hd,
    "globalbip": check_ghd_global,
    "localbip": check_ghd_local,
    "balsep": check_ghd_balsep,
}
GHD_METHODS = ("globalbip", "localbip", "balsep")


def default_timeout() -> float:
    """Seconds per run; ``HTK_TIMEOUT_MS`` overrides the 3600 s default."""
    raw = os.environ.get(TIMEOUT_ENV)
    if raw:
        return int(raw) / 1000
    return DEFAULT_TIMEOUT


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class RunRecord:
    instance: str
    method: str
    k: int
    k_prime: Fraction | None
    answer: str
    elapsed_ms: int
    width: Fraction | None
    validated: bool
    winner: str | None = field(default=None, compare=False)
    decomposition: Decomposition | None = field(default=None, compare=False, repr=False)

    @property
    def elapsed(self) -> float:
        return self.elapsed_ms / 1000

    def row(self) -> dict[str, str]:
        return {
            "instance": self.instance,
            "method": self.method,
            "k": str(self.k),
            "kprime": "" if self.k_prime is None else str(self.k_prime),
            "answer": self.answer,
            "elapsed_ms": str(self.elapsed_ms),
            "width": "" if self.width is None else str(self.width),
            "validated": "true" if self.validated else "false",
        }

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "RunRecord":
        return cls(
            instance=row["instance"],
            method=row["method"],
            k=int(row["k"]),
            k_prime=Fraction(row["kprime"]) if row["kprime"] else None,
            answer=row["answer"],
            elapsed_ms=int(row["elapsed_ms"]),
            width=Fraction(row["width"]) if row["width"] else None,
            validated=row["validated"] == "true",
        )


def write_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def read_records(path: str | Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [RunRecord.from_row(row) for row in reader]


def _ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def run_check(
    h: Hypergraph,
    method: str,
    k: int,
    timeout: float | None = None,
    cancel: threading.Event | None = None,
    validate: bool = True,
) -> RunRecord:
    """One CHECK(method, k) run turned into a record; timeouts are answers, not errors."""
    solver = SOLVERS[method]
    deadline = Deadline(default_timeout() if timeout is None else timeout, cancel)
    start = time.perf_counter()
    try:
        d = solver(h, k, deadline)
    except (SearchTimeout, CatalogTooLarge) as err:
        if isinstance(err, CatalogTooLarge):
            log.warning("%s on %s at k=%d: %s", method, h.name, k, err)
        return RunRecord(h.name, method, k, None, TIMEOUT, _ms(time.perf_counter() - start), None, False)
    elapsed = _ms(time.perf_counter() - start)
    if d is None:
        return RunRecord(h.name, method, k, None, NO, elapsed, None, False)
    ok = bool(validate_decomposition(h, d, k)) if validate else False
    return RunRecord(h.name, method, k, None, YES, elapsed, d.width, ok, decomposition=d)


def run_improve(
    h: Hypergraph,
    mode: str,
    k: int,
    k_prime: Fraction | None = None,
    timeout: float | None = None,
) -> RunRecord:
    """``simple``: improve the HD found at k. ``search``: best improvement with width <= k'."""
    deadline = Deadline(default_timeout() if timeout is None else timeout)
    start = time.perf_counter()
    method = f"improve-{mode}"
    try:
        if mode == "simple":
            hd = check_hd(h, k, deadline)
            d = None if hd is None else simple_improve_hd(h, hd)
        elif mode == "search":
            if k_prime is None:
                raise ValueError("search mode needs k'")
            d = frac_improve_hd(h, k, k_prime, deadline)
        else:
            raise ValueError(f"unknown improve mode {mode!r}")
    except SearchTimeout:
        return RunRecord(h.name, method, k, k_prime, TIMEOUT, _ms(time.perf_counter() - start), None, False)
    elapsed = _ms(time.perf_counter() - start)
    if d is None:
        return RunRecord(h.name, method, k, k_prime, NO, elapsed, None, False)
    ok = bool(validate_decomposition(h, d, k))
    return RunRecord(h.name, method, k, k_prime, YES, elapsed, d.width, ok, decomposition=d)


# ---------------------------------------------------------------- width search

@dataclass
class WidthStatus:
    instance: str
    hw_lower: int | None = None
    hw_upper: int | None = None
    ghw_lower: int | None = None
    ghw_upper: int | None = None
    fhw_upper: Fraction | None = None

    @property
    def hw(self) -> int | None:
        return self.hw_upper if self.hw_upper is not None and self.hw_lower == self.hw_upper else None

    @property
    def ghw(self) -> int | None:
        return self.ghw_upper if self.ghw_upper is not None and self.ghw_lower == self.ghw_upper else None

    def record(self, r: RunRecord) -> None:
        """Fold one run into the bounds and re-apply the cross implications."""
        if r.method == "hd":
            self.hw_lower, self.hw_upper = _fold(self.hw_lower, self.hw_upper, r)
        elif r.method in GHD_METHODS or r.method == "race":
            self.ghw_lower, self.ghw_upper = _fold(self.ghw_lower, self.ghw_upper, r)
        elif r.method.startswith("improve") and r.answer == YES:
            self.fhw_upper = _min(self.fhw_upper, r.width)
        self._propagate()

    def _propagate(self) -> None:
        # a GHD "no" at k is an HD "no" at k; an HD is a GHD; a GHD is an FHD
        if self.ghw_lower is not None:
            self.hw_lower = max(self.hw_lower or 1, self.ghw_lower)
        if self.hw_upper is not None:
            self.ghw_upper = _min(self.ghw_upper, self.hw_upper)
            self.ghw_lower = self.ghw_lower or 1
        if self.ghw_upper is not None:
            self.fhw_upper = _min(self.fhw_upper, Fraction(self.ghw_upper))


def _min(a, b):
    return b if a is None else a if b is None else min(a, b)


def _fold(lower: int | None, upper: int | None, r: RunRecord) -> tuple[int | None, int | None]:
    if r.answer == YES:
        return lower or 1, _min(upper, r.k)
    if r.answer == NO:
        return max(lower or 1, r.k + 1), upper
    return lower, upper


def width_search(
    h: Hypergraph,
    method: str,
    k_max: int,
    timeout_per_k: float | None = None,
    status: WidthStatus | None = None,
) -> tuple[WidthStatus, list[RunRecord]]:
    """Check k = 1, 2, ... until the first yes or ``k_max``; non-yes answers move on to k+1."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    status = status or WidthStatus(h.name)
    records = []
    for k in range(1, k_max + 1):
        r = race(h, k, GHD_METHODS, timeout_per_k) if method == "race" else run_check(h, method, k, timeout_per_k)
        records.append(r)
        status.record(r)
        if r.answer == YES:
            break
    return status, records


def race(
    h: Hypergraph,
    k: int,
    methods: Iterable[str] = GHD_METHODS,
    timeout: float | None = None,
) -> RunRecord:
    """Run several GHD methods at once; the first definite answer wins and the rest are cancelled."""
    methods = list(methods)
    bad = set(methods) - set(GHD_METHODS)
    if bad:
        raise ValueError(f"race only supports {GHD_METHODS}, got {sorted(bad)}")
    cancel = threading.Event()
    start = time.perf_counter()
    winner: RunRecord | None = None
    with ThreadPoolExecutor(max_workers=len(methods), thread_name_prefix="race") as pool:
        pending = {pool.submit(run_check, h, m, k, timeout, cancel) for m in methods}
        while pending and winner is None:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for f in done:
                r = f.result()
                if r.answer != TIMEOUT and winner is None:
                    winner = r
                    cancel.set()
        cancel.set()
    if winner is None:
        return RunRecord(h.name, "race", k, None, TIMEOUT, _ms(time.perf_counter() - start), None, False)
    return replace(winner, method="race", winner=winner.method)


def run_corpus(
    instances: Sequence[Hypergraph],
    method: str,
    k_max: int,
    timeout_per_k: float | None = None,
    workers: int = 1,
) -> tuple[list[WidthStatus], list[RunRecord]]:
    """Width search over a corpus; this thread is the only one that touches the result lists."""
    statuses: list[WidthStatus] = []
    records: list[RunRecord] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(width_search, h, method, k_max, timeout_per_k) for h in instances]
        for f in futures:
            st, recs = f.result()
            statuses.append(st)
            records.extend(recs)
    return statuses, records


# ---------------------------------------------------------------- improvement buckets

BUCKETS = (">=1", "[0.5,1)", "[0.1,0.5)", "no", "timeout")


def improvement_bucket(base_k: int, r: RunRecord) -> str:
    if r.answer == TIMEOUT:
        return "timeout"
    if r.answer != YES or r.width is None:
        return "no"
    gain = Fraction(base_k) - r.width
    if gain >= 1:
        return ">=1"
    if gain >= Fraction(1, 2):
        return "[0.5,1)"
    if gain >= Fraction(1, 10):
        return "[0.1,0.5)"
    return "no"


def improvement_buckets(
    records: Iterable[RunRecord],
    base_widths: Mapping[str, int],
) -> dict[int, Counter]:
    """Counts per base hw (rows) and improvement bucket (columns)."""
    table: dict[int, Counter] = {}
    for r in records:
        k = base_widths[r.instance]
        table.setdefault(k, Counter({b: 0 for b in BUCKETS}))[improvement_bucket(k, r)] += 1
    return dict(sorted(table.items()))


# ---------------------------------------------------------------- correlations

CORRELATION_FIELDS = ("vertices", "edges", "arity", "degree", "bip", "bmip3", "bmip4", "vc", "hw")


@dataclass
class Correlations:
    fields: tuple[str, ...]
    matrix: list[list[float | None]]  # None marks an undefined coefficient

    def get(self, a: str, b: str) -> float | None:
        return self.matrix[self.fields.index(a)][self.fields.index(b)]

    def ranked(self) -> list[tuple[str, str, float]]:
        pairs = [
            (a, b, self.matrix[i][j])
            for i, a in enumerate(self.fields)
            for j, b in enumerate(self.fields)
            if i < j and self.matrix[i][j] is not None
        ]
        return sorted(pairs, key=lambda p: -abs(p[2]))

    def to_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(["", *self.fields])
        for name, row in zip(self.fields, self.matrix):
            w.writerow([name, *("undefined" if x is None else f"{x:.4f}" for x in row)])


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    if len(xs) < 3:
        return None
    try:
        r = statistics.correlation(xs, ys)
    except statistics.StatisticsError:  # constant column
        return None
    return max(-1.0, min(1.0, r))


def property_vector(report: PropertyReport, status: WidthStatus | None) -> dict[str, float | None]:
    row = report.row()
    vec: dict[str, float | None] = {}
    for f in CORRELATION_FIELDS[:-1]:
        v = row[f]
        vec[f] = float(v) if isinstance(v, int) else None
    vec["hw"] = None if status is None or status.hw is None else float(status.hw)
    return vec


def correlation_matrix(columns: Mapping[str, Sequence[float | None]]) -> Correlations:
    """Pearson coefficients with pairwise deletion of missing values."""
    names = tuple(columns)
    n = len(names)
    matrix: list[list[float | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            pairs = [(x, y) for x, y in zip(columns[names[i]], columns[names[j]]) if x is not None and y is not None]
            xs = [p[0] for p in pairs]
            ys = [p[1] for p in pairs]
            r = _pearson(xs, ys)
            if i == j and r is not None:
                r = 1.0
            matrix[i][j] = matrix[j][i] = r
    return Correlations(names, matrix)


def compute_correlations(reports: Sequence[tuple[PropertyReport, WidthStatus | None]]) -> Correlations:
    vectors = [property_vector(p, s) for p, s in reports]
    return correlation_matrix({f: [v[f] for v in vectors] for f in CORRELATION_FIELDS})


# ---------------------------------------------------------------- fingerprints

def canonical_form(h: Hypergraph) -> tuple[tuple[int, ...], ...]:
    """Sorted edge vertex-sets after relabelling vertices by (degree desc, name)."""
    deg = [0] * h.n_vertices
    for e in h.edges:
        for v in bits(e):
            deg[v] += 1
    order = sorted(range(h.n_vertices), key=lambda v: (-deg[v], h.vertices[v]))
    label = {v: i for i, v in enumerate(order)}
    return tuple(sorted(tuple(sorted(label[v] for v in bits(e))) for e in h.edges))


def fingerprint(h: Hypergraph) -> str:
    return hashlib.sha256(repr(canonical_form(h)).encode()).hexdigest()[:16]


def deduplicate(instances: Iterable[Hypergraph]) -> list[Hypergraph]:
    seen: dict[str, str] = {}
    out = []
    for h in instances:
        fp = fingerprint(h)
        if fp in seen:
            log.warning("%s looks like a duplicate of %s", h.name, seen[fp])
            continue
        seen[fp] = h.name
        out.append(h)
    return out


def mean_seconds(records: Iterable[RunRecord]) -> int | None:
    """Average runtime rounded to whole seconds."""
    times = [r.elapsed for r in records]
    return round(statistics.fmean(times)) if times else None


def width_sandwich_ok(status: WidthStatus) -> bool:
    """fhw_upper <= ghw_upper <= hw_upper and, when both are exact, ghw <= hw <= 3 ghw + 1."""
    ok = True
    if status.fhw_upper is not None and status.ghw_upper is not None:
        ok &= status.fhw_upper <= status.ghw_upper
    if status.ghw_upper is not None and status.hw_upper is not None:
        ok &= status.ghw_upper <= status.hw_upper
    if status.hw is not None and status.ghw is not None:
        ok &= status.ghw <= status.hw <= 3 * status.ghw + 1
    return bool(ok)

