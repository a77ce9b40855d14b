"""End-to-end width study over a corpus directory.

For every instance: structural properties, hw by iterative HD search, ghw by
racing the three GHD methods, and the best fractional improvement of the
hw-width HD on a 0.1 grid. Writes ``runs.csv`` and ``properties.csv`` and
prints the per-method summary, the improvement table and the strongest
correlations.

    python3 scripts/width_study.py --corpus corpus/ --out results/ --kmax 4 --timeout 10
"""
from __future__ import annotations

import argparse
import csv
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from hyperwidth.core import load_corpus
from hyperwidth.harness import (
    YES,
    WidthStatus,
    compute_correlations,
    deduplicate,
    improvement_buckets,
    run_improve,
    width_sandwich_ok,
    width_search,
    write_records,
)
from hyperwidth.props import CSV_FIELDS, analyze


@dataclass
class StudyConfig:
    corpus: Path
    out: Path
    kmax: int = 4
    timeout: float = 10.0
    vc_timeout: float = 10.0
    top: int = 10


def best_improvement(h, k: int, timeout: float):
    """Smallest k' on the 0.1 grid below k for which an improved HD exists."""
    best = None
    kp = Fraction(k) - Fraction(1, 10)
    while kp > 0:
        r = run_improve(h, "search", k, kp, timeout)
        if r.answer != YES:
            break
        best = r
        kp = min(kp, r.width) - Fraction(1, 10)
    return best


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--vc-timeout", type=float, default=10.0)
    p.add_argument("--top", type=int, default=10)
    cfg = StudyConfig(**vars(p.parse_args()))
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    logging.getLogger("hyperwidth.core").setLevel(logging.ERROR)

    instances = deduplicate(load_corpus(cfg.corpus))
    cfg.out.mkdir(parents=True, exist_ok=True)
    records, reports, improved = [], [], []
    for h in instances:
        st = WidthStatus(h.name)
        _, hd_runs = width_search(h, "hd", cfg.kmax, cfg.timeout, st)
        _, ghd_runs = width_search(h, "race", cfg.kmax, cfg.timeout, st)
        records += hd_runs + ghd_runs
        if st.hw is not None:
            r = best_improvement(h, st.hw, cfg.timeout) or run_improve(h, "simple", st.hw, timeout=cfg.timeout)
            st.record(r)
            records.append(r)
            improved.append((r, st.hw))
        if not width_sandwich_ok(st):
            logging.error("width sandwich violated on %s: %s", h.name, st)
        reports.append((analyze(h, cfg.vc_timeout), st))
        print(f"{h.name}: hw={st.hw} ghw={st.ghw} fhw<={st.fhw_upper}")

    write_records(cfg.out / "runs.csv", records)
    with open(cfg.out / "properties.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for rep, _ in reports:
            w.writerow(rep.row())

    table = improvement_buckets([r for r, _ in improved], {r.instance: k for r, k in improved})
    if table:
        cols = list(next(iter(table.values())))
        print("\n" + ",".join(["hw", *cols]))
        for k, counts in table.items():
            print(",".join([str(k), *(str(counts[c]) for c in cols)]))

    corr = compute_correlations(reports)
    print("\nstrongest correlations")
    for a, b, r in corr.ranked()[: cfg.top]:
        print(f"  {a:>8} ~ {b:<8} {r:+.3f}")


if __name__ == "__main__":
    main()
