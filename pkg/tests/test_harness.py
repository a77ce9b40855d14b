import csv
import io
import threading
import time
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hyperwidth.core import parse_hypergraph
from hyperwidth.harness import (
    BUCKETS,
    CSV_HEADER,
    GHD_METHODS,
    NO,
    TIMEOUT,
    YES,
    RunRecord,
    WidthStatus,
    canonical_form,
    compute_correlations,
    correlation_matrix,
    deduplicate,
    default_timeout,
    fingerprint,
    improvement_bucket,
    improvement_buckets,
    mean_seconds,
    race,
    read_records,
    run_check,
    run_corpus,
    run_improve,
    width_sandwich_ok,
    width_search,
    write_records,
)
from hyperwidth.props import analyze
from oracles import random_corpus


def rec(answer, k=2, method="hd", width=None, instance="x", ms=10):
    return RunRecord(instance, method, k, None, answer, ms, width, answer == YES)


class TestWidthSearch:
    def test_tri_hd(self, h_tri):
        st_, recs = width_search(h_tri, "hd", 3, 60)
        assert (st_.hw_lower, st_.hw_upper) == (2, 2)
        assert [(r.k, r.answer) for r in recs] == [(1, NO), (2, YES)]
        assert all(r.validated for r in recs if r.answer == YES)

    def test_path_hd(self, h_path):
        st_, recs = width_search(h_path, "hd", 3, 60)
        assert st_.hw == 1 and len(recs) == 1

    def test_tri_balsep(self, h_tri):
        st_, _ = width_search(h_tri, "balsep", 3, 60)
        assert st_.ghw == 2
        # a GHD "no" at 1 also rules out an HD of width 1
        assert st_.hw_lower == 2

    def test_tri_race(self, h_tri):
        st_, recs = width_search(h_tri, "race", 3, 60)
        assert st_.ghw == 2
        assert {r.method for r in recs} == {"race"}

    def test_kmax(self, h_tri):
        with pytest.raises(ValueError):
            width_search(h_tri, "hd", 0)

    def test_timeouts_leave_bounds_open(self, gap_instances):
        st_, recs = width_search(gap_instances[0], "hd", 2, 0.0)
        assert [r.answer for r in recs] == [TIMEOUT, TIMEOUT]
        assert st_.hw_lower is None and st_.hw_upper is None


class TestWidthStatus:
    def test_lower_after_timeout(self):
        s = WidthStatus("x")
        s.record(rec(NO, k=1))
        s.record(rec(TIMEOUT, k=2))
        s.record(rec(YES, k=3, width=3))
        assert (s.hw_lower, s.hw_upper, s.hw) == (2, 3, None)

    def test_ghd_no_implies_hd_no(self):
        s = WidthStatus("x")
        s.record(rec(NO, k=2, method="balsep"))
        assert s.hw_lower == 3 and s.ghw_lower == 3

    def test_hd_yes_caps_ghw_and_fhw(self):
        s = WidthStatus("x")
        s.record(rec(YES, k=2, width=2))
        assert s.ghw_upper == 2 and s.fhw_upper == 2
        s.record(rec(YES, k=2, method="improve-simple", width=Fraction(3, 2)))
        assert s.fhw_upper == Fraction(3, 2)
        assert width_sandwich_ok(s)

    def test_hd_no_does_not_touch_ghw(self):
        s = WidthStatus("x")
        s.record(rec(NO, k=2))
        assert s.ghw_lower is None

    def test_sandwich_violation_detected(self):
        s = WidthStatus("x", hw_lower=2, hw_upper=2, ghw_lower=3, ghw_upper=3)
        assert not width_sandwich_ok(s)


class TestRace:
    def test_tri_no(self, h_tri):
        r = race(h_tri, 1, GHD_METHODS, 60)
        assert r.answer == NO and r.method == "race" and r.winner in GHD_METHODS

    def test_one_yes(self, h_one):
        r = race(h_one, 1, GHD_METHODS, 60)
        assert r.answer == YES and r.width == 1 and r.validated

    def test_path_two(self, h_path):
        assert race(h_path, 2, GHD_METHODS, 60).answer == YES

    def test_all_timeout(self, gap_instances):
        r = race(gap_instances[0], 2, GHD_METHODS, 0.0)
        assert r.answer == TIMEOUT and r.winner is None

    def test_rejects_hd(self, h_tri):
        with pytest.raises(ValueError):
            race(h_tri, 1, ["hd"])

    @pytest.mark.parametrize("h", random_corpus(15, seed=2), ids=lambda h: h.name)
    def test_matches_standalone(self, h):
        for k in (1, 2):
            r = race(h, k, GHD_METHODS, 60)
            for m in GHD_METHODS:
                assert run_check(h, m, k, 60).answer == r.answer

    def test_cancel_flag(self, gap_instances):
        cancel = threading.Event()
        cancel.set()
        t0 = time.perf_counter()
        r = run_check(gap_instances[0], "balsep", 2, 60, cancel)
        assert r.answer == TIMEOUT and time.perf_counter() - t0 < 1


class TestRecords:
    def test_round_trip(self, tmp_path, h_tri):
        recs = [run_check(h_tri, "hd", k, 60) for k in (1, 2)]
        recs.append(run_improve(h_tri, "search", 2, Fraction(3, 2), 60))
        recs.append(race(h_tri, 2, GHD_METHODS, 60))
        path = tmp_path / "runs.csv"
        write_records(path, recs)
        assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
        assert read_records(path) == recs

    @given(st.builds(
        RunRecord,
        st.text("abc_:-", min_size=1, max_size=8),
        st.sampled_from(["hd", "balsep", "race", "improve-search"]),
        st.integers(1, 9),
        st.one_of(st.none(), st.fractions(min_value=0, max_value=9, max_denominator=10)),
        st.sampled_from([YES, NO, TIMEOUT]),
        st.integers(0, 10**7),
        st.one_of(st.none(), st.fractions(min_value=0, max_value=9, max_denominator=10)),
        st.booleans(),
    ))
    def test_round_trip_property(self, r):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_HEADER)
        w.writeheader()
        w.writerow(r.row())
        buf.seek(0)
        (row,) = csv.DictReader(buf)
        assert RunRecord.from_row(row) == r

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("instance,method\n")
        with pytest.raises(ValueError):
            read_records(p)

    def test_yes_is_validated(self, h_tri):
        r = run_check(h_tri, "globalbip", 2, 60)
        assert r.answer == YES and r.width == 2 and r.validated

    def test_elapsed_within_budget(self, gap_instances):
        r = run_check(gap_instances[1], "hd", 2, 0.05)
        assert r.elapsed <= 0.05 + 0.1

    def test_mean_seconds(self):
        assert mean_seconds([rec(YES, ms=1400), rec(NO, ms=2600)]) == 2
        assert mean_seconds([]) is None


def test_env_timeout(monkeypatch):
    monkeypatch.delenv("HTK_TIMEOUT_MS", raising=False)
    assert default_timeout() == 3600
    monkeypatch.setenv("HTK_TIMEOUT_MS", "250")
    assert default_timeout() == 0.25


class TestBuckets:
    @pytest.mark.parametrize(
        "k,width,bucket",
        [(2, Fraction(3, 2), "[0.5,1)"), (2, 2, "no"), (3, 2, ">=1"),
         (2, Fraction(19, 10), "[0.1,0.5)"), (2, Fraction(39, 20), "no")],
    )
    def test_bucket(self, k, width, bucket):
        assert improvement_bucket(k, rec(YES, k=k, width=Fraction(width))) == bucket

    def test_non_yes(self):
        assert improvement_bucket(2, rec(NO)) == "no"
        assert improvement_bucket(2, rec(TIMEOUT)) == "timeout"

    def test_table(self):
        recs = [
            rec(YES, width=Fraction(3, 2), instance="a"),
            rec(YES, width=2, instance="b"),
            rec(YES, k=3, width=2, instance="c"),
        ]
        table = improvement_buckets(recs, {"a": 2, "b": 2, "c": 3})
        assert list(table) == [2, 3]
        assert tuple(table[2]) == BUCKETS
        assert table[2]["[0.5,1)"] == 1 and table[2]["no"] == 1 and table[3][">=1"] == 1


class TestCorrelations:
    def test_identical(self):
        c = correlation_matrix({"x": [1, 2, 3, 5], "y": [1, 2, 3, 5]})
        assert c.get("x", "y") == pytest.approx(1)

    def test_negation(self):
        c = correlation_matrix({"x": [1, 2, 3, 5], "y": [-1, -2, -3, -5]})
        assert c.get("x", "y") == pytest.approx(-1)

    def test_constant_is_undefined(self):
        c = correlation_matrix({"x": [1, 2, 3], "y": [4, 4, 4]})
        assert c.get("x", "y") is None and c.get("y", "y") is None
        assert c.get("x", "x") == 1
        buf = io.StringIO()
        c.to_csv(buf)
        assert "undefined" in buf.getvalue()

    def test_too_few(self):
        assert correlation_matrix({"x": [1, 2], "y": [2, 1]}).get("x", "y") is None

    def test_pairwise_deletion(self):
        c = correlation_matrix({"x": [1, 2, None, 3, 4], "y": [2, 4, 100, 6, 8]})
        assert c.get("x", "y") == pytest.approx(1)

    def test_bip_vs_bmip3(self):
        # stars with a shared core: every pair and every triple meets in the core
        corpus = []
        for core in range(1, 6):
            shared = [f"c{i}" for i in range(core + 1)]
            edges = [(f"e{j}", shared + [f"x{j}", f"y{j}"]) for j in range(4)]
            # two edges meeting in one more vertex than the core raises bip only
            edges[0][1].append("z")
            edges[1][1].append("z")
            corpus.append(parse_hypergraph(
                ", ".join(f"{n}({','.join(vs)})" for n, vs in edges) + ".", f"s{core}"))
        reports = [(analyze(h), None) for h in corpus]
        assert all(r.intersection_size - r.multi_intersection[3] == 1 for r, _ in reports)
        c = compute_correlations(reports)
        assert c.get("bip", "bmip3") == pytest.approx(1)
        assert c.get("hw", "hw") is None

    def test_matrix_shape(self):
        reports = []
        for h in random_corpus(20, seed=4):
            st_, _ = width_search(h, "hd", 3, 60)
            reports.append((analyze(h), st_))
        c = compute_correlations(reports)
        for i, row in enumerate(c.matrix):
            for j, x in enumerate(row):
                assert x == c.matrix[j][i]
                assert x is None or -1 <= x <= 1
        ranked = c.ranked()
        assert [abs(r) for *_, r in ranked] == sorted((abs(r) for *_, r in ranked), reverse=True)


class TestFingerprints:
    def test_relabelling_invariant(self):
        a = parse_hypergraph("e1(a,b), e2(b,c).")
        b = parse_hypergraph("r(y,x), s(z,y).")
        assert canonical_form(a) == canonical_form(b)
        assert fingerprint(a) == fingerprint(b)

    def test_dedup(self, h_tri, h_path):
        other = parse_hypergraph("x(p,q), y(q,r), z(r,p).", "tri2")
        assert [h.name for h in deduplicate([h_tri, h_path, other])] == ["tri", "path"]


def test_run_corpus_parallel(h_tri, h_path, h_one):
    statuses, records = run_corpus([h_tri, h_path, h_one], "hd", 3, 60, workers=3)
    assert [s.hw for s in statuses] == [2, 1, 1]
    assert [r.instance for r in records] == ["tri", "tri", "path", "one"]


def test_improve_records(h_tri):
    r = run_improve(h_tri, "simple", 2, timeout=60)
    assert r.method == "improve-simple" and r.width == Fraction(3, 2) and r.validated
    assert run_improve(h_tri, "search", 2, Fraction(1), 60).answer == NO
    with pytest.raises(ValueError):
        run_improve(h_tri, "search", 2, None, 60)
