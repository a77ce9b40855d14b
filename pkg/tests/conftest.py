import logging
from pathlib import Path

import pytest
from hypothesis import settings

from hyperwidth.core import parse_hypergraph, load_hypergraph

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# duplicate-edge warnings from random corpora are expected noise
logging.getLogger("hyperwidth.core").setLevel(logging.ERROR)


@pytest.fixture
def h_tri():
    return parse_hypergraph("e1(a,b), e2(b,c), e3(c,a).", "tri")


@pytest.fixture
def h_path():
    return parse_hypergraph("e1(a,b), e2(b,c).", "path")


@pytest.fixture
def h_two():
    return parse_hypergraph("e1(a,b,c), e2(b,c,d).", "two")


@pytest.fixture
def h_one():
    return parse_hypergraph("e1(a,b,c).", "one")


@pytest.fixture
def h_square():
    return parse_hypergraph("e1(a,b), e2(b,c), e3(c,d), e4(d,a).", "square")


@pytest.fixture(scope="session")
def gap_instances():
    """Hypergraphs with ghw 2 and hw 3."""
    return [load_hypergraph(p) for p in sorted(DATA.glob("gap*.hg"))]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for outcome in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            if rep.when != "call" and outcome == "passed":
                continue
            n, text = props["criterion"]
            status = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
            if lines.get(n, ("PASS",))[0] != "FAIL":
                lines[n] = (status, text)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            status, text = lines[n]
            terminalreporter.write_line(f"criterion {n:>2}: {status}  {text}")
