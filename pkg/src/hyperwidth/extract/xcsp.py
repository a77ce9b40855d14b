"""Constraint networks in a small XCSP3 subset to hypergraphs.

Supported: ``<var>`` and ``<array>`` declarations, ``<extension>`` constraints
with a ``<list>`` scope, nested ``<block>`` wrappers. Anything else inside
``<constraints>`` is skipped and counted.
"""
from __future__ import annotations

import itertools
import logging
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field

from ..core import Hypergraph

log = logging.getLogger(__name__)

_REF = re.compile(r"^([A-Za-z_][\w\-]*)((?:\[[^\]]*\])*)$")


class XcspError(ValueError):
    pass


@dataclass
class CspConversion:
    hypergraph: Hypergraph
    skipped: Counter = field(default_factory=Counter)


def _vertex(name: str, index: tuple[int, ...] = ()) -> str:
    return ":".join([name, *map(str, index)])


def _dims(size: str) -> list[int]:
    return [int(x) for x in re.findall(r"\[(\d+)\]", size)]


def _expand(ref: str, arrays: dict[str, list[int]], scalars: set[str]) -> list[str]:
    """Variable names denoted by ``x``, ``a[2]``, ``a[]`` or ``a[0..3][1]``."""
    m = _REF.match(ref)
    if not m:
        raise XcspError(f"bad variable reference {ref!r}")
    name, idx = m.groups()
    if not idx:
        if name in arrays:
            return [_vertex(name, t) for t in itertools.product(*(range(d) for d in arrays[name]))]
        if name not in scalars:
            raise XcspError(f"undeclared variable {name!r}")
        return [name]
    if name not in arrays:
        raise XcspError(f"{name!r} is not an array")
    parts = re.findall(r"\[([^\]]*)\]", idx)
    dims = arrays[name]
    if len(parts) != len(dims):
        raise XcspError(f"wrong number of indices in {ref!r}")
    ranges = []
    for p, d in zip(parts, dims):
        if p == "":
            ranges.append(range(d))
        elif ".." in p:
            lo, hi = p.split("..")
            ranges.append(range(int(lo), int(hi) + 1))
        else:
            ranges.append(range(int(p), int(p) + 1))
    return [_vertex(name, t) for t in itertools.product(*ranges)]


def convert_csp(xcsp: str, name: str = "") -> CspConversion:
    try:
        root = ET.fromstring(xcsp)
    except ET.ParseError as err:
        line, col = err.position
        raise XcspError(f"XML parse error at line {line}, column {col}: {err}") from err

    arrays: dict[str, list[int]] = {}
    scalars: set[str] = set()
    for decls in root.iter("variables"):
        for el in decls:
            ident = el.get("id")
            if not ident:
                continue
            if el.tag == "var":
                scalars.add(ident)
            elif el.tag == "array":
                arrays[ident] = _dims(el.get("size", ""))

    skipped: Counter = Counter()
    edges: list[tuple[str, list[str]]] = []

    def walk(parent: ET.Element) -> None:
        for el in parent:
            if el.tag == "block":
                walk(el)
            elif el.tag == "extension":
                scope = el.find("list")
                if scope is None or not (scope.text or "").split():
                    skipped["extension without list"] += 1
                    continue
                vs: list[str] = []
                for ref in scope.text.split():
                    vs.extend(_expand(ref, arrays, scalars))
                edges.append((el.get("id") or f"c{len(edges) + 1}", vs))
            else:
                skipped[el.tag] += 1

    for cons in root.iter("constraints"):
        walk(cons)
    for kind, n in skipped.items():
        log.warning("skipped %d unsupported constraint(s) of kind %s", n, kind)
    return CspConversion(Hypergraph.from_edges(edges, name=name), skipped)


def csp_to_hypergraph(xcsp: str, name: str = "") -> Hypergraph:
    return convert_csp(xcsp, name).hypergraph
