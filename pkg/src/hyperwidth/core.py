"""Hypergraph data model, edge-list I/O, and [U]-components.

Vertices and edges are interned to dense indices when a hypergraph is built.
Vertex sets are Python ints used as bitsets (bit i set <=> vertex i present),
which keeps every set operation in the solvers a single integer op.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- bitsets

def bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return mask.bit_count()


# ---------------------------------------------------------------- errors

class HypergraphSyntaxError(ValueError):
    """Malformed edge-list text; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DuplicateEdgeError(ValueError):
    pass


# ---------------------------------------------------------------- hypergraph

@dataclass(frozen=True)
class Hypergraph:
    """A named hypergraph with interned vertices and edges.

    ``edges`` holds one vertex bitmask per edge, aligned with ``edge_names``.
    Instances are normalized: no empty edges, no two edges with the same
    vertex set, no isolated vertices.
    """

    name: str
    vertices: tuple[str, ...]
    edge_names: tuple[str, ...]
    edges: tuple[int, ...]

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, Iterable[str]]],
        name: str = "",
    ) -> "Hypergraph":
        """Build a normalized hypergraph from ``(edge name, vertices)`` pairs.

        Empty edges are dropped. An edge whose vertex set repeats an earlier
        one is dropped with a warning; the first identifier is kept. Vertex
        order is first-appearance order over the kept edges.
        """
        seen_names: set[str] = set()
        seen_sets: dict[frozenset[str], str] = {}
        kept: list[tuple[str, list[str]]] = []
        for ename, vs in edges:
            if ename in seen_names:
                raise DuplicateEdgeError(f"duplicate edge identifier {ename!r}")
            seen_names.add(ename)
            ordered = list(dict.fromkeys(vs))
            if not ordered:
                log.warning("dropping empty edge %s", ename)
                continue
            key = frozenset(ordered)
            if key in seen_sets:
                log.warning("dropping edge %s: same vertex set as %s", ename, seen_sets[key])
                continue
            seen_sets[key] = ename
            kept.append((ename, ordered))

        index: dict[str, int] = {}
        for _, vs in kept:
            for v in vs:
                index.setdefault(v, len(index))
        masks = []
        for _, vs in kept:
            m = 0
            for v in vs:
                m |= 1 << index[v]
            masks.append(m)
        return cls(
            name=name,
            vertices=tuple(index),
            edge_names=tuple(n for n, _ in kept),
            edges=tuple(masks),
        )

    # -- lookups

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.edge_names)}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def all_vertices(self) -> int:
        return (1 << len(self.vertices)) - 1

    def mask(self, vertices: Iterable[str]) -> int:
        m = 0
        for v in vertices:
            m |= 1 << self.vertex_index[v]
        return m

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(self.vertices[i] for i in bits(mask))

    def ordered_names(self, mask: int) -> list[str]:
        return [self.vertices[i] for i in bits(mask)]

    def edge(self, name: str) -> frozenset[str]:
        return self.names(self.edges[self.edge_index[name]])

    def edge_sets(self) -> dict[str, frozenset[str]]:
        return {n: self.names(m) for n, m in zip(self.edge_names, self.edges)}

    def arity(self) -> int:
        return max((popcount(m) for m in self.edges), default=0)

    def union(self, edge_ids: Iterable[int]) -> int:
        m = 0
        for i in edge_ids:
            m |= self.edges[i]
        return m

    def __str__(self) -> str:
        return serialize_hypergraph(self)


# ---------------------------------------------------------------- parse / serialize

_IDENT = re.compile(r"[A-Za-z0-9_:][A-Za-z0-9_:\-]*")


def _strip_comments(text: str) -> str:
    # keep line structure so error positions stay meaningful
    return "\n".join(line.split("%", 1)[0] for line in text.split("\n"))


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def where(self) -> tuple[int, int]:
        line = self.text.count("\n", 0, self.pos) + 1
        col = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return line, col

    def error(self, message: str) -> HypergraphSyntaxError:
        line, col = self.where()
        return HypergraphSyntaxError(message, line, col)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise self.error(f"expected {ch!r}, got {got!r}")
        self.pos += 1

    def ident(self, what: str) -> str:
        self.skip_ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            got = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise self.error(f"expected {what}, got {got!r}")
        self.pos = m.end()
        return m.group()


def parse_edges(text: str) -> list[tuple[str, list[str]]]:
    """Parse edge-list text into raw ``(name, vertices)`` pairs, unnormalized."""
    sc = _Scanner(_strip_comments(text))
    out: list[tuple[str, list[str]]] = []
    names: set[str] = set()
    if sc.peek() in ("", "."):
        if sc.peek() == ".":
            sc.pos += 1
    else:
        while True:
            sc.skip_ws()
            line, col = sc.where()
            name = sc.ident("edge identifier")
            if name in names:
                raise DuplicateEdgeError(
                    f"duplicate edge identifier {name!r} (line {line}, column {col})"
                )
            names.add(name)
            sc.expect("(")
            if sc.peek() == ")":
                raise sc.error(f"empty edge literal {name}()")
            vs = [sc.ident("vertex identifier")]
            while sc.peek() == ",":
                sc.pos += 1
                vs.append(sc.ident("vertex identifier"))
            sc.expect(")")
            out.append((name, vs))
            if sc.peek() == ",":
                sc.pos += 1
                continue
            if sc.peek() == ".":
                sc.pos += 1
            break
    if sc.peek():
        raise sc.error(f"unexpected {sc.peek()!r}")
    return out


def parse_hypergraph(text: str, name: str = "") -> Hypergraph:
    """Parse the edge-list format, e.g. ``e1(a,b),\\ne2(b,c).``"""
    return Hypergraph.from_edges(parse_edges(text), name=name)


def serialize_hypergraph(h: Hypergraph) -> str:
    lines = [
        f"{n}({','.join(h.ordered_names(m))})" for n, m in zip(h.edge_names, h.edges)
    ]
    return ",\n".join(lines) + "."


def load_hypergraph(path: str | Path) -> Hypergraph:
    p = Path(path)
    return parse_hypergraph(p.read_text(encoding="utf-8"), name=p.stem)


HG_SUFFIXES = (".hg", ".dtl", ".txt")


def load_corpus(path: str | Path) -> list[Hypergraph]:
    """A single file, or every hypergraph file of a directory in name order."""
    p = Path(path)
    if p.is_dir():
        return [load_hypergraph(f) for f in sorted(p.iterdir()) if f.suffix in HG_SUFFIXES]
    return [load_hypergraph(p)]


# ---------------------------------------------------------------- covers

@dataclass(frozen=True)
class Cover:
    """Edge weight function. Keys are edge names or special edges (frozensets)."""

    weights: Mapping[str | frozenset, Fraction]
    mode: str = "integral"

    @classmethod
    def of(cls, *keys: str | frozenset) -> "Cover":
        return cls({k: Fraction(1) for k in keys})

    @property
    def weight(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def support(self) -> list:
        return [k for k, w in self.weights.items() if w > 0]

    def covered(self, resolve: Mapping[str, frozenset[str]]) -> frozenset[str]:
        """B(gamma): vertices whose incident weight sums to at least 1."""
        load: dict[str, Fraction] = {}
        for k, w in self.weights.items():
            vs = k if isinstance(k, frozenset) else resolve[k]
            for v in vs:
                load[v] = load.get(v, Fraction(0)) + w
        return frozenset(v for v, x in load.items() if x >= 1)


# ---------------------------------------------------------------- extended subhypergraphs

@dataclass(frozen=True)
class ExtendedSubhypergraph:
    """A subset of base edges (by index) plus special edges (vertex bitmasks)."""

    base: Hypergraph
    sub_edges: tuple[int, ...]
    specials: tuple[int, ...] = ()

    @classmethod
    def of(cls, base: Hypergraph, edges: Iterable[str] | None = None,
           specials: Iterable[Iterable[str]] = ()) -> "ExtendedSubhypergraph":
        idx = range(base.n_edges) if edges is None else sorted(base.edge_index[e] for e in edges)
        sp = tuple(dict.fromkeys(base.mask(s) for s in specials))
        return cls(base, tuple(idx), sp)

    @property
    def size(self) -> int:
        return len(self.sub_edges) + len(self.specials)

    def member_masks(self) -> list[int]:
        """Vertex masks of H' followed by S_p, in that order."""
        return [self.base.edges[i] for i in self.sub_edges] + list(self.specials)

    def vertices(self) -> int:
        m = 0
        for x in self.member_masks():
            m |= x
        return m


@dataclass(frozen=True)
class Component:
    """A group of (possibly special) edges relative to separator vertices ``u``."""

    edges: tuple[int, ...]
    specials: tuple[int, ...]
    separator: int

    @property
    def size(self) -> int:
        return len(self.edges) + len(self.specials)


def split_masks(masks: Sequence[int], u: int) -> tuple[list[int], list[list[int]]]:
    """Split item masks into those inside ``u`` and the [u]-connected groups.

    Returns positions into ``masks``. Groups are sorted by their smallest
    position, members ascending. Union-find over items sharing a vertex
    outside ``u``.
    """
    parent = list(range(len(masks)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    outside = ~u
    owner: dict[int, int] = {}
    contained = []
    for i, m in enumerate(masks):
        rest = m & outside
        if not rest:
            contained.append(i)
            continue
        for v in bits(rest):
            j = owner.get(v)
            if j is None:
                owner[v] = i
            else:
                ri, rj = find(i), find(j)
                if ri != rj:
                    if ri < rj:
                        parent[rj] = ri
                    else:
                        parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i, m in enumerate(masks):
        if m & outside:
            groups.setdefault(find(i), []).append(i)
    return contained, [groups[r] for r in sorted(groups)]


def components(ext: ExtendedSubhypergraph, u_set: int | Iterable[str]) -> tuple[Component, list[Component]]:
    """[U]-components of ``ext``; the first result collects members inside U."""
    u = u_set if isinstance(u_set, int) else ext.base.mask(u_set)
    masks = ext.member_masks()
    ne = len(ext.sub_edges)

    def pack(positions: list[int]) -> Component:
        return Component(
            edges=tuple(ext.sub_edges[p] for p in positions if p < ne),
            specials=tuple(ext.specials[p - ne] for p in positions if p >= ne),
            separator=u,
        )

    contained, groups = split_masks(masks, u)
    return pack(contained), [pack(g) for g in groups]


def is_balanced_separator(ext: ExtendedSubhypergraph, sep: Cover | Iterable[str] | int) -> bool:
    """True iff no [U]-component holds more than half of ``ext``'s members.

    ``sep`` is a set of base edge names (or an integral Cover over them), in
    which case U is the union of their vertices, or a vertex bitmask.
    """
    if isinstance(sep, int):
        u = sep
    else:
        names = sep.support() if isinstance(sep, Cover) else list(sep)
        u = ext.base.union(ext.base.edge_index[n] for n in names)
    _, parts = components(ext, u)
    return all(2 * p.size <= ext.size for p in parts)
