"""Structural invariants: degree, (multi-)intersection size, VC-dimension, acyclicity."""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import Hypergraph, bits, popcount
from .deadline import Deadline, SearchTimeout, as_deadline

CSV_FIELDS = ("name", "vertices", "edges", "arity", "degree", "bip", "bmip3", "bmip4", "vc", "acyclic")


def degree(h: Hypergraph) -> int:
    counts = [0] * h.n_vertices
    for e in h.edges:
        for v in bits(e):
            counts[v] += 1
    return max(counts, default=0)


def multi_intersection_size(h: Hypergraph, c: int) -> int:
    """Largest intersection of any ``c`` distinct edges (0 if there are fewer edges).

    Depth-first over edge subsets in index order; a branch is cut once its
    running intersection is no larger than the best found so far.
    """
    if c < 2:
        raise ValueError("c must be >= 2")
    edges = sorted(h.edges, key=popcount, reverse=True)
    n = len(edges)
    if n < c:
        return 0
    best = 0

    def dfs(start: int, chosen: int, inter: int) -> None:
        nonlocal best
        if chosen == c:
            best = max(best, popcount(inter))
            return
        for i in range(start, n - (c - chosen) + 1):
            nxt = inter & edges[i]
            if popcount(nxt) <= best:
                continue
            dfs(i + 1, chosen + 1, nxt)

    dfs(0, 0, h.all_vertices)
    return best


def _shattered(traces_of, x: int, size: int) -> bool:
    return len(traces_of(x)) == 1 << size


def vc_dimension(h: Hypergraph, deadline: Deadline | float | None = None) -> int:
    """Exact VC-dimension; raises SearchTimeout when the deadline passes.

    Candidates grow one vertex at a time and are kept only if every subset
    one smaller is shattered. A set of size s needs 2**s distinct traces, so
    the search stops once 2**s exceeds the number of edges.
    """
    dl = as_deadline(deadline)
    edges = h.edges

    def traces(x: int) -> set[int]:
        return {e & x for e in edges}

    level = []
    for v in range(h.n_vertices):
        dl.check()
        x = 1 << v
        if _shattered(traces, x, 1):
            level.append(x)
    if not level:
        return 0
    best = 1
    size = 1
    while level and (1 << (size + 1)) <= len(edges):
        known = set(level)
        nxt = []
        for x in level:
            top = x.bit_length() - 1
            for v in range(top + 1, h.n_vertices):
                dl.check()
                y = x | (1 << v)
                if any((y & ~(1 << w)) not in known for w in bits(x)):
                    continue
                if _shattered(traces, y, size + 1):
                    nxt.append(y)
        size += 1
        level = nxt
        if level:
            best = size
    return best


def is_acyclic(h: Hypergraph) -> bool:
    """GYO reduction: drop vertices in a single edge and edges inside other edges."""
    edges = list(h.edges)
    changed = True
    while edges and changed:
        changed = False
        counts: dict[int, int] = {}
        for e in edges:
            for v in bits(e):
                counts[v] = counts.get(v, 0) + 1
        lonely = 0
        for v, c in counts.items():
            if c == 1:
                lonely |= 1 << v
        if lonely:
            edges = [e & ~lonely for e in edges]
            changed = True
        kept = []
        for i, e in enumerate(edges):
            if e == 0:
                changed = True
                continue
            absorbed = any(
                j != i and e & ~f == 0 and (e != f or j < i)
                for j, f in enumerate(edges)
            )
            if absorbed:
                changed = True
            else:
                kept.append(e)
        edges = kept
    return not edges


@dataclass
class PropertyReport:
    name: str
    vertex_count: int
    edge_count: int
    arity: int
    degree: int
    intersection_size: int
    multi_intersection: dict[int, int] = field(default_factory=dict)
    vc_dimension: int | str = "timeout"
    acyclic: bool = False

    def row(self) -> dict[str, object]:
        return {
            "name": self.name,
            "vertices": self.vertex_count,
            "edges": self.edge_count,
            "arity": self.arity,
            "degree": self.degree,
            "bip": self.intersection_size,
            "bmip3": self.multi_intersection.get(3, 0),
            "bmip4": self.multi_intersection.get(4, 0),
            "vc": self.vc_dimension,
            "acyclic": str(self.acyclic).lower(),
        }


def analyze(h: Hypergraph, vc_timeout: float | None = 60.0) -> PropertyReport:
    try:
        vc: int | str = vc_dimension(h, vc_timeout)
    except SearchTimeout:
        vc = "timeout"
    return PropertyReport(
        name=h.name,
        vertex_count=h.n_vertices,
        edge_count=h.n_edges,
        arity=h.arity(),
        degree=degree(h),
        intersection_size=multi_intersection_size(h, 2),
        multi_intersection={c: multi_intersection_size(h, c) for c in (3, 4)},
        vc_dimension=vc,
        acyclic=is_acyclic(h),
    )
