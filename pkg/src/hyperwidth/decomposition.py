"""Decomposition trees, the universal validator, and text/JSON rendering."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

from .core import Hypergraph

KINDS = ("HD", "GHD", "FHD")


@dataclass
class Node:
    bag: frozenset[str]
    cover: dict[str, Fraction]
    children: list["Node"] = field(default_factory=list)

    @property
    def weight(self) -> Fraction:
        return sum(self.cover.values(), Fraction(0))

    def walk(self, depth: int = 0) -> Iterator[tuple[int, "Node"]]:
        yield depth, self
        for c in self.children:
            yield from c.walk(depth + 1)

    def subtree_vertices(self) -> frozenset[str]:
        out: set[str] = set()
        for _, n in self.walk():
            out |= n.bag
        return frozenset(out)


@dataclass
class Decomposition:
    root: Node
    kind: str = "HD"
    # solver side data, e.g. the pre-repair tree of the subedge-based methods
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown decomposition kind {self.kind!r}")

    @property
    def width(self) -> Fraction:
        return max(n.weight for _, n in self.root.walk())

    def nodes(self) -> list[Node]:
        return [n for _, n in self.root.walk()]

    def __len__(self) -> int:
        return sum(1 for _ in self.root.walk())


@dataclass(frozen=True)
class Validation:
    ok: bool
    condition: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_decomposition(
    h: Hypergraph,
    d: Decomposition,
    k: Fraction | int | None = None,
    extra_edges: Mapping[str, frozenset[str]] | None = None,
) -> Validation:
    """Check the TD/GHD/FHD/HD conditions for ``d.kind`` and width <= k.

    Condition names in the result: ``cover`` (unknown or non-integral cover
    entry), ``1`` (edge coverage), ``2`` (connectedness), ``3`` (bag covered
    by its weight function), ``4`` (special condition), ``width``.
    ``extra_edges`` lets covers reference subedges that are not in ``h``.
    """
    resolve = h.edge_sets()
    if extra_edges:
        resolve = {**resolve, **extra_edges}
    vset = set(h.vertices)
    walk = list(d.root.walk())

    for _, n in walk:
        for name, w in n.cover.items():
            if name not in resolve:
                return Validation(False, "cover", f"unknown edge {name!r} in node {_fmt_bag(n.bag)}")
            if not (0 <= w <= 1):
                return Validation(False, "cover", f"weight {w} of {name} outside [0,1]")
            if d.kind != "FHD" and w not in (0, 1):
                return Validation(False, "cover", f"fractional weight {w} of {name} in {d.kind}")
        stray = n.bag - vset
        if stray:
            return Validation(False, "1", f"bag {_fmt_bag(n.bag)} holds unknown vertices {sorted(stray)}")

    # (1) every edge inside some bag
    for name, vs in h.edge_sets().items():
        if not any(vs <= n.bag for _, n in walk):
            return Validation(False, "1", f"edge {name}={_fmt_bag(vs)} is in no bag")

    # (2) nodes holding a vertex form a subtree: exactly one topmost occurrence
    tops: dict[str, int] = {}
    stack: list[tuple[Node, frozenset[str]]] = [(d.root, frozenset())]
    while stack:
        n, parent_bag = stack.pop()
        for v in n.bag - parent_bag:
            tops[v] = tops.get(v, 0) + 1
        stack.extend((c, n.bag) for c in n.children)
    for v, count in tops.items():
        if count > 1:
            return Validation(False, "2", f"vertex {v} occurs in {count} disconnected parts")

    # (3) bag within B(cover)
    for _, n in walk:
        covered = _covered(n.cover, resolve)
        missing = n.bag - covered
        if missing:
            return Validation(False, "3", f"node {_fmt_bag(n.bag)} leaves {sorted(missing)} uncovered")

    # (4) special condition
    if d.kind == "HD":
        for _, n in walk:
            below = n.subtree_vertices()
            covered = _covered(n.cover, resolve)
            leak = (below & covered) - n.bag
            if leak:
                return Validation(False, "4", f"node {_fmt_bag(n.bag)} violates the special condition on {sorted(leak)}")

    if k is not None and d.width > Fraction(k):
        return Validation(False, "width", f"width {d.width} > {k}")
    return Validation(True)


def _covered(cover: Mapping[str, Fraction], resolve: Mapping[str, frozenset[str]]) -> frozenset[str]:
    load: dict[str, Fraction] = {}
    for name, w in cover.items():
        for v in resolve[name]:
            load[v] = load.get(v, Fraction(0)) + w
    return frozenset(v for v, x in load.items() if x >= 1)


def _fmt_bag(bag) -> str:
    return "{" + ",".join(sorted(bag)) + "}"


# ---------------------------------------------------------------- rendering

def _fmt_weight(w: Fraction) -> str:
    return str(w.numerator) if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


def format_decomposition(d: Decomposition, h: Hypergraph | None = None) -> str:
    """One node per line, pre-order: ``>> {a,b} cover: e1,e2=1/2``."""
    order = h.vertex_index if h is not None else None
    lines = []
    for depth, n in d.root.walk():
        bag = sorted(n.bag, key=(order.__getitem__ if order else None))
        cover = ",".join(
            name if w == 1 else f"{name}={_fmt_weight(w)}"
            for name, w in n.cover.items()
            if w != 0
        )
        prefix = ">" * depth + (" " if depth else "")
        lines.append(f"{prefix}{{{','.join(bag)}}} cover: {cover}")
    return "\n".join(lines)


_LINE = re.compile(r"^(>*)\s*\{([^}]*)\}\s*cover:\s*(.*)$")


def parse_decomposition(text: str, kind: str = "HD") -> Decomposition:
    stack: list[Node] = []
    root = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("width:"):
            continue
        m = _LINE.match(raw.strip())
        if not m:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        depth = len(m.group(1))
        bag = frozenset(x.strip() for x in m.group(2).split(",") if x.strip())
        cover: dict[str, Fraction] = {}
        for item in filter(None, (x.strip() for x in m.group(3).split(","))):
            name, _, w = item.partition("=")
            cover[name] = Fraction(w) if w else Fraction(1)
        node = Node(bag, cover)
        if depth == 0:
            if root is not None:
                raise ValueError(f"line {lineno}: second root")
            root = node
            stack = [node]
            continue
        if depth > len(stack):
            raise ValueError(f"line {lineno}: depth jumps to {depth}")
        del stack[depth:]
        stack[-1].children.append(node)
        stack.append(node)
    if root is None:
        raise ValueError("empty decomposition")
    return Decomposition(root, kind)


def decomposition_to_dict(d: Decomposition, h: Hypergraph | None = None) -> dict:
    order = h.vertex_index if h is not None else None

    def node(n: Node) -> dict:
        return {
            "bag": sorted(n.bag, key=(order.__getitem__ if order else None)),
            "cover": {k: _fmt_weight(w) for k, w in n.cover.items() if w != 0},
            "children": [node(c) for c in n.children],
        }

    return {"kind": d.kind, "width": _fmt_weight(d.width), "root": node(d.root)}


def decomposition_from_dict(data: dict) -> Decomposition:
    def node(x: dict) -> Node:
        return Node(
            frozenset(x["bag"]),
            {k: Fraction(w) for k, w in x["cover"].items()},
            [node(c) for c in x.get("children", [])],
        )

    return Decomposition(node(data["root"]), data.get("kind", "HD"))


def to_json(d: Decomposition, h: Hypergraph | None = None) -> str:
    return json.dumps(decomposition_to_dict(d, h), indent=2)
