"""Generalized hypertree decompositions: GlobalBIP, LocalBIP and BalSep.

GlobalBIP and LocalBIP reduce CHECK(GHD,k) to the HD search by offering
subedges as extra label candidates, globally or per component. BalSep
recurses on balanced separators of extended subhypergraphs. All three
return GHDs whose covers use base edges only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .core import (
    ExtendedSubhypergraph,
    Hypergraph,
    bits,
    is_balanced_separator,
    popcount,
    split_masks,
)
from .deadline import Deadline, as_deadline
from .decomposition import Decomposition, Node
from .hd import DetKSearch, Pool, subedge_name, subedge_sets, tree_to_decomposition

DEFAULT_CATALOG_CAP = 5_000_000


class CatalogTooLarge(RuntimeError):
    """The subedge catalog exceeded its cap; the global method is infeasible here."""


# ---------------------------------------------------------------- subedge catalogs

@dataclass(frozen=True)
class SubedgeCatalog:
    """Subedges of base edges, each with the lowest-index base edge containing it."""

    base: Hypergraph
    k: int
    entries: tuple[int, ...]
    witness: dict[int, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def sets(self) -> set[frozenset[str]]:
        return {self.base.names(m) for m in self.entries}

    def witness_name(self, entry: Iterable[str]) -> str:
        return self.base.edge_names[self.witness[self.base.mask(entry)]]


def _intersection_subsets(
    h: Hypergraph,
    others: Callable[[int], Iterable[int]],
    k: int,
    deadline: Deadline,
    cap: int,
) -> SubedgeCatalog:
    base_sets = set(h.edges)
    found: set[int] = set()
    tick = 0
    for ei, e in enumerate(h.edges):
        pieces = {e & h.edges[j] for j in others(ei) if j != ei} - {0}
        if not pieces:
            continue
        # unions of up to k pieces, keeping only the maximal ones
        unions = {0}
        for _ in range(k):
            grown = set(unions)
            for u in unions:
                for p in pieces:
                    grown.add(u | p)
                    tick += 1
                    if tick & 1023 == 0:
                        deadline.check()
            if grown == unions:
                break
            unions = grown
        unions.discard(0)
        maximal = [u for u in unions if not any(u != w and u & ~w == 0 for w in unions)]
        for u in maximal:
            s = u
            while s:
                if s not in base_sets:
                    found.add(s)
                    if len(found) > cap:
                        raise CatalogTooLarge(f"more than {cap} subedges")
                s = (s - 1) & u
                tick += 1
                if tick & 1023 == 0:
                    deadline.check()
    witness = {}
    for s in found:
        witness[s] = next(j for j, e in enumerate(h.edges) if s & ~e == 0)
    ordered = sorted(found, key=lambda s: (witness[s], -popcount(s), s))
    return SubedgeCatalog(h, k, tuple(ordered), witness)


def subedges_global(
    h: Hypergraph,
    k: int,
    deadline: Deadline | float | None = None,
    cap: int = DEFAULT_CATALOG_CAP,
) -> SubedgeCatalog:
    """All non-empty subsets of ``e & (e1 | ... | ej)`` with ``j <= k``, ``ei != e``.

    Vertex sets equal to a base edge are left out.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    everything = range(h.n_edges)
    return _intersection_subsets(h, lambda _: everything, k, as_deadline(deadline), cap)


def subedges_local(
    h: Hypergraph,
    component: Iterable[str] | int,
    k: int,
    deadline: Deadline | float | None = None,
    cap: int = DEFAULT_CATALOG_CAP,
) -> SubedgeCatalog:
    """Like :func:`subedges_global` but the ``ei`` range over ``component`` only.

    ``component`` is a collection of edge names or a bitmask over edge indices.
    """
    if isinstance(component, int):
        ids = list(bits(component))
    else:
        ids = sorted(h.edge_index[n] for n in component)
    return _intersection_subsets(h, lambda _: ids, k, as_deadline(deadline), cap)


# ---------------------------------------------------------------- GlobalBIP / LocalBIP

def _finish(h: Hypergraph, tree) -> Decomposition:
    d = tree_to_decomposition(h, tree, "GHD", repaired=True)
    d.extra["unrepaired"] = tree_to_decomposition(h, tree, "GHD", repaired=False)
    d.extra["subedges"] = subedge_sets(h, tree)
    return d


def check_ghd_global(
    h: Hypergraph,
    k: int,
    deadline: Deadline | float | None = None,
    cap: int = DEFAULT_CATALOG_CAP,
) -> Decomposition | None:
    """GlobalBIP: HD search on H plus the whole catalog, then cover repair.

    Raises :class:`CatalogTooLarge` or ``SearchTimeout``.
    """
    dl = as_deadline(deadline)
    catalog = subedges_global(h, k, dl, cap)
    pool = Pool.base(h).extend(h, catalog.entries)
    tree = DetKSearch(h, k, dl, pool=pool).run()
    return None if tree is None else _finish(h, tree)


def check_ghd_local(
    h: Hypergraph,
    k: int,
    deadline: Deadline | float | None = None,
    cap: int = DEFAULT_CATALOG_CAP,
) -> Decomposition | None:
    """LocalBIP: base-edge labels first, then labels with component-local subedges."""
    dl = as_deadline(deadline)
    base = Pool.base(h)
    cache: dict[int, Pool] = {}

    def local_pool(comp: int) -> Pool:
        if comp not in cache:
            cache[comp] = base.extend(h, subedges_local(h, comp, k, dl, cap).entries)
        return cache[comp]

    tree = DetKSearch(h, k, dl, pool=base, local_pool=local_pool).run()
    return None if tree is None else _finish(h, tree)


# ---------------------------------------------------------------- BalSep

@dataclass
class GhdNode:
    """Node of a GHD under construction by BalSep.

    ``label`` holds vertex masks of base edges or subedges; a special node
    has ``special=True`` and its label is the single special edge.
    """

    bag: int
    label: tuple[int, ...]
    special: bool = False
    children: list["GhdNode"] = field(default_factory=list)
    repair: tuple[int, ...] = ()

    def walk(self) -> Iterator["GhdNode"]:
        yield self
        for c in self.children:
            yield from c.walk()


def _reroot(root: GhdNode, target: GhdNode) -> GhdNode:
    parent: dict[int, GhdNode | None] = {id(root): None}
    stack = [root]
    while stack:
        x = stack.pop()
        for c in x.children:
            parent[id(c)] = x
            stack.append(c)
    path = [target]
    while parent[id(path[-1])] is not None:
        path.append(parent[id(path[-1])])
    for child, par in zip(path, path[1:]):
        par.children.remove(child)
        child.children.append(par)
    return target


class BuildError(RuntimeError):
    pass


def build_ghd(bag: int, label: Sequence[int], children: Sequence[GhdNode], repair: Sequence[int] = ()) -> GhdNode:
    """Join child GHDs under a new root with the given bag and label.

    Each child is rerooted at its special node for ``bag`` and that node's
    subtrees hang directly below the new root. If a child absorbed the
    special edge into a larger bag instead, it is rerooted there and that
    node itself becomes a child of the root.
    """
    root = GhdNode(bag, tuple(label), False, [], tuple(repair))
    for child in children:
        hit = next((n for n in child.walk() if n.special and n.bag == bag), None)
        if hit is not None:
            r = _reroot(child, hit)
            root.children.extend(r.children)
            continue
        hit = next((n for n in child.walk() if not n.special and bag & ~n.bag == 0), None)
        if hit is None:
            raise BuildError("child GHD has no node covering the separator bag")
        root.children.append(_reroot(child, hit))
    return root


def compute_subhypergraphs(ext: ExtendedSubhypergraph, bag: int | Iterable[str]) -> list[ExtendedSubhypergraph]:
    """One extended subhypergraph per [bag]-component, each gaining ``bag`` as a special edge."""
    b = bag if isinstance(bag, int) else ext.base.mask(bag)
    masks = ext.member_masks()
    ne = len(ext.sub_edges)
    _, groups = split_masks(masks, b)
    out = []
    for g in groups:
        edges = tuple(ext.sub_edges[p] for p in g if p < ne)
        specials = [ext.specials[p - ne] for p in g if p >= ne]
        if b not in specials:
            specials.append(b)
        out.append(ExtendedSubhypergraph(ext.base, edges, tuple(specials)))
    return out


class SeparatorIterator:
    """Candidate separators for one extended subhypergraph, each yielded once.

    Full-edge labels of size 1..k come first. Then, for every full-edge
    label, variants where some members are replaced by catalog subedges
    contained in them, larger subedges first. Yields ``(label, base)`` where
    ``base`` names the full edge each label member stems from.
    """

    def __init__(self, h: Hypergraph, ext: ExtendedSubhypergraph, k: int,
                 catalog: Callable[[], SubedgeCatalog]):
        self.h = h
        self.k = k
        self.vext = ext.vertices()
        self.catalog = catalog
        self.relevant = [i for i, e in enumerate(h.edges) if e & self.vext]
        self.phase = "full-edges"

    def _labels(self) -> Iterator[tuple[int, ...]]:
        for size in range(1, self.k + 1):
            yield from itertools.combinations(self.relevant, size)

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
        edges = self.h.edges
        for label in self._labels():
            yield tuple(edges[i] for i in label), label
        self.phase = "subedges"
        cat = self.catalog()
        options: dict[int, list[int]] = {}
        for i in self.relevant:
            full = edges[i] & self.vext
            seen = {full, 0}
            opts = []
            for s in sorted((s for s in cat.entries if s & ~edges[i] == 0),
                            key=lambda s: (-popcount(s & self.vext), s)):
                r = s & self.vext
                if r not in seen:
                    seen.add(r)
                    opts.append(s)
            options[i] = opts
        yielded: set[frozenset[int]] = set()
        for label in self._labels():
            choices = [[edges[i]] + options[i] for i in label]
            for pick in itertools.product(*choices):
                if all(m == edges[i] for m, i in zip(pick, label)):
                    continue
                key = frozenset(pick)
                if key in yielded or len(key) < len(pick):
                    continue
                yielded.add(key)
                yield pick, label


class BalSep:
    """Balanced-separator GHD search for one (H, k)."""

    def __init__(self, h: Hypergraph, k: int, deadline: Deadline,
                 cap: int = DEFAULT_CATALOG_CAP,
                 on_separator: Callable[[ExtendedSubhypergraph, int], None] | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.h = h
        self.k = k
        self.deadline = deadline
        self.cap = cap
        self.on_separator = on_separator
        self._catalog: SubedgeCatalog | None = None

    def catalog(self) -> SubedgeCatalog:
        if self._catalog is None:
            self._catalog = subedges_global(self.h, self.k, self.deadline, self.cap)
        return self._catalog

    def run(self) -> GhdNode | None:
        if not self.h.edges:
            return GhdNode(0, ())
        return self.decompose(ExtendedSubhypergraph(self.h, tuple(range(self.h.n_edges)), ()))

    def decompose(self, ext: ExtendedSubhypergraph) -> GhdNode | None:
        self.deadline.check()
        items = [(m, False) for m in ext.member_masks()[: len(ext.sub_edges)]]
        items += [(s, True) for s in ext.specials]
        if len(items) == 1:
            m, sp = items[0]
            return GhdNode(m, (m,), sp, [], () if sp else (self.h.edges.index(m),))
        if len(items) == 2:
            (m1, s1), (m2, s2) = items
            u = GhdNode(m1, (m1,), s1, [], () if s1 else (self.h.edges.index(m1),))
            u.children.append(GhdNode(m2, (m2,), s2, [], () if s2 else (self.h.edges.index(m2),)))
            return u

        vext = ext.vertices()
        masks = ext.member_masks()
        n = len(masks)
        tried: set[int] = set()
        for label, origin in SeparatorIterator(self.h, ext, self.k, self.catalog):
            self.deadline.check()
            u = 0
            for m in label:
                u |= m
            bag = u & vext
            if bag in tried:
                continue
            tried.add(bag)
            _, groups = split_masks(masks, bag)
            if any(2 * len(g) > n for g in groups):
                continue
            if self.on_separator is not None:
                self.on_separator(ext, bag)
            assert is_balanced_separator(ext, bag)
            subs = []
            for sub in compute_subhypergraphs(ext, bag):
                d = self.decompose(sub)
                if d is None:
                    break
                subs.append(d)
            else:
                return build_ghd(bag, label, subs, origin)
        return None


def ghd_node_to_decomposition(h: Hypergraph, root: GhdNode, repaired: bool = True) -> Decomposition:
    index = {m: i for i, m in enumerate(h.edges)}

    def name_of(mask: int) -> str:
        i = index.get(mask)
        if i is not None:
            return h.edge_names[i]
        return subedge_name(h, mask)

    def build(n: GhdNode) -> Node:
        if n.special:
            raise BuildError("special edge left in a finished GHD")
        if repaired:
            names = [h.edge_names[i] for i in n.repair]
        else:
            names = [name_of(m) for m in n.label]
        return Node(h.names(n.bag), {x: Fraction(1) for x in names}, [build(c) for c in n.children])

    return Decomposition(build(root), "GHD")


def check_ghd_balsep(
    h: Hypergraph,
    k: int,
    deadline: Deadline | float | None = None,
    cap: int = DEFAULT_CATALOG_CAP,
    on_separator: Callable[[ExtendedSubhypergraph, int], None] | None = None,
) -> Decomposition | None:
    """BalSep. ``on_separator(ext, bag)`` sees every separator at selection time."""
    root = BalSep(h, k, as_deadline(deadline), cap, on_separator).run()
    if root is None:
        return None
    d = ghd_node_to_decomposition(h, root)
    unrepaired = ghd_node_to_decomposition(h, root, repaired=False)
    d.extra["unrepaired"] = unrepaired
    d.extra["subedges"] = {
        subedge_name(h, m): h.names(m)
        for n in root.walk()
        for m in n.label
        if m not in set(h.edges)
    }
    return d
