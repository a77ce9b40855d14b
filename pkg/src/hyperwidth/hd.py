"""Top-down hypertree decomposition search (det-k-decomp style).

The search keeps a component ``C`` (edges still to be decomposed) and the
connector ``conn`` (vertices of ``C`` already in the parent bag). At each
node it guesses a label of at most ``k`` candidate edges, fixes the bag as
``B(label) & V(C)`` (the largest bag allowed by the special condition),
and recurses into the [bag]-components inside ``C``.

The same engine backs the subedge-based GHD methods and the fractional
improvement search; they differ only in the candidate pool and in an
optional bag filter.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .core import Hypergraph, bits, popcount, split_masks
from .deadline import Deadline, as_deadline
from .decomposition import Decomposition, Node, validate_decomposition

__all__ = ["check_hd", "validate_decomposition", "Pool", "DetKSearch"]

DEFAULT_MEMO_LIMIT = 200_000


@dataclass
class Pool:
    """Candidate edges for labels.

    The first ``n_base`` masks are the base edges of the hypergraph, in edge
    order. Later entries are subedges; ``witnesses[i]`` lists the base edges
    containing subedge ``i`` (lowest index first).
    """

    masks: list[int]
    n_base: int
    witnesses: dict[int, list[int]] = field(default_factory=dict)

    @classmethod
    def base(cls, h: Hypergraph) -> "Pool":
        return cls(list(h.edges), h.n_edges)

    def extend(self, h: Hypergraph, subedges: Sequence[int]) -> "Pool":
        masks = list(self.masks)
        witnesses = dict(self.witnesses)
        have = set(masks)
        for s in subedges:
            if s in have:
                continue
            have.add(s)
            witnesses[len(masks)] = [j for j, e in enumerate(h.edges) if s & ~e == 0]
            masks.append(s)
        return Pool(masks, self.n_base, witnesses)


@dataclass
class _T:
    bag: int
    label: tuple[int, ...]
    children: list["_T"]
    repair: tuple[int, ...] = ()


def match_witnesses(pool: Pool, label: Sequence[int]) -> tuple[int, ...] | None:
    """Assign each label member a distinct base edge containing it.

    Base edges stand for themselves. Returns None when no injective
    assignment exists. Augmenting-path matching; labels have at most k members.
    """
    used: dict[int, int] = {}
    for i in label:
        if i < pool.n_base:
            if i in used:
                return None
            used[i] = i
    assignment = {i: i for i in label if i < pool.n_base}

    def augment(i: int, seen: set[int]) -> bool:
        for w in pool.witnesses[i]:
            if w in seen:
                continue
            seen.add(w)
            owner = used.get(w)
            if owner is None or (owner >= pool.n_base and augment(owner, seen)):
                used[w] = i
                assignment[i] = w
                return True
        return False

    for i in label:
        if i >= pool.n_base and not augment(i, set()):
            return None
    return tuple(assignment[i] for i in label)


class DetKSearch:
    """One CHECK(HD,k)-style search over a fixed hypergraph and candidate pool.

    ``local_pool(comp_edges)`` (optional) supplies a second-phase pool per
    component; labels drawn from it must use at least one subedge.
    ``bag_ok(bag)`` (optional) rejects bags before recursing.
    """

    def __init__(
        self,
        h: Hypergraph,
        k: int,
        deadline: Deadline,
        pool: Pool | None = None,
        local_pool: Callable[[int], Pool] | None = None,
        bag_ok: Callable[[int], bool] | None = None,
        memo_limit: int = DEFAULT_MEMO_LIMIT,
    ):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.h = h
        self.k = k
        self.deadline = deadline
        self.pool = pool or Pool.base(h)
        self.local_pool = local_pool
        self.bag_ok = bag_ok
        self.memo_limit = memo_limit
        self.failed: OrderedDict[tuple[int, int], None] = OrderedDict()

    def run(self) -> _T | None:
        if not self.h.edges:
            return _T(0, (), [])
        return self._decompose((1 << self.h.n_edges) - 1, 0)

    def _remember_failure(self, key: tuple[int, int]) -> None:
        self.failed[key] = None
        if len(self.failed) > self.memo_limit:
            self.failed.popitem(last=False)

    def _labels(self, pool: Pool, vc: int, conn: int, inner: int, need_sub: bool):
        ranked = sorted(
            (i for i, m in enumerate(pool.masks) if m & vc),
            key=lambda i: (-popcount(pool.masks[i] & vc), i),
        )
        masks = pool.masks
        nb = pool.n_base
        for size in range(1, self.k + 1):
            for label in combinations(ranked, size):
                self.deadline.check()
                if need_sub and all(i < nb for i in label):
                    continue
                u = 0
                for i in label:
                    u |= masks[i]
                if conn & ~u or not (u & inner):
                    continue
                if size > 1 and _redundant(masks, label):
                    continue
                repair = ()
                if need_sub or any(i >= nb for i in label):
                    repair = match_witnesses(pool, label)
                    if repair is None:
                        continue
                yield label, u & vc, repair

    def _decompose(self, comp: int, conn: int) -> _T | None:
        key = (comp, conn)
        if key in self.failed:
            return None
        edges = self.h.edges
        comp_ids = list(bits(comp))
        vc = 0
        for i in comp_ids:
            vc |= edges[i]
        inner = vc & ~conn

        tried: set[int] = set()
        phases = [(self.pool, False)]
        if self.local_pool is not None:
            phases.append((None, True))
        for pool, need_sub in phases:
            if pool is None:
                pool = self.local_pool(comp)
            for label, bag, repair in self._labels(pool, vc, conn, inner, need_sub):
                if bag in tried:
                    continue
                tried.add(bag)
                if self.bag_ok is not None and not self.bag_ok(bag):
                    continue
                _, groups = split_masks([edges[i] for i in comp_ids], bag)
                children = []
                for g in groups:
                    sub = 0
                    vsub = 0
                    for p in g:
                        sub |= 1 << comp_ids[p]
                        vsub |= edges[comp_ids[p]]
                    child = self._decompose(sub, vsub & bag)
                    if child is None:
                        break
                    children.append(child)
                else:
                    real = tuple(pool.masks[i] for i in label)
                    return _T(bag, real, children, repair)
        self._remember_failure(key)
        return None


def _redundant(masks: list[int], label: tuple[int, ...]) -> bool:
    """True if some member adds no vertex beyond the others."""
    for j, i in enumerate(label):
        rest = 0
        for jj, ii in enumerate(label):
            if jj != j:
                rest |= masks[ii]
        if masks[i] & ~rest == 0:
            return True
    return False


# ---------------------------------------------------------------- conversion

def tree_to_decomposition(
    h: Hypergraph,
    tree: _T,
    kind: str,
    repaired: bool = True,
) -> Decomposition:
    """Turn an internal search tree into named nodes.

    With ``repaired`` each label member becomes its assigned base edge;
    otherwise subedges get synthetic names (see :func:`subedge_name`).
    """
    index = {m: i for i, m in enumerate(h.edges)}

    def name_of(mask: int) -> str:
        i = index.get(mask)
        return h.edge_names[i] if i is not None else subedge_name(h, mask)

    def build(t: _T) -> Node:
        if repaired and t.repair:
            names = [h.edge_names[w] for w in t.repair]
        else:
            names = [name_of(m) for m in t.label]
        cover = {n: Fraction(1) for n in names}
        return Node(h.names(t.bag), cover, [build(c) for c in t.children])

    return Decomposition(build(tree), kind)


def subedge_name(h: Hypergraph, mask: int) -> str:
    witness = next(n for n, e in zip(h.edge_names, h.edges) if mask & ~e == 0)
    return f"{witness}~" + ".".join(h.ordered_names(mask))


def subedge_sets(h: Hypergraph, tree: _T) -> dict[str, frozenset[str]]:
    known = set(h.edges)
    out = {}
    stack = [tree]
    while stack:
        t = stack.pop()
        for m in t.label:
            if m not in known:
                out[subedge_name(h, m)] = h.names(m)
        stack.extend(t.children)
    return out


# ---------------------------------------------------------------- public API

def check_hd(
    h: Hypergraph,
    k: int,
    deadline: Deadline | float | None = None,
    memo_limit: int = DEFAULT_MEMO_LIMIT,
) -> Decomposition | None:
    """Decide CHECK(HD,k).

    Returns an HD of width <= k, or None if none exists. Raises
    :class:`~hyperwidth.deadline.SearchTimeout` when the deadline passes.
    """
    search = DetKSearch(h, k, as_deadline(deadline), memo_limit=memo_limit)
    tree = search.run()
    if tree is None:
        return None
    return tree_to_decomposition(h, tree, "HD")
