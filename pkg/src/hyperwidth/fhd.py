"""Fractional edge covers and fractionally improved decompositions."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .core import Hypergraph, bits
from .deadline import Deadline, as_deadline
from .decomposition import Decomposition, Node
from .hd import DetKSearch, tree_to_decomposition
from .lp import min_fractional_cover


@dataclass(frozen=True)
class FractionalCoverSolution:
    weights: dict[str, Fraction]
    total_weight: Fraction
    covered: frozenset[str]


def fractional_cover(
    target: Iterable[str],
    usable_edges: Mapping[str, Iterable[str]],
) -> FractionalCoverSolution | None:
    """Exact minimum-weight fractional cover of ``target``; None if infeasible."""
    names = list(usable_edges)
    sets = [frozenset(usable_edges[n]) for n in names]
    target = frozenset(target)
    universe = sorted(target | frozenset().union(*sets)) if sets else sorted(target)
    pos = {v: i for i, v in enumerate(universe)}
    masks = [sum(1 << pos[v] for v in s) for s in sets]
    res = min_fractional_cover([pos[v] for v in sorted(target)], masks)
    if res is None:
        return None
    total, w = res
    weights = {n: x for n, x in zip(names, w) if x}
    load: dict[str, Fraction] = {}
    for n, x in weights.items():
        for v in usable_edges[n]:
            load[v] = load.get(v, Fraction(0)) + x
    covered = frozenset(v for v, x in load.items() if x >= 1)
    return FractionalCoverSolution(weights, total, covered)


class BagLP:
    """Memoized optimal fractional cover value per bag (vertex bitmask) over E(h)."""

    def __init__(self, h: Hypergraph):
        self.h = h
        self._cache: dict[int, tuple[Fraction, list[Fraction]]] = {}

    def solve(self, bag: int) -> tuple[Fraction, list[Fraction]]:
        hit = self._cache.get(bag)
        if hit is None:
            hit = min_fractional_cover(list(bits(bag)), self.h.edges)
            self._cache[bag] = hit
        return hit

    def value(self, bag: int) -> Fraction:
        return self.solve(bag)[0]


def simple_improve_hd(h: Hypergraph, d: Decomposition, lp: BagLP | None = None) -> Decomposition:
    """Keep tree and bags; give every node an optimal fractional cover over E(h)."""
    lp = lp or BagLP(h)

    def improve(n: Node) -> Node:
        _, w = lp.solve(h.mask(n.bag))
        cover = {name: x for name, x in zip(h.edge_names, w) if x}
        return Node(n.bag, cover, [improve(c) for c in n.children])

    return Decomposition(improve(d.root), "FHD")


def frac_improve_hd(
    h: Hypergraph,
    k: int,
    k_prime: Fraction | int | str,
    deadline: Deadline | float | None = None,
) -> Decomposition | None:
    """Search HDs of width <= k for one whose bags all have fractional cover <= k'.

    Returns the fractionally improved decomposition or None.
    """
    k_prime = Fraction(k_prime)
    if not 0 < k_prime < k:
        raise ValueError(f"need 0 < k' < k, got k'={k_prime}, k={k}")
    lp = BagLP(h)
    search = DetKSearch(h, k, as_deadline(deadline), bag_ok=lambda bag: lp.value(bag) <= k_prime)
    tree = search.run()
    if tree is None:
        return None
    return simple_improve_hd(h, tree_to_decomposition(h, tree, "HD"), lp)
