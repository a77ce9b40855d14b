"""Exact rational simplex for fractional edge covers.

The cover LP ``min sum(x) s.t. every target vertex gets weight >= 1`` is
solved through its dual, the fractional vertex packing
``max sum(y) s.t. sum over each edge <= 1``, whose slack basis is feasible
at the origin. Edge weights are read off the final reduced costs.
Bland's rule prevents cycling; all arithmetic is on Fractions.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class LPError(ArithmeticError):
    pass


def _maximize_packing(incidence: Sequence[Sequence[int]], n_vars: int) -> tuple[list[Fraction], list[Fraction]]:
    """Solve ``max 1.y  s.t.  A y <= 1, y >= 0`` for a 0/1 matrix A.

    Returns ``(y, prices)`` where ``prices[i]`` is the optimal dual value of
    row ``i``.
    """
    m = len(incidence)
    width = n_vars + m
    rows = []
    for i, row in enumerate(incidence):
        r = [Fraction(a) for a in row] + [ZERO] * m
        r[n_vars + i] = ONE
        rows.append(r)
    rhs = [ONE] * m
    basis = [n_vars + i for i in range(m)]
    # reduced profits c_j - c_B B^-1 A_j
    profit = [ONE] * n_vars + [ZERO] * m

    for _ in range(10_000):
        entering = next((j for j in range(width) if profit[j] > 0), None)
        if entering is None:
            break
        leave = None
        best = None
        for i in range(m):
            a = rows[i][entering]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise LPError("packing LP unbounded")
        piv = rows[leave][entering]
        prow = [x / piv for x in rows[leave]]
        prhs = rhs[leave] / piv
        for i in range(m):
            if i != leave:
                f = rows[i][entering]
                if f:
                    rows[i] = [x - f * y for x, y in zip(rows[i], prow)]
                    rhs[i] -= f * prhs
        f = profit[entering]
        profit = [x - f * y for x, y in zip(profit, prow)]
        rows[leave] = prow
        rhs[leave] = prhs
        basis[leave] = entering
    else:
        raise LPError("simplex iteration limit reached")

    y = [ZERO] * n_vars
    for i, b in enumerate(basis):
        if b < n_vars:
            y[b] = rhs[i]
    prices = [-profit[n_vars + i] for i in range(m)]
    return y, prices


def min_fractional_cover(target: Sequence[int], edges: Sequence[int]) -> tuple[Fraction, list[Fraction]] | None:
    """Optimal fractional cover of the vertex indices ``target`` by vertex bitmasks ``edges``.

    Returns ``(total, weights)`` aligned with ``edges``, or None when some
    target vertex lies in no edge.
    """
    weights = [ZERO] * len(edges)
    if not target:
        return ZERO, weights
    for v in target:
        if not any(e >> v & 1 for e in edges):
            return None
    useful = [i for i, e in enumerate(edges) if any(e >> v & 1 for v in target)]
    incidence = [[(edges[i] >> v) & 1 for v in target] for i in useful]
    y, prices = _maximize_packing(incidence, len(target))
    for i, p in zip(useful, prices):
        weights[i] = p
    total = sum(weights, ZERO)
    # optimality certificate: primal feasible and equal objectives
    for v in target:
        if sum((w for w, e in zip(weights, edges) if e >> v & 1), ZERO) < 1:
            raise LPError("recovered cover is infeasible")
    if total != sum(y, ZERO):
        raise LPError("duality gap in exact LP")
    return total, weights
