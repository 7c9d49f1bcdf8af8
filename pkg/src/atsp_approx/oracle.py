"""Exact solvers and enumerators used to validate the approximation pipelines.

The tour/path solvers run a dynamic program over vertex subsets, so they are
limited to n <= 18. Ties are resolved toward the lexicographically smallest
vertex order.
"""
from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .exceptions import InstanceError
from .instance import Instance, SpanningPath, Tour, path_cost, tour_cost

MAX_EXACT_N = 18


def _completion_table(cost: np.ndarray, inner: Sequence[int], end: int) -> np.ndarray:
    """table[mask, j] = cheapest path starting at inner[j], visiting every inner
    vertex in ``mask`` (which contains j) and finishing at ``end``."""
    m = len(inner)
    full = 1 << m
    inner = np.asarray(inner)
    sub = cost[np.ix_(inner, inner)]  # sub[j, i] = c(inner[j], inner[i])
    table = np.full((full, m), np.inf)
    masks = np.arange(full)
    popcount = np.array([bin(x).count("1") for x in range(full)])
    for j in range(m):
        table[1 << j, j] = cost[inner[j], end]
    for size in range(2, m + 1):
        layer = masks[popcount == size]
        for j in range(m):
            sel = layer[(layer >> j) & 1 == 1]
            rest = table[sel ^ (1 << j)]  # rest[:, i] finite only for i in mask
            table[sel, j] = (rest + sub[j][None, :]).min(axis=1)
    return table


def _reconstruct(cost, table, inner, start) -> list[int]:
    """Greedy forward walk through the completion table, taking the smallest
    vertex id whenever several continuations are optimal."""
    m = len(inner)
    by_id = sorted(range(m), key=lambda j: inner[j])
    mask = (1 << m) - 1
    cur = start
    order: list[int] = []
    while mask:
        live = [j for j in by_id if (mask >> j) & 1]
        vals = [cost[cur, inner[j]] + table[mask, j] for j in live]
        target = min(vals)
        tol = 1e-9 * max(1.0, abs(target))
        j = next(j for j, val in zip(live, vals) if val <= target + tol)
        order.append(inner[j])
        cur = inner[j]
        mask ^= 1 << j
    return order


def _check_n(n: int):
    if not 2 <= n <= MAX_EXACT_N:
        raise InstanceError(f"exact oracle supports 2 <= n <= {MAX_EXACT_N}, got n={n}")


def exact_atsp(inst: Instance) -> Tour:
    """Minimum-cost Hamiltonian cycle, starting at vertex 0."""
    _check_n(inst.n)
    inner = list(range(1, inst.n))
    table = _completion_table(inst.cost, inner, 0)
    order = _reconstruct(inst.cost, table, inner, 0)
    order = [0] + order
    return Tour(tuple(order), tour_cost(inst, order))


def exact_atspp(inst: Instance, s: int, t: int) -> SpanningPath:
    """Minimum-cost Hamiltonian path from s to t."""
    _check_n(inst.n)
    if s == t:
        raise InstanceError("path endpoints must differ")
    if not (0 <= s < inst.n and 0 <= t < inst.n):
        raise InstanceError(f"endpoints out of range: s={s}, t={t}")
    inner = [v for v in range(inst.n) if v not in (s, t)]
    if not inner:
        order = [s, t]
    else:
        table = _completion_table(inst.cost, inner, t)
        middle = _reconstruct(inst.cost, table, inner, s)
        order = [s] + middle + [t]
    return SpanningPath(s, t, tuple(order), path_cost(inst, order))


def enumerate_cuts(n: int) -> Iterator[frozenset[int]]:
    """Every cut of an n-vertex set exactly once, as its canonical side: the
    smaller side, or the side containing vertex 0 when both have n/2 vertices."""
    for mask in cut_masks(n):
        yield frozenset(v for v in range(n) if (int(mask) >> v) & 1)


def cut_masks(n: int) -> np.ndarray:
    if not 2 <= n <= MAX_EXACT_N:
        raise InstanceError(f"cut enumeration supports 2 <= n <= {MAX_EXACT_N}, got n={n}")
    masks = np.arange(1, (1 << n) - 1, dtype=np.int64)
    pc = np.zeros_like(masks)
    for v in range(n):
        pc += (masks >> v) & 1
    keep = (2 * pc < n) | ((2 * pc == n) & ((masks & 1) == 1))
    return masks[keep]


def enumerate_spanning_trees(edges: Sequence[tuple[int, int]], weights: Sequence[float]
                             ) -> list[tuple[tuple[tuple[int, int], ...], float]]:
    """All spanning trees of a small multigraph with their weight products."""
    edges = [(int(u), int(v)) for u, v in edges]
    weights = [float(w) for w in weights]
    verts = sorted({x for e in edges for x in e})
    if len(verts) > 10:
        raise InstanceError("tree enumeration is limited to 10 vertices")
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    m = len(edges)

    # connectivity check
    parent = list(range(n))

    def find(p, x):
        while p[x] != x:
            x = p[x]
        return x

    for u, v in edges:
        a, b = find(parent, index[u]), find(parent, index[v])
        if a != b:
            parent[a] = b
    if len({find(parent, i) for i in range(n)}) != 1:
        raise InstanceError("graph is disconnected; it has no spanning tree")

    out = []
    chosen: list[int] = []

    def rec(i, p, comps, prod):
        if comps == 1:
            out.append((tuple(edges[k] for k in chosen), prod))
            return
        if m - i < comps - 1:
            return
        u, v = index[edges[i][0]], index[edges[i][1]]
        a, b = find(p, u), find(p, v)
        if a != b:
            q = list(p)
            q[a] = b
            chosen.append(i)
            rec(i + 1, q, comps - 1, prod * weights[i])
            chosen.pop()
        rec(i + 1, p, comps, prod)

    rec(0, list(range(n)), n, 1.0)
    return out
