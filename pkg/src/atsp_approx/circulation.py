"""Tree orientation, Hoffman bounds, min-cost circulation and Euler tours.

The circulation is solved by successive shortest paths (Dijkstra with node
potentials) on the usual lower-bound transformation. Upper bounds are rounded
up to integers before solving. The integral feasible region then contains the
fractional one, and total unimodularity makes the integral optimum no more
expensive than the fractional optimum under the original bounds.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CirculationInfeasible, InstanceError
from .heldkarp import FractionalArcVector
from .instance import Instance, Walk
from .maxent import SpanningTree

Arc = tuple[int, int]
ARC_SUPPORT_EPS = 1e-9


@dataclass(frozen=True)
class OrientedTree:
    arcs: tuple[Arc, ...]
    cost: float


@dataclass(frozen=True, eq=False)
class CirculationProblem:
    n: int
    arcs: tuple[Arc, ...]
    lower: np.ndarray
    upper: np.ndarray
    cost: np.ndarray

    def capacity_bound(self) -> float:
        """c(u): cost of saturating every upper bound."""
        return float(self.upper @ self.cost)


@dataclass(frozen=True, eq=False)
class Circulation:
    arcs: tuple[Arc, ...]
    flow: np.ndarray
    cost: float
    ceiling_used: bool = False

    def nonzero(self) -> dict[Arc, int]:
        return {a: int(f) for a, f in zip(self.arcs, self.flow) if f}


def orient_tree(tree: SpanningTree, x: FractionalArcVector, inst: Instance) -> OrientedTree:
    """Replace each tree edge by its cheaper supported arc."""
    arcs = []
    for u, v in tree.edges:
        a, b = min(u, v), max(u, v)
        options = [arc for arc in ((a, b), (b, a)) if x.x[arc] > ARC_SUPPORT_EPS]
        if not options:
            raise InstanceError(f"tree edge {(a, b)} has no arc in the support of x*")
        arcs.append(min(options, key=lambda arc: inst.cost[arc]))
    return OrientedTree(tuple(arcs), float(sum(inst.cost[a] for a in arcs)))


def build_bounds(tree: OrientedTree, x: FractionalArcVector, alpha: float,
                 inst: Instance) -> CirculationProblem:
    """l(a) = 1 on tree arcs, else 0; u(a) = 1 + 2 alpha x*_a on tree arcs, else 2 alpha x*_a."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    tree_arcs = set(tree.arcs)
    arcs = sorted(set(x.support(ARC_SUPPORT_EPS)) | tree_arcs)
    xa = np.array([x.x[a] for a in arcs])
    in_tree = np.array([a in tree_arcs for a in arcs])
    lower = in_tree.astype(float)
    upper = in_tree + 2.0 * alpha * xa
    cost = np.array([inst.cost[a] for a in arcs])
    return CirculationProblem(inst.n, tuple(arcs), lower, upper, cost)


class _Residual:
    def __init__(self, size: int):
        self.head: list[list[int]] = [[] for _ in range(size)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []

    def add(self, u: int, v: int, cap: int, cost: float) -> int:
        k = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.head[u].append(k)
        self.head[v].append(k + 1)
        return k

    def dijkstra(self, src: int, pot: list[float]):
        dist = [math.inf] * len(self.head)
        prev = [-1] * len(self.head)
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for k in self.head[u]:
                if self.cap[k] <= 0:
                    continue
                v = self.to[k]
                nd = d + self.cost[k] + pot[u] - pot[v]
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    prev[v] = k
                    heapq.heappush(heap, (nd, v))
        return dist, prev


def solve_min_cost_circulation(p: CirculationProblem) -> Circulation:
    """Integral min-cost circulation with lower <= f <= ceil(upper)."""
    if np.any(p.cost < 0):
        raise ValueError("arc costs must be nonnegative")
    lower = np.rint(p.lower).astype(np.int64)
    if not np.allclose(lower, p.lower):
        raise ValueError("lower bounds must be integral")
    cap = np.ceil(p.upper - 1e-9).astype(np.int64)
    if np.any(cap < lower):
        k = int(np.argmax(cap < lower))
        raise CirculationInfeasible(f"arc {p.arcs[k]} has upper bound below its lower bound")

    n = p.n
    src, snk = n, n + 1
    g = _Residual(n + 2)
    excess = np.zeros(n, dtype=np.int64)
    ids = []
    for (u, v), lo, c, w in zip(p.arcs, lower, cap, p.cost):
        ids.append(g.add(u, v, int(c - lo), float(w)))
        excess[v] += lo
        excess[u] -= lo
    demand = 0
    for v in range(n):
        if excess[v] > 0:
            g.add(src, v, int(excess[v]), 0.0)
            demand += int(excess[v])
        elif excess[v] < 0:
            g.add(v, snk, int(-excess[v]), 0.0)

    pot = [0.0] * (n + 2)
    sent = 0
    while sent < demand:
        dist, prev = g.dijkstra(src, pot)
        if math.isinf(dist[snk]):
            reach = frozenset(v for v in range(n) if not math.isinf(dist[v]))
            raise CirculationInfeasible(
                f"no circulation meets the bounds; only {sent} of {demand} units routed. "
                f"Hoffman condition fails on U = {sorted(reach)}", cut=reach)
        for v in range(n + 2):
            if not math.isinf(dist[v]):
                pot[v] += dist[v]
        push = demand - sent
        v = snk
        while v != src:
            k = prev[v]
            push = min(push, g.cap[k])
            v = g.to[k ^ 1]
        v = snk
        while v != src:
            k = prev[v]
            g.cap[k] -= push
            g.cap[k ^ 1] += push
            v = g.to[k ^ 1]
        sent += push

    flow = np.array([lo + g.cap[k ^ 1] for lo, k in zip(lower, ids)], dtype=np.int64)
    return Circulation(p.arcs, flow, float(flow @ p.cost),
                       ceiling_used=bool(np.any(flow > p.upper + 1e-9)))


def to_eulerian_walk(f: Circulation, tree: OrientedTree | None = None, start: int = 0) -> Walk:
    """Closed walk using every arc copy of the flow multigraph exactly once."""
    out: dict[int, list[list[int]]] = {}
    balance: dict[int, int] = {}
    total = 0
    for (u, v), k in sorted(f.nonzero().items()):
        if k < 0:
            raise InstanceError(f"negative flow on {(u, v)}")
        out.setdefault(u, []).append([v, k])
        balance[u] = balance.get(u, 0) + k
        balance[v] = balance.get(v, 0) - k
        total += k
    bad = [v for v, b in balance.items() if b != 0]
    if bad:
        raise InstanceError(f"flow is not conserved at vertices {sorted(bad)}")
    if total == 0:
        return Walk(())
    if start not in out:
        raise InstanceError(f"start vertex {start} carries no flow")
    if tree is not None:
        used = f.nonzero()
        missing = [a for a in tree.arcs if used.get(a, 0) < 1]
        if missing:
            raise InstanceError(f"tree arcs {missing} carry no flow")

    ptr = {u: 0 for u in out}
    stack = [start]
    circuit = []
    while stack:
        u = stack[-1]
        lst = out.get(u, [])
        i = ptr.get(u, 0)
        while i < len(lst) and lst[i][1] == 0:
            i += 1
        ptr[u] = i
        if i == len(lst):
            circuit.append(stack.pop())
        else:
            lst[i][1] -= 1
            stack.append(lst[i][0])
    circuit.reverse()
    if len(circuit) - 1 != total:
        raise InstanceError("flow multigraph is not connected; no Euler tour exists")
    return Walk.from_vertices(circuit)
