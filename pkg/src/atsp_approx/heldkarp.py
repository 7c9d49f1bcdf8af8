"""Held-Karp LP relaxation for the ATSP, solved by cutting planes.

The master LP starts with the degree equalities only. Each round separates the
subtour family x(delta+(U)) + x(delta-(U)) >= 2 exactly with a global minimum
cut on the graph weighted by x_uv + x_vu, adds the violated cuts, and re-solves.
The inner LP is solved with HiGHS through scipy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, vstack

from .exceptions import LPError
from .instance import Instance

log = logging.getLogger(__name__)

SEPARATION_TOL = 1e-7
SUPPORT_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class FractionalArcVector:
    """x[u, v] for every ordered pair u != v; the diagonal is zero."""
    x: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, arc) -> float:
        return float(self.x[arc])

    def cut_value(self, subset: Iterable[int]) -> float:
        """x(delta+(U)) + x(delta-(U))."""
        inside = np.zeros(self.n, dtype=bool)
        inside[list(subset)] = True
        return float(self.x[np.ix_(inside, ~inside)].sum() + self.x[np.ix_(~inside, inside)].sum())

    def degree(self, v: int) -> float:
        return float(self.x[v].sum() + self.x[:, v].sum())

    def support(self, eps: float = 1e-9) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in zip(*np.nonzero(self.x > eps))]

    def cost(self, inst: Instance) -> float:
        return float((self.x * inst.cost).sum())


@dataclass(frozen=True)
class CutConstraint:
    subset: frozenset[int]
    violation: float


def _canonical(side: Iterable[int], n: int) -> frozenset[int]:
    side = frozenset(int(v) for v in side)
    other = frozenset(range(n)) - side
    if len(other) < len(side) or (len(other) == len(side) and 0 in other):
        return other
    return side


def _support_graph(x: np.ndarray) -> nx.Graph:
    n = x.shape[0]
    w = x + x.T
    g = nx.Graph()
    g.add_nodes_from(range(n))
    iu, ju = np.triu_indices(n, 1)
    for u, v, wt in zip(iu, ju, w[iu, ju]):
        if wt > SUPPORT_EPS:
            g.add_edge(int(u), int(v), weight=float(wt))
    return g


def violated_cuts(x: FractionalArcVector, tol: float = SEPARATION_TOL) -> list[CutConstraint]:
    """Violated subtour cuts found by one separation pass: every connected
    component when the support is disconnected, else the global minimum cut."""
    n = x.n
    if n <= 2:
        return []
    g = _support_graph(x.x)
    comps = [sorted(c) for c in nx.connected_components(g)]
    if len(comps) > 1:
        cuts = {_canonical(c, n) for c in comps}
        return [CutConstraint(c, 2.0 - x.cut_value(c)) for c in sorted(cuts, key=sorted)]
    value, (side, _) = nx.stoer_wagner(g, weight="weight")
    if value < 2.0 - tol:
        side = _canonical(side, n)
        return [CutConstraint(side, 2.0 - x.cut_value(side))]
    return []


def separate(x: FractionalArcVector, tol: float = SEPARATION_TOL) -> CutConstraint | None:
    """A subset U with x(delta+(U)) + x(delta-(U)) < 2 - tol, or None."""
    cuts = violated_cuts(x, tol)
    if not cuts:
        return None
    return max(cuts, key=lambda c: c.violation)


class _MasterLP:
    def __init__(self, inst: Instance):
        n = self.n = inst.n
        self.arcs = [(u, v) for u in range(n) for v in range(n) if u != v]
        m = len(self.arcs)
        tails = np.array([a[0] for a in self.arcs])
        heads = np.array([a[1] for a in self.arcs])
        self.tails, self.heads = tails, heads
        self.c = inst.cost[tails, heads]
        # out-degree 1 and in-degree 1 at every vertex
        rows = np.concatenate([tails, n + heads])
        cols = np.concatenate([np.arange(m), np.arange(m)])
        self.A_eq = csr_matrix((np.ones(2 * m), (rows, cols)), shape=(2 * n, m))
        self.b_eq = np.ones(2 * n)
        self.cut_rows: list[csr_matrix] = []
        self.cuts: list[frozenset[int]] = []

    def add_cut(self, subset: frozenset[int]):
        inside = np.zeros(self.n, dtype=bool)
        inside[list(subset)] = True
        crossing = inside[self.tails] != inside[self.heads]
        row = csr_matrix(-crossing.astype(float)[None, :])
        self.cut_rows.append(row)
        self.cuts.append(subset)

    def solve(self) -> tuple[np.ndarray, float]:
        kwargs = {}
        if self.cut_rows:
            kwargs = dict(A_ub=vstack(self.cut_rows), b_ub=np.full(len(self.cut_rows), -2.0))
        res = linprog(self.c, A_eq=self.A_eq, b_eq=self.b_eq, bounds=(0.0, 1.0),
                      method="highs", **kwargs)
        if res.status != 0:
            raise LPError(f"Held-Karp master LP failed (status {res.status}): {res.message}")
        x = np.zeros((self.n, self.n))
        x[self.tails, self.heads] = np.clip(res.x, 0.0, 1.0)
        x[x < SUPPORT_EPS] = 0.0
        return x, float(res.fun)


def solve_held_karp(inst: Instance, max_rounds: int = 1000,
                    initial_cuts: Iterable[Iterable[int]] = ()) -> tuple[FractionalArcVector, float]:
    """Optimal Held-Karp solution x* and its value OPT_HK = c(x*)."""
    master = _MasterLP(inst)
    for cut in initial_cuts:
        master.add_cut(frozenset(cut))
    for rnd in range(max_rounds):
        x, _ = master.solve()
        xv = FractionalArcVector(x)
        cuts = violated_cuts(xv)
        if not cuts:
            log.debug("held-karp: %d rounds, %d cuts", rnd + 1, len(master.cuts))
            return xv, xv.cost(inst)
        for cut in cuts:
            if cut.subset in master.cuts:
                raise LPError(f"cut {sorted(cut.subset)} re-separated with violation "
                              f"{cut.violation:.3g}; LP solution is numerically unreliable")
            master.add_cut(cut.subset)
    raise LPError(f"cutting-plane loop did not converge in {max_rounds} rounds")
