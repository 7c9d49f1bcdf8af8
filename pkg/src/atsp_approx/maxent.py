"""Maximum-entropy spanning-tree distributions.

The Held-Karp solution is symmetrized into z* (a point inside the spanning-tree
polytope). We then fit edge weights lambda_e = exp(gamma_e) so that a
lambda-random tree, drawn with probability proportional to the product of its
edge weights, has edge marginals at most (1 + eps) z*_e. Marginals come from the
weighted matrix-tree theorem: Pr[e in T] = lambda_e * R_eff(e).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import FitError, SamplingError
from .heldkarp import FractionalArcVector
from .instance import Instance
from .seeding import derive_seed

log = logging.getLogger(__name__)

Edge = tuple[int, int]

Z_SUPPORT_EPS = 1e-9
ARC_SUPPORT_EPS = 1e-9
MARGINAL_FLOOR = 1e-12
FIT_MAX_STEPS = 10_000


@dataclass(frozen=True, eq=False)
class SymmetricEdgeVector:
    n: int
    edges: tuple[Edge, ...]
    z: np.ndarray
    edge_cost: np.ndarray

    def as_dict(self) -> dict[Edge, float]:
        return {e: float(v) for e, v in zip(self.edges, self.z)}

    def cut_value(self, subset) -> float:
        inside = np.zeros(self.n, dtype=bool)
        inside[list(subset)] = True
        u, v = np.array(self.edges).T
        return float(self.z[inside[u] != inside[v]].sum())

    def cost(self) -> float:
        return float(self.z @ self.edge_cost)


@dataclass(frozen=True, eq=False)
class GammaVector:
    n: int
    edges: tuple[Edge, ...]
    gamma: np.ndarray

    def lam(self) -> np.ndarray:
        """Edge weights scaled so the largest is 1 (tree probabilities are
        invariant under a common shift of gamma)."""
        return np.exp(self.gamma - self.gamma.max())

    def shifted(self, c: float) -> "GammaVector":
        return GammaVector(self.n, self.edges, self.gamma + c)


@dataclass(frozen=True)
class SpanningTree:
    edges: tuple[Edge, ...]
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted((min(e), max(e)) for e in self.edges)))


def symmetrize(x: FractionalArcVector, inst: Instance) -> SymmetricEdgeVector:
    """z_{u,v} = (n-1)/n (x_uv + x_vu); an edge costs its cheapest supported arc."""
    n = x.n
    X = x.x
    edges, z, cost = [], [], []
    for u in range(n):
        for v in range(u + 1, n):
            val = (n - 1) / n * (X[u, v] + X[v, u])
            if val < Z_SUPPORT_EPS:
                continue
            arcs = [inst.cost[a] for a in ((u, v), (v, u)) if X[a] > ARC_SUPPORT_EPS]
            edges.append((u, v))
            z.append(val)
            cost.append(min(arcs))
    return SymmetricEdgeVector(n, tuple(edges), np.array(z), np.array(cost))


def _check_connected(n: int, edges: Sequence[Edge]):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    for u, v in edges:
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            comps -= 1
    if comps != 1:
        raise SamplingError(f"support graph has {comps} components; no spanning tree exists")


def laplacian(n: int, edges: Sequence[Edge], weights: np.ndarray) -> np.ndarray:
    L = np.zeros((n, n))
    u, v = np.asarray(edges, dtype=int).reshape(-1, 2).T
    np.add.at(L, (u, v), -weights)
    np.add.at(L, (v, u), -weights)
    np.add.at(L, (u, u), weights)
    np.add.at(L, (v, v), weights)
    return L


def log_tree_weight(gamma: GammaVector) -> float:
    """log of sum_T prod_{e in T} lambda_e (weighted matrix-tree theorem)."""
    _check_connected(gamma.n, gamma.edges)
    if gamma.n == 1:
        return 0.0
    lam = gamma.lam()
    L = laplacian(gamma.n, gamma.edges, lam)
    sign, logdet = np.linalg.slogdet(L[:-1, :-1])
    if sign <= 0:
        raise SamplingError("reduced Laplacian is not positive definite")
    return float(logdet + (gamma.n - 1) * gamma.gamma.max())


def tree_marginals(gamma: GammaVector) -> np.ndarray:
    """Pr[e in T] for each edge of ``gamma.edges`` under the lambda-random tree."""
    n = gamma.n
    _check_connected(n, gamma.edges)
    lam = gamma.lam()
    L = laplacian(n, gamma.edges, lam)
    try:
        chol = np.linalg.cholesky(L[:-1, :-1])
    except np.linalg.LinAlgError:
        raise SamplingError("reduced Laplacian is numerically singular") from None
    inv_chol = np.linalg.inv(chol)
    M = np.zeros((n, n))
    M[:-1, :-1] = inv_chol.T @ inv_chol
    u, v = np.array(gamma.edges).T
    reff = M[u, u] + M[v, v] - 2.0 * M[u, v]
    return np.clip(lam * reff, MARGINAL_FLOOR, 1.0)


@dataclass(frozen=True)
class FitReport:
    steps: int
    max_ratio: float
    min_ratio: float


def fit_gamma(z: SymmetricEdgeVector, eps: float = 0.2, max_steps: int = FIT_MAX_STEPS,
              report: list | None = None) -> GammaVector:
    """Weights whose lambda-random tree marginals satisfy q_e <= (1 + eps) z_e.

    Coordinate descent: take the edge with the largest q_e / z_e and rescale its
    weight so its marginal becomes exactly (1 + eps/2) z_e. With all other
    weights fixed, q_e(lam_e) = lam_e B / (lam_e B + A), which inverts in
    closed form.
    """
    if not 0 < eps <= 1:
        raise FitError(f"eps must lie in (0, 1], got {eps}")
    gamma = np.log(z.z)
    gv = GammaVector(z.n, z.edges, gamma)
    for step in range(max_steps + 1):
        q = tree_marginals(gv)
        ratio = q / z.z
        worst = int(np.argmax(ratio))
        if ratio[worst] <= 1 + eps:
            if report is not None:
                report.append(FitReport(step, float(ratio.max()), float(ratio.min())))
            log.debug("fit_gamma: %d steps, max ratio %.4f, min ratio %.4f",
                      step, ratio.max(), ratio.min())
            return gv
        if step == max_steps:
            break
        qe = q[worst]
        if qe >= 1.0 - MARGINAL_FLOOR:
            raise FitError(f"edge {z.edges[worst]} is a bridge (q=1) but z={z.z[worst]:.6g}")
        target = (1 + eps / 2) * min(z.z[worst], 1 - 1e-9)
        target = min(target, 1 - 1e-9)
        gamma = gamma.copy()
        gamma[worst] += math.log(target * (1 - qe)) - math.log(qe * (1 - target))
        gv = GammaVector(z.n, z.edges, gamma)
    raise FitError(f"fit_gamma did not converge in {max_steps} steps; worst edge "
                   f"{z.edges[worst]} has q/z = {ratio[worst]:.6f} (> {1 + eps})")


class TreeSampler:
    """Draws lambda-random spanning trees edge by edge.

    Edges are decided in index order. The probability that the next edge joins
    the tree, given earlier decisions, is its marginal in the graph where
    accepted edges are contracted and rejected ones deleted. Those conditional
    probabilities depend only on (edge index, contraction pattern) and are
    memoised, so repeated draws from the same weights are cheap.
    """

    CACHE_LIMIT = 500_000

    def __init__(self, gamma: GammaVector):
        _check_connected(gamma.n, gamma.edges)
        self.n = gamma.n
        self.edges = gamma.edges
        self.lam = gamma.lam()
        self._eu = np.array([e[0] for e in self.edges], dtype=int)
        self._ev = np.array([e[1] for e in self.edges], dtype=int)
        self._cache: dict = {}

    def _conditional(self, i: int, labels: tuple[int, ...]) -> float:
        key = (i, labels)
        p = self._cache.get(key)
        if p is not None:
            return p
        lab = np.asarray(labels)
        k = int(lab.max()) + 1
        cu, cv = lab[self._eu[i:]], lab[self._ev[i:]]
        keep = cu != cv
        cu, cv, w = cu[keep], cv[keep], self.lam[i:][keep]
        L = np.zeros((k, k))
        np.add.at(L, (cu, cv), -w)
        np.add.at(L, (cv, cu), -w)
        np.add.at(L, (cu, cu), w)
        np.add.at(L, (cv, cv), w)
        a, b = lab[self._eu[i]], lab[self._ev[i]]
        rhs = np.zeros(k)
        rhs[a], rhs[b] = 1.0, -1.0
        try:
            y = np.linalg.solve(L[:-1, :-1], rhs[:-1])
        except np.linalg.LinAlgError:
            raise SamplingError(f"remaining graph disconnected at edge {i}") from None
        p = float(self.lam[i] * (rhs[:-1] @ y))
        if not -1e-9 <= p <= 1 + 1e-9:
            raise SamplingError(f"conditional probability {p} out of range at edge {i}")
        p = 1.0 if p > 1 - 1e-12 else max(p, 0.0)
        if len(self._cache) < self.CACHE_LIMIT:
            self._cache[key] = p
        return p

    def sample(self, rng: np.random.Generator) -> list[Edge]:
        n = self.n
        labels = list(range(n))
        chosen: list[Edge] = []
        for i, (u, v) in enumerate(self.edges):
            if len(chosen) == n - 1:
                break
            if labels[u] == labels[v]:
                continue
            p = self._conditional(i, tuple(labels))
            if p == 1.0 or rng.random() < p:
                chosen.append((u, v))
                gone, keep = max(labels[u], labels[v]), min(labels[u], labels[v])
                labels = [keep if x == gone else (x - 1 if x > gone else x) for x in labels]
        if len(chosen) != n - 1:
            raise SamplingError(f"sampler produced {len(chosen)} edges, expected {n - 1}")
        return chosen


def _tree_cost(edges: Sequence[Edge], all_edges: Sequence[Edge], edge_costs) -> float:
    lookup = dict(zip(all_edges, np.asarray(edge_costs, dtype=float)))
    return float(sum(lookup[e] for e in edges))


def sample_tree(gamma: GammaVector, seed, edge_costs=None,
                sampler: TreeSampler | None = None) -> SpanningTree:
    """One lambda-random tree; deterministic in ``seed``."""
    sampler = sampler or TreeSampler(gamma)
    edges = sampler.sample(np.random.default_rng(seed))
    costs = np.zeros(len(gamma.edges)) if edge_costs is None else edge_costs
    return SpanningTree(tuple(edges), _tree_cost(edges, gamma.edges, costs))


def default_sample_count(n: int) -> int:
    return max(1, math.ceil(2 * math.log(n)))


def sample_best_of(gamma: GammaVector, count: int, edge_costs, seed: int,
                   sampler: TreeSampler | None = None) -> SpanningTree:
    """Cheapest of ``count`` independent trees; sample i uses its own derived seed."""
    if count < 1:
        raise ValueError("count must be at least 1")
    sampler = sampler or TreeSampler(gamma)
    trees = [sample_tree(gamma, derive_seed(seed, "tree", i), edge_costs, sampler)
             for i in range(count)]
    return min(trees, key=lambda t: t.cost)
