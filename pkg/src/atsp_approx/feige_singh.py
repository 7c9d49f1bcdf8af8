"""ATSP path variant (ATSPP) via reduction to ATSP, plus a cycle-cover ATSP solver.

``algorithm_B`` turns an s-t path instance into a tour instance by deleting
arcs into s and out of t and adding a return arc (t, s) of guessed weight d.
The resulting tour splits at each copy of (t, s) into s-t paths with disjoint
interiors. ``algorithm_C`` merges those paths into one spanning path that keeps
each input path's vertex order, k paths at a time.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import ATSPError, InstanceError, MergeBudgetExceeded
from .instance import (Instance, SpanningPath, Tour, Walk, expand_path, path_cost,
                       shortcut, shortest_paths)

log = logging.getLogger(__name__)

DEFAULT_STATE_BUDGET = 10**7

ATSPSolver = Callable[[Instance], Tour]


@dataclass(frozen=True)
class PathCollection:
    s: int
    t: int
    paths: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        paths = tuple(tuple(int(v) for v in p) for p in self.paths)
        object.__setattr__(self, "paths", paths)
        if not paths:
            raise InstanceError("empty path collection")
        seen: set[int] = set()
        for p in paths:
            if len(p) < 2 or p[0] != self.s or p[-1] != self.t:
                raise InstanceError(f"path {p} does not run from {self.s} to {self.t}")
            interior = p[1:-1]
            if len(set(interior)) != len(interior) or seen & set(interior) \
                    or {self.s, self.t} & set(interior):
                raise InstanceError(f"path {p} shares interior vertices with another path")
            seen.update(interior)

    @property
    def r(self) -> int:
        return len(self.paths)

    def vertices(self) -> set[int]:
        return {self.s, self.t}.union(*(p[1:-1] for p in self.paths))


@dataclass(frozen=True)
class CycleCover:
    cycles: tuple[tuple[int, ...], ...]
    weight: float

    def successor(self) -> dict[int, int]:
        return {c[i]: c[(i + 1) % len(c)] for c in self.cycles for i in range(len(c))}


def respects_order(q: Sequence[int], p: Sequence[int]) -> bool:
    """True when q contains every vertex of p and visits them in p's order."""
    pos = {v: i for i, v in enumerate(q)}
    if any(v not in pos for v in p):
        return False
    return all(pos[a] < pos[b] for a, b in zip(p, p[1:]))


def _weights(inst: Instance | np.ndarray) -> np.ndarray:
    return inst.cost if isinstance(inst, Instance) else np.asarray(inst, dtype=float)


def merge_ordered_paths(pc: PathCollection, inst: Instance,
                        budget: int = DEFAULT_STATE_BUDGET) -> SpanningPath:
    """Cheapest s-t path through all vertices of ``pc`` that respects every path's order.

    Dynamic program over (vertices consumed from each path, path of the last
    vertex). Transitions advance one path by one vertex.
    """
    c = _weights(inst)
    s, t = pc.s, pc.t
    inner = [p[1:-1] for p in pc.paths]
    k = len(inner)
    if k == 1:
        order = pc.paths[0]
        return SpanningPath(s, t, order, path_cost_array(c, order))
    lens = [len(p) for p in inner]
    states = math.prod(m + 1 for m in lens) * k
    if states > budget:
        raise MergeBudgetExceeded(f"merge needs {states} DP states, budget is {budget}")

    def last_vertex(state, j):
        return s if j < 0 else inner[j][state[j] - 1]

    # best[state] = {j: (cost, prev_state, prev_j)}; j = -1 means "still at s"
    start = (0,) * k
    best: dict[tuple, dict[int, tuple]] = {start: {-1: (0.0, None, None)}}
    total = sum(lens)
    layer = [start]
    for _ in range(total):
        nxt: dict[tuple, None] = {}
        for state in layer:
            for j, (cost, _, _) in best[state].items():
                u = last_vertex(state, j)
                for i in range(k):
                    if state[i] == lens[i]:
                        continue
                    ns = state[:i] + (state[i] + 1,) + state[i + 1:]
                    val = cost + c[u, inner[i][state[i]]]
                    slot = best.setdefault(ns, {})
                    if i not in slot or val < slot[i][0]:
                        slot[i] = (val, state, j)
                    nxt[ns] = None
        layer = list(nxt)
    end = tuple(lens)
    if total == 0:
        return SpanningPath(s, t, (s, t), float(c[s, t]))
    j_best = min(best[end], key=lambda j: (best[end][j][0] + c[last_vertex(end, j), t], j))
    order = [t]
    state, j = end, j_best
    while j is not None and j >= 0:
        order.append(last_vertex(state, j))
        _, pstate, pj = best[state][j]
        state, j = pstate, pj
    order.append(s)
    order.reverse()
    return SpanningPath(s, t, tuple(order), path_cost_array(c, order))


def path_cost_array(c: np.ndarray, order: Sequence[int]) -> float:
    idx = np.asarray(order)
    return float(c[idx[:-1], idx[1:]].sum())


@dataclass
class MergeLog:
    rounds: int = 0
    sizes: list = field(default_factory=list)


def merge_arity(eps: float, r: int) -> int:
    """k = min(9/eps, r), floored at 2 so every round makes progress."""
    return max(2, min(math.ceil(9 / eps), r))


def algorithm_C(pc: PathCollection, eps: float, inst: Instance,
                budget: int = DEFAULT_STATE_BUDGET, log_to: MergeLog | None = None) -> SpanningPath:
    """Repeatedly replace the first k paths by their optimal order-respecting merge."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = _weights(inst)
    paths = list(pc.paths)
    while len(paths) > 1:
        k = merge_arity(eps, len(paths))
        merged = merge_ordered_paths(PathCollection(pc.s, pc.t, tuple(paths[:k])), c, budget)
        paths = [merged.order] + paths[k:]
        if log_to is not None:
            log_to.rounds += 1
            log_to.sizes.append(k)
    order = paths[0]
    return SpanningPath(pc.s, pc.t, tuple(order), path_cost_array(c, order))


# --- cycle covers -----------------------------------------------------------

def cycle_cover(cost: Instance | np.ndarray, vertices: Sequence[int] | None = None) -> CycleCover:
    """Minimum-weight cycle cover of the complete digraph on ``vertices``
    (assignment problem with the diagonal forbidden)."""
    c = _weights(cost)
    verts = list(range(c.shape[0])) if vertices is None else list(vertices)
    m = len(verts)
    if m < 2:
        raise InstanceError("a cycle cover needs at least 2 vertices")
    sub = c[np.ix_(verts, verts)].astype(float)
    big = (np.abs(sub).max() + 1.0) * (m + 1)
    np.fill_diagonal(sub, big)
    rows, cols = linear_sum_assignment(sub)
    succ = dict(zip(rows.tolist(), cols.tolist()))
    if any(succ[i] == i for i in succ):
        raise ATSPError("assignment used a self-loop")
    cycles, seen = [], set()
    for i in range(m):
        if i in seen:
            continue
        cyc = []
        j = i
        while j not in seen:
            seen.add(j)
            cyc.append(verts[j])
            j = succ[j]
        cycles.append(tuple(cyc))
    cycles = [cyc[cyc.index(min(cyc)):] + cyc[:cyc.index(min(cyc))] for cyc in cycles]
    cycles.sort()
    weight = float(sum(c[a, b] for cyc in cycles for a, b in zip(cyc, cyc[1:] + cyc[:1])))
    return CycleCover(tuple(cycles), weight)


def cycle_cover_rounds(inst: Instance) -> list[CycleCover]:
    """Contract cycle covers until one component remains; each round keeps the
    smallest vertex of every cycle as its representative."""
    verts = list(range(inst.n))
    covers = []
    while len(verts) > 1:
        cover = cycle_cover(inst, verts)
        covers.append(cover)
        verts = sorted(min(cyc) for cyc in cover.cycles)
    return covers


def repeated_cycle_cover_atsp(inst: Instance) -> Tour:
    covers = cycle_cover_rounds(inst)
    counts: dict[tuple[int, int], int] = {}
    for cover in covers:
        for a, b in cover.successor().items():
            counts[(a, b)] = counts.get((a, b), 0) + 1
    walk = _euler_walk(counts, start=0)
    return shortcut(walk, inst)


def _euler_walk(counts: dict[tuple[int, int], int], start: int) -> Walk:
    # local import keeps feige_singh free of the circulation module's types
    from .circulation import Circulation, to_eulerian_walk
    arcs = tuple(sorted(counts))
    flow = np.array([counts[a] for a in arcs], dtype=np.int64)
    return to_eulerian_walk(Circulation(arcs, flow, 0.0), start=start)


# --- ATSPP via ATSP ---------------------------------------------------------

@dataclass
class CandidateRun:
    """One pass of the reduction for a fixed return-arc weight d.

    ``d_guess`` = d / (1 - eps/8) is the largest path optimum consistent with
    d being a good guess; the logged chain is
    w(Q) <= c(S) - r d + (1 + eps/8) r d_guess.
    """
    d: float
    eps: float
    tour_cost: float
    r: int
    paths_weight: float
    path_cost: float
    merge_rounds: int
    order: tuple

    @property
    def d_guess(self) -> float:
        return self.d / (1 - self.eps / 8) if self.eps < 8 else math.inf

    @property
    def chain_bound(self) -> float:
        return self.tour_cost - self.r * self.d + (1 + self.eps / 8) * self.r * self.d_guess

    @property
    def chain_holds(self) -> bool:
        return self.path_cost <= self.chain_bound + 1e-9

    def to_dict(self) -> dict:
        return {"d": self.d, "d_guess": self.d_guess, "inner_tour_cost": self.tour_cost,
                "r": self.r, "paths_weight": self.paths_weight, "path_cost": self.path_cost,
                "merge_rounds": self.merge_rounds, "chain_bound": self.chain_bound,
                "chain_holds": self.chain_holds}


@dataclass
class AlgorithmBResult:
    path: SpanningPath
    best: CandidateRun
    candidates: list
    lower: float
    upper: float


def d_grid(lower: float, upper: float, eps: float) -> list[float]:
    """Geometric grid lower * (1 + eps/8)^i up to ``upper``."""
    if lower <= 0:
        raise ATSPError("d guessing needs a positive lower bound")
    ratio = 1 + eps / 8
    out = []
    d = lower
    while d <= upper * (1 + 1e-12):
        out.append(d)
        d *= ratio
    return out or [lower]


def _split_at_return_arc(walk: list[int], s: int, t: int) -> list[list[int]]:
    """Cut a closed walk (as a vertex list starting and ending at s, entered
    from t) at every t->s step."""
    segments, cur = [], [walk[0]]
    for u, v in zip(walk, walk[1:]):
        if u == t and v == s:
            segments.append(cur)
            cur = [s]
        else:
            cur.append(v)
    if len(cur) > 1:
        raise ATSPError("tour does not end with the return arc")
    return segments


def _reduction_run(inst: Instance, s: int, t: int, d: float, eps: float,
                   inner: ATSPSolver, budget: int) -> CandidateRun:
    n = inst.n
    w1 = inst.cost.astype(float).copy()
    w1[:, s] = np.inf
    w1[t, :] = np.inf
    w1[t, s] = d
    np.fill_diagonal(w1, 0.0)
    w2, nxt = shortest_paths(w1)
    if not np.all(np.isfinite(w2)):
        raise ATSPError("reduced graph is not strongly connected")
    tour = inner(Instance(w2, name=f"{inst.name}-reduced", metric=True))
    # expand into G1 and rotate so the walk starts right after a (t, s) step
    seq = list(tour.order) + [tour.order[0]]
    walk = [seq[0]]
    for a, b in zip(seq, seq[1:]):
        walk.extend(expand_path(nxt, a, b)[1:])
    steps = list(zip(walk, walk[1:]))
    first = next(i for i, (a, b) in enumerate(steps) if a == t and b == s)
    rotated = [s] + [b for a, b in steps[first + 1:] + steps[:first + 1]]
    segments = _split_at_return_arc(rotated, s, t)
    r = len(segments)
    # shortcut to vertex-disjoint s-t paths
    seen = {s, t}
    paths = []
    for seg in segments:
        keep = [s]
        for v in seg[1:-1]:
            if v not in seen:
                seen.add(v)
                keep.append(v)
        paths.append(tuple(keep + [t]))
    if len(seen) != n:
        raise ATSPError("expanded tour does not span every vertex")
    nonempty = [p for p in paths if len(p) > 2] or [paths[0]]
    paths_weight = sum(path_cost(inst, p) for p in paths)
    mlog = MergeLog()
    q = algorithm_C(PathCollection(s, t, tuple(nonempty)), eps, inst, budget, mlog)
    return CandidateRun(d=d, eps=eps, tour_cost=float(tour.cost), r=r,
                        paths_weight=paths_weight, path_cost=q.cost,
                        merge_rounds=mlog.rounds, order=q.order)


def algorithm_B(inst: Instance, s: int, t: int, eps: float = 1.0,
                inner_atsp: ATSPSolver | None = None,
                budget: int = DEFAULT_STATE_BUDGET) -> AlgorithmBResult:
    """Hamiltonian s-t path from an ATSP solver, best over a geometric grid of d."""
    n = inst.n
    if s == t:
        raise InstanceError("path endpoints must differ")
    if not (0 <= s < n and 0 <= t < n):
        raise InstanceError(f"endpoints out of range: s={s}, t={t}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    inner_atsp = inner_atsp or repeated_cycle_cover_atsp
    if n == 2:
        w = float(inst.cost[s, t])
        d = max(w, 1e-12)
        run = CandidateRun(d, eps, w + d, 1, w, w, 0, (s, t))
        return AlgorithmBResult(SpanningPath(s, t, (s, t), w), run, [run], w, w)

    dist, _ = shortest_paths(inst.cost)
    lower = float(dist[s, t])
    others = [v for v in range(n) if v not in (s, t)]
    upper = min(path_cost(inst, [s] + others + [t]), n * float(inst.cost.max()))
    if lower <= 0:
        lower = max(upper * 1e-6, 1e-12)
    candidates = [_reduction_run(inst, s, t, d, eps, inner_atsp, budget)
                  for d in d_grid(lower, upper, eps)]
    best = min(candidates, key=lambda c: (c.path_cost, c.d))
    path = SpanningPath(s, t, best.order, path_cost(inst, best.order))
    return AlgorithmBResult(path, best, candidates, lower, upper)
