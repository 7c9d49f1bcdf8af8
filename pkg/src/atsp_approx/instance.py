"""Instances, tours, paths and walks on complete directed graphs.

Costs are float64 matrices; comparisons use an absolute tolerance of 1e-9.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InstanceError, TSPLIBError

TOL = 1e-9

Arc = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Instance:
    cost: np.ndarray
    name: str = "instance"
    metric: bool = False

    def __post_init__(self):
        c = np.array(self.cost, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InstanceError(f"cost matrix must be square, got shape {c.shape}")
        if c.shape[0] < 2:
            raise InstanceError("an instance needs at least 2 vertices")
        if not np.all(np.isfinite(c)):
            raise InstanceError("cost matrix contains non-finite entries")
        if np.any(c < 0):
            i, j = np.argwhere(c < 0)[0]
            raise InstanceError(f"negative cost c({i},{j}) = {c[i, j]}")
        np.fill_diagonal(c, 0.0)
        c.setflags(write=False)
        object.__setattr__(self, "cost", c)

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.name == other.name and self.metric == other.metric
                and np.array_equal(self.cost, other.cost))

    __hash__ = None

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        h.update(np.ascontiguousarray(self.cost, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def is_metric(self, tol: float = TOL) -> bool:
        c = self.cost
        for j in range(self.n):
            if np.any(c > c[:, j, None] + c[None, j, :] + tol):
                return False
        return True


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: float

    def arcs(self) -> list[Arc]:
        k = len(self.order)
        return [(self.order[i], self.order[(i + 1) % k]) for i in range(k)]


@dataclass(frozen=True)
class SpanningPath:
    s: int
    t: int
    order: tuple[int, ...]
    cost: float
    simple: bool = True


@dataclass(frozen=True)
class Walk:
    arcs: tuple[Arc, ...]

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(u), int(v)) for u, v in self.arcs))
        for (_, a), (b, _) in zip(self.arcs, self.arcs[1:]):
            if a != b:
                raise InstanceError(f"walk is broken between {a} and {b}")

    @classmethod
    def from_vertices(cls, vertices: Sequence[int]) -> "Walk":
        return cls(tuple(zip(vertices[:-1], vertices[1:])))

    @property
    def closed(self) -> bool:
        return bool(self.arcs) and self.arcs[0][0] == self.arcs[-1][1]

    def vertices(self) -> list[int]:
        if not self.arcs:
            return []
        return [self.arcs[0][0]] + [v for _, v in self.arcs]

    def cost(self, inst: Instance) -> float:
        return float(sum(inst.cost[u, v] for u, v in self.arcs))


def tour_cost(inst: Instance, order: Sequence[int]) -> float:
    idx = np.asarray(order)
    return float(inst.cost[idx, np.roll(idx, -1)].sum())


def path_cost(inst: Instance, order: Sequence[int]) -> float:
    idx = np.asarray(order)
    return float(inst.cost[idx[:-1], idx[1:]].sum())


def make_tour(inst: Instance, order: Iterable[int]) -> Tour:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(inst.n)):
        raise InstanceError(f"tour is not a permutation of 0..{inst.n - 1}: {order}")
    return Tour(order, tour_cost(inst, order))


def make_path(inst: Instance, order: Iterable[int]) -> SpanningPath:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(inst.n)):
        raise InstanceError(f"path does not visit every vertex exactly once: {order}")
    return SpanningPath(order[0], order[-1], order, path_cost(inst, order))


def metric_closure(inst: Instance) -> Instance:
    """All-pairs shortest path costs (Floyd-Warshall); flags the result metric.

    A matrix that already satisfies the triangle inequality (within TOL) is
    returned unchanged, so the closure is idempotent bit for bit.
    """
    if inst.is_metric():
        return Instance(inst.cost, name=inst.name, metric=True)
    c = inst.cost.copy()
    for k in range(inst.n):
        np.minimum(c, c[:, k, None] + c[None, k, :], out=c)
    return Instance(c, name=inst.name, metric=True)


def shortest_paths(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Floyd-Warshall allowing +inf entries. Returns (dist, next_hop)."""
    d = np.array(cost, dtype=np.float64)
    n = d.shape[0]
    nxt = np.tile(np.arange(n), (n, 1))
    nxt[~np.isfinite(d)] = -1
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(nxt, np.arange(n))
    for k in range(n):
        via = d[:, k, None] + d[None, k, :]
        better = via < d
        d = np.where(better, via, d)
        nxt = np.where(better, np.broadcast_to(nxt[:, k, None], (n, n)), nxt)
    return d, nxt


def expand_path(nxt: np.ndarray, u: int, v: int) -> list[int]:
    """Vertex sequence of the shortest u->v path recorded in ``nxt``."""
    if nxt[u, v] < 0:
        raise InstanceError(f"no path from {u} to {v}")
    out = [u]
    while u != v:
        u = int(nxt[u, v])
        out.append(u)
    return out


GENERATORS = ("euclidean-perturbed", "uniform-metric")


def gen_instance(n: int, model: str = "euclidean-perturbed", seed: int = 0) -> Instance:
    """Random asymmetric metric instance, deterministic in (n, model, seed)."""
    if n < 2:
        raise InstanceError(f"n must be at least 2, got {n}")
    rng = np.random.default_rng(seed)
    if model == "euclidean-perturbed":
        pts = rng.uniform(0.0, 100.0, size=(n, 2))
        base = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        cost = base * rng.uniform(1.0, 1.5, size=(n, n))
    elif model == "uniform-metric":
        cost = rng.uniform(1.0, 100.0, size=(n, n))
    else:
        raise InstanceError(f"unknown generator model {model!r}; expected one of {GENERATORS}")
    np.fill_diagonal(cost, 0.0)
    return metric_closure(Instance(cost, name=f"{model}-n{n}-s{seed}"))


def shortcut(walk: Walk, inst: Instance) -> Tour:
    """Keep the first visit of every vertex in walk order."""
    if not walk.closed:
        raise InstanceError("walk is not closed")
    seen = dict.fromkeys(walk.vertices())
    if len(seen) != inst.n or set(seen) != set(range(inst.n)):
        raise InstanceError("walk does not span all vertices")
    return make_tour(inst, seen)


# --- TSPLIB (ATSP, EXPLICIT, FULL_MATRIX) ---------------------------------

_REQUIRED = {"TYPE": "ATSP", "EDGE_WEIGHT_TYPE": "EXPLICIT", "EDGE_WEIGHT_FORMAT": "FULL_MATRIX"}
_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:?\s*(.*?)\s*$")


def parse_tsplib(text: str) -> Instance:
    header: dict[str, str] = {}
    lines = text.splitlines()
    body: list[str] = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if m is None:
            raise TSPLIBError(f"line {i + 1}: cannot parse {line.strip()!r}")
        key, value = m.group(1), m.group(2)
        if key == "EDGE_WEIGHT_SECTION":
            body = lines[i + 1:]
            break
        if key == "EOF":
            break
        header[key] = value

    for key, want in _REQUIRED.items():
        got = header.get(key)
        if got is None:
            raise TSPLIBError(f"missing {key} (expected {want})")
        if got.upper() != want:
            raise TSPLIBError(f"unsupported {key}: {got} (only {want} is supported)")
    if "DIMENSION" not in header:
        raise TSPLIBError("missing DIMENSION")
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise TSPLIBError(f"bad DIMENSION: {header['DIMENSION']!r}") from None

    tokens: list[str] = []
    for line in body:
        if line.strip().upper().startswith("EOF"):
            break
        tokens.extend(line.split())
    if len(tokens) != n * n:
        raise TSPLIBError(f"EDGE_WEIGHT_SECTION has {len(tokens)} values, expected {n * n}")
    try:
        cost = np.array([float(t) for t in tokens]).reshape(n, n)
    except ValueError as exc:
        raise TSPLIBError(f"non-numeric edge weight: {exc}") from None
    metric = header.get("COMMENT", "").strip().lower() == "metric"
    return Instance(cost, name=header.get("NAME", "instance"), metric=metric)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 2**53 else repr(float(x))


def write_tsplib(inst: Instance) -> str:
    out = [
        f"NAME: {inst.name}",
        "TYPE: ATSP",
        f"COMMENT: {'metric' if inst.metric else 'general'}",
        f"DIMENSION: {inst.n}",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
    ]
    out.extend(" ".join(_fmt(x) for x in row) for row in inst.cost)
    out.append("EOF")
    return "\n".join(out) + "\n"


def load_instance(path) -> Instance:
    with open(path) as fh:
        return parse_tsplib(fh.read())
