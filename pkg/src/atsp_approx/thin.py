"""Thinness certificates for sampled spanning trees.

A tree T is (alpha, s)-thin w.r.t. z* if every cut delta(U) carries at most
alpha * z*(delta(U)) tree edges and c(T) <= s * OPT_HK.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ATSPError
from .maxent import SpanningTree, SymmetricEdgeVector
from .oracle import MAX_EXACT_N, cut_masks


class ThinnessDataError(ATSPError):
    pass


class AdvisoryBetaWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ThinnessReport:
    alpha_achieved: float
    s_achieved: float
    mode: str
    cuts_checked: int
    worst_cut: frozenset[int]
    worst_load: int
    worst_z: float

    @property
    def lower_bound_only(self) -> bool:
        return self.mode == "sampled"


def _exhaustive_blocks(n: int, chunk: int):
    masks = cut_masks(n)
    bits = np.arange(n, dtype=np.int64)
    for start in range(0, len(masks), chunk):
        block = masks[start:start + chunk]
        yield ((block[:, None] >> bits[None, :]) & 1).astype(bool)


def _sampled_blocks(n: int, rng: np.random.Generator):
    rows = rng.integers(0, 2, size=(10 * n * n, n)).astype(bool)
    sizes = rows.sum(axis=1)
    rows = rows[(sizes > 0) & (sizes < n)]
    yield np.vstack([np.eye(n, dtype=bool), rows])


def verify_thinness(tree: SpanningTree, z: SymmetricEdgeVector, opt_hk: float,
                    mode: str = "exhaustive", seed: int = 0, chunk: int = 1 << 14) -> ThinnessReport:
    """Measure alpha = max_U |T cap delta(U)| / z*(delta(U)) and s = c(T) / OPT_HK.

    ``exhaustive`` scans all 2^(n-1) - 1 cuts (n <= 18). ``sampled`` scans the
    singletons plus 10 n^2 random subsets and is only a lower bound on alpha.
    """
    n = z.n
    if mode == "exhaustive":
        if n > MAX_EXACT_N:
            raise ValueError(f"exhaustive thinness needs n <= {MAX_EXACT_N}, got {n}")
        blocks = _exhaustive_blocks(n, chunk)
    elif mode == "sampled":
        blocks = _sampled_blocks(n, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    index = {e: i for i, e in enumerate(z.edges)}
    missing = [e for e in tree.edges if e not in index]
    if missing:
        raise ThinnessDataError(f"tree edges {missing} are outside the support of z*")
    zu, zv = np.array(z.edges).T
    tu, tv = np.array(tree.edges, dtype=int).reshape(-1, 2).T

    best = (-1.0, 0, 0.0, None)
    checked = 0
    for inside in blocks:
        checked += len(inside)
        zval = (inside[:, zu] != inside[:, zv]) @ z.z
        load = (inside[:, tu] != inside[:, tv]).sum(axis=1)
        if np.any(zval <= 0):
            row = inside[int(np.argmax(zval <= 0))]
            raise ThinnessDataError(f"z*(delta(U)) = 0 for U = {sorted(np.flatnonzero(row).tolist())}; "
                                    "z* violates the cut lower bound")
        ratio = load / zval
        k = int(np.argmax(ratio))
        if ratio[k] > best[0]:
            best = (float(ratio[k]), int(load[k]), float(zval[k]),
                    frozenset(np.flatnonzero(inside[k]).tolist()))

    alpha, load, zval, worst = best
    if opt_hk > 0:
        s = tree.cost / opt_hk
    else:
        s = 0.0 if tree.cost == 0 else math.inf
    return ThinnessReport(alpha, s, mode, checked, worst, load, zval)


def beta_target(n: int, eps: float = 0.2, log=math.log) -> float:
    """4 log n / log log n. Below n = 5 the formula is outside its hypothesis,
    so the n = 5 value is returned with an AdvisoryBetaWarning.

    ``eps`` is accepted for call-site symmetry with the fitting step; the
    target itself does not depend on it."""
    if n < 5:
        warnings.warn(f"beta_target is advisory for n={n} < 5; using n=5",
                      AdvisoryBetaWarning, stacklevel=2)
        n = 5
    return 4 * log(n) / log(log(n))
