"""Randomized thin-tree pipeline for metric ATSP.

1. Solve the Held-Karp LP, symmetrize x* into z*.
2. Fit max-entropy tree weights, draw ceil(2 ln n) trees, keep the cheapest.
3. Orient the tree, solve the min-cost circulation containing it, and shortcut
   an Euler tour of the circulation into a Hamiltonian cycle.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

from .circulation import (build_bounds, orient_tree, solve_min_cost_circulation,
                          to_eulerian_walk)
from .exceptions import CirculationInfeasible, InstanceError
from .heldkarp import solve_held_karp
from .instance import Instance, Tour, shortcut
from .maxent import (TreeSampler, default_sample_count, fit_gamma, sample_best_of,
                     symmetrize)
from .oracle import MAX_EXACT_N
from .thin import beta_target, verify_thinness

log = logging.getLogger(__name__)

MAX_ALPHA_DOUBLINGS = 20


@dataclass
class AsadpourDiagnostics:
    opt_hk: float
    alpha_achieved: float
    alpha_used: float
    thinness_mode: str
    s_achieved: float
    tree_cost: float
    tree_edges: list
    oriented_cost: float
    circulation_cost: float
    capacity_bound: float
    ceiling_used: bool
    tour_cost: float
    samples: int
    fit_steps: int
    fit_max_ratio: float
    fit_min_ratio: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tree_edges"] = [list(e) for e in self.tree_edges]
        return d


def asadpour_solve(inst: Instance, seed: int = 0, eps: float = 0.2,
                   samples: int | None = None) -> tuple[Tour, AsadpourDiagnostics]:
    if not inst.metric and not inst.is_metric():
        raise InstanceError("the thin-tree pipeline needs a metric instance; apply metric_closure")
    n = inst.n
    samples = default_sample_count(n) if samples is None else samples

    x, opt_hk = solve_held_karp(inst)
    z = symmetrize(x, inst)
    fit = []
    gamma = fit_gamma(z, eps, report=fit)
    tree = sample_best_of(gamma, samples, z.edge_cost, seed,
                          sampler=TreeSampler(gamma))

    mode = "exhaustive" if n <= MAX_EXACT_N else "sampled"
    report = verify_thinness(tree, z, opt_hk, mode=mode, seed=seed)
    alpha = report.alpha_achieved if mode == "exhaustive" else max(report.alpha_achieved,
                                                                    beta_target(n, eps))
    oriented = orient_tree(tree, x, inst)
    for _ in range(MAX_ALPHA_DOUBLINGS):
        problem = build_bounds(oriented, x, alpha, inst)
        try:
            circ = solve_min_cost_circulation(problem)
            break
        except CirculationInfeasible:
            if mode == "exhaustive":
                raise
            log.warning("circulation infeasible with alpha=%.4g; doubling", alpha)
            alpha *= 2
    else:
        raise CirculationInfeasible(f"no feasible circulation up to alpha={alpha}")

    walk = to_eulerian_walk(circ, oriented)
    tour = shortcut(walk, inst)
    diag = AsadpourDiagnostics(
        opt_hk=opt_hk,
        alpha_achieved=report.alpha_achieved,
        alpha_used=alpha,
        thinness_mode=mode,
        s_achieved=report.s_achieved,
        tree_cost=tree.cost,
        tree_edges=list(tree.edges),
        oriented_cost=oriented.cost,
        circulation_cost=circ.cost,
        capacity_bound=problem.capacity_bound(),
        ceiling_used=circ.ceiling_used,
        tour_cost=tour.cost,
        samples=samples,
        fit_steps=fit[0].steps,
        fit_max_ratio=fit[0].max_ratio,
        fit_min_ratio=fit[0].min_ratio,
    )
    return tour, diag
