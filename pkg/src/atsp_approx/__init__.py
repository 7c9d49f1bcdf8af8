"""Approximation algorithms for asymmetric TSP and its s-t path variant."""
from .asadpour import AsadpourDiagnostics, asadpour_solve
from .circulation import (Circulation, CirculationProblem, OrientedTree, build_bounds,
                          orient_tree, solve_min_cost_circulation, to_eulerian_walk)
from .exceptions import (ATSPError, CirculationInfeasible, FitError, InstanceError, LPError,
                         MergeBudgetExceeded, SamplingError, TSPLIBError)
from .feige_singh import (CycleCover, PathCollection, algorithm_B, algorithm_C, cycle_cover,
                          merge_ordered_paths, repeated_cycle_cover_atsp, respects_order)
from .heldkarp import FractionalArcVector, separate, solve_held_karp, violated_cuts
from .instance import (Instance, SpanningPath, Tour, Walk, gen_instance, load_instance,
                       metric_closure, parse_tsplib, path_cost, shortcut, tour_cost,
                       write_tsplib)
from .maxent import (GammaVector, SpanningTree, SymmetricEdgeVector, TreeSampler, fit_gamma,
                     sample_best_of, sample_tree, symmetrize, tree_marginals)
from .oracle import enumerate_cuts, enumerate_spanning_trees, exact_atsp, exact_atspp
from .seeding import derive_seed
from .thin import ThinnessReport, beta_target, verify_thinness

__version__ = "0.1.0"
