"""Command-line entry point: solve, atspp, bench, verify.

Exit codes: 0 success, 1 solver failure or failed verification, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .asadpour import asadpour_solve
from .exceptions import ATSPError, InstanceError
from .feige_singh import algorithm_B, cycle_cover_rounds, repeated_cycle_cover_atsp
from .heldkarp import solve_held_karp
from .instance import (GENERATORS, Instance, gen_instance, load_instance, make_path,
                       make_tour, metric_closure, path_cost, tour_cost)
from .maxent import fit_gamma, symmetrize, tree_marginals
from .oracle import MAX_EXACT_N, exact_atsp, exact_atspp
from .seeding import derive_seed
from .thin import verify_thinness

log = logging.getLogger("atsp_approx")

SCHEMA = "atsp-approx/report"
SCHEMA_VERSION = 1
REPORT_FIELDS = {"schema", "version", "kind", "instance", "algorithm", "seed", "params",
                 "order", "cost", "opt_hk", "exact_cost", "ratio_exact", "diagnostics",
                 "wall_time"}
BENCH_COLUMNS = ["size", "trial", "algo", "instance", "cost", "opt_hk", "ratio_hk",
                 "exact_cost", "ratio_exact", "alpha", "s", "time_s"]
EXACT_COMPARE_MAX_N = 12


class UsageError(Exception):
    pass


# --- solver registry --------------------------------------------------------

def _run_asadpour(inst, seed, params):
    tour, diag = asadpour_solve(inst, seed=seed, eps=params["eps"], samples=params["samples"])
    return tour, diag.to_dict()


def _run_cyclecover(inst, seed, params):
    covers = cycle_cover_rounds(inst)
    tour = repeated_cycle_cover_atsp(inst)
    return tour, {"rounds": len(covers), "cover_weights": [c.weight for c in covers],
                  "cover_weight_total": sum(c.weight for c in covers)}


def _run_exact(inst, seed, params):
    return exact_atsp(inst), {}


SOLVERS: dict[str, Callable] = {
    "asadpour": _run_asadpour,
    "cyclecover": _run_cyclecover,
    "exact": _run_exact,
}


def inner_solver(name: str, seed: int, eps: float, samples=None):
    if name == "cyclecover":
        return repeated_cycle_cover_atsp
    if name == "asadpour":
        return lambda inst: asadpour_solve(inst, seed=seed, eps=eps, samples=samples)[0]
    raise UsageError(f"unknown inner solver {name!r}")


# --- instance / report helpers ----------------------------------------------

def parse_gen(spec: str) -> Instance:
    parts = spec.split(",")
    if len(parts) != 3:
        raise UsageError(f"--gen expects n,model,seed; got {spec!r}")
    try:
        n, seed = int(parts[0]), int(parts[2])
    except ValueError:
        raise UsageError(f"--gen expects integer n and seed; got {spec!r}") from None
    if parts[1] not in GENERATORS:
        raise UsageError(f"unknown model {parts[1]!r}; choose from {', '.join(GENERATORS)}")
    try:
        return gen_instance(n, parts[1], seed)
    except InstanceError as exc:
        raise UsageError(str(exc)) from None


def resolve_instance(args) -> Instance:
    if args.input and args.gen:
        raise UsageError("use either --input or --gen, not both")
    if args.gen:
        return parse_gen(args.gen)
    if not args.input:
        raise UsageError("one of --input or --gen is required")
    try:
        inst = load_instance(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    except InstanceError as exc:
        raise UsageError(f"{args.input}: {exc}") from None
    if not inst.metric:
        closed = metric_closure(inst)
        if not np.array_equal(closed.cost, inst.cost):
            log.warning("input is not metric; solving its metric closure")
        inst = closed
    return inst


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(kind, inst, algorithm, seed, params, order, cost, opt_hk, exact_cost,
                diagnostics, wall_time) -> dict:
    ratio = None
    if exact_cost is not None:
        ratio = cost / exact_cost if exact_cost > 0 else (1.0 if cost == 0 else None)
    return _to_jsonable({
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "kind": kind,
        "instance": {"name": inst.name, "digest": inst.digest(), "n": inst.n},
        "algorithm": algorithm,
        "seed": seed,
        "params": params,
        "order": list(order),
        "cost": cost,
        "opt_hk": opt_hk,
        "exact_cost": exact_cost,
        "ratio_exact": ratio,
        "diagnostics": diagnostics,
        "wall_time": wall_time,
    })


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def read_report(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"report is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("report must be a JSON object")
    unknown = set(data) - REPORT_FIELDS
    missing = REPORT_FIELDS - set(data)
    if unknown:
        raise UsageError(f"unknown report fields: {sorted(unknown)}")
    if missing:
        raise UsageError(f"missing report fields: {sorted(missing)}")
    if data["schema"] != SCHEMA or data["version"] != SCHEMA_VERSION:
        raise UsageError(f"unsupported report schema {data['schema']} v{data['version']}")
    return data


# --- commands ---------------------------------------------------------------

def cmd_solve(args) -> dict:
    inst = resolve_instance(args)
    params = {"eps": args.eps, "samples": args.samples}
    t0 = time.perf_counter()
    tour, diag = SOLVERS[args.algo](inst, args.seed, params)
    wall = time.perf_counter() - t0
    _, opt_hk = solve_held_karp(inst)
    exact = None
    if args.algo == "exact":
        exact = tour.cost
    elif args.exact_compare:
        if inst.n > EXACT_COMPARE_MAX_N:
            raise UsageError(f"--exact-compare supports n <= {EXACT_COMPARE_MAX_N}")
        exact = exact_atsp(inst).cost
    return make_report("tour", inst, args.algo, args.seed, params, tour.order, tour.cost,
                       opt_hk, exact, diag, wall)


def cmd_atspp(args) -> dict:
    inst = resolve_instance(args)
    if args.s == args.t:
        raise UsageError("--s and --t must differ")
    if not (0 <= args.s < inst.n and 0 <= args.t < inst.n):
        raise UsageError(f"--s/--t must lie in 0..{inst.n - 1}")
    if args.eps <= 0:
        raise UsageError("--eps must be positive")
    params = {"eps": args.eps, "samples": args.samples, "inner": args.inner}
    inner = inner_solver(args.inner, args.seed, 0.2, args.samples)
    t0 = time.perf_counter()
    res = algorithm_B(inst, args.s, args.t, args.eps, inner)
    wall = time.perf_counter() - t0
    diag = {
        "d_chosen": res.best.d,
        "r": res.best.r,
        "chain": res.best.to_dict(),
        "d_lower": res.lower,
        "d_upper": res.upper,
        "candidates": [c.to_dict() for c in res.candidates],
    }
    exact = None
    if args.exact_compare:
        if inst.n > EXACT_COMPARE_MAX_N:
            raise UsageError(f"--exact-compare supports n <= {EXACT_COMPARE_MAX_N}")
        exact = exact_atspp(inst, args.s, args.t).cost
        diag["alpha_obs"] = res.best.tour_cost / (exact + res.best.d)
    return make_report("path", inst, "atspp-" + args.inner, args.seed, params, res.path.order,
                       res.path.cost, None, exact, diag, wall)


def _bench_row(size, trial, algo, model, seed, params, exact_max):
    inst = gen_instance(size, model, derive_seed(seed, f"bench-instance-{size}", trial) % 2**32)
    run_seed = derive_seed(seed, "bench-run", trial) % 2**32
    t0 = time.perf_counter()
    tour, diag = SOLVERS[algo](inst, run_seed, params)
    elapsed = time.perf_counter() - t0
    _, opt_hk = solve_held_karp(inst)
    exact = exact_atsp(inst).cost if size <= exact_max else None
    return {
        "size": size, "trial": trial, "algo": algo, "instance": inst.digest(),
        "cost": tour.cost, "opt_hk": opt_hk,
        "ratio_hk": tour.cost / opt_hk if opt_hk > 0 else None,
        "exact_cost": exact,
        "ratio_exact": (tour.cost / exact) if exact else None,
        "alpha": diag.get("alpha_achieved"), "s": diag.get("s_achieved"),
        "time_s": elapsed,
    }


def bench_rows(sizes, trials, algos, seed, model="uniform-metric", params=None,
               jobs=1, exact_max=EXACT_COMPARE_MAX_N) -> list[dict]:
    params = params or {"eps": 0.2, "samples": None}
    tasks = [(size, trial, algo) for size in sizes for trial in range(trials) for algo in algos]
    run = lambda task: _bench_row(*task, model, seed, params, exact_max)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    return sorted(rows, key=lambda r: (r["size"], r["trial"], r["algo"]))


def format_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row[k] is None else (repr(row[k]) if isinstance(row[k], float)
                                                    else row[k])) for k in BENCH_COLUMNS})
    return buf.getvalue()


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def cmd_bench(args) -> str:
    sizes = _int_list(args.sizes)
    if not sizes or min(sizes) < 2:
        raise UsageError("--sizes must list integers >= 2")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    algos = [a for a in args.algos.split(",") if a]
    bad = [a for a in algos if a not in SOLVERS]
    if bad or not algos:
        raise UsageError(f"unknown algorithms {bad}; choose from {sorted(SOLVERS)}")
    if "exact" in algos and max(sizes) > MAX_EXACT_N:
        raise UsageError(f"exact solver supports n <= {MAX_EXACT_N}")
    rows = bench_rows(sizes, args.trials, algos, args.seed, args.model,
                      {"eps": args.eps, "samples": args.samples}, args.jobs)
    return format_csv(rows)


def verify_report(report: dict, inst: Instance) -> list[tuple[str, bool, str]]:
    """Replay the checkable invariants of a stored report against its instance."""
    if report["instance"]["digest"] != inst.digest():
        raise UsageError(f"instance digest mismatch: report has {report['instance']['digest']}, "
                         f"input is {inst.digest()}")
    checks: list[tuple[str, bool, str]] = []

    def check(name, ok, detail):
        checks.append((name, bool(ok), detail))

    order = report["order"]
    cost = report["cost"]
    kind = report["kind"]
    try:
        if kind == "tour":
            make_tour(inst, order)
            recomputed = tour_cost(inst, order)
        else:
            make_path(inst, order)
            recomputed = path_cost(inst, order)
        check("order-valid", True, f"{kind} over {inst.n} vertices")
    except InstanceError as exc:
        check("order-valid", False, str(exc))
        return checks
    check("cost-reevaluation", abs(recomputed - cost) <= 1e-6 * max(1.0, abs(recomputed)),
          f"reported {cost!r}, recomputed {recomputed!r}")

    if report["exact_cost"] is not None:
        ex = report["exact_cost"]
        check("cost-above-exact", cost >= ex - 1e-9, f"cost {cost:.6f} vs exact {ex:.6f}")
        if inst.n <= EXACT_COMPARE_MAX_N:
            fresh = (exact_atsp(inst).cost if kind == "tour"
                     else exact_atspp(inst, order[0], order[-1]).cost)
            check("exact-reevaluation", abs(fresh - ex) <= 1e-6 * max(1.0, ex),
                  f"reported {ex:.6f}, recomputed {fresh:.6f}")

    diag = report["diagnostics"]
    if report["algorithm"] == "asadpour":
        x, opt_hk = solve_held_karp(inst)
        check("opt-hk", abs(opt_hk - report["opt_hk"]) <= 1e-6 * max(1.0, opt_hk),
              f"reported {report['opt_hk']:.6f}, recomputed {opt_hk:.6f}")
        z = symmetrize(x, inst)
        eps = report["params"]["eps"]
        gamma = fit_gamma(z, eps)
        q = tree_marginals(gamma)
        worst = float((q / z.z).max())
        check("marginals", worst <= 1 + eps + 1e-12, f"max q/z = {worst:.6f} <= {1 + eps}")
        from .maxent import SpanningTree
        tree_edges = [tuple(e) for e in diag["tree_edges"]]
        lookup = dict(zip(z.edges, z.edge_cost))
        tree = SpanningTree(tuple(tree_edges), float(sum(lookup[e] for e in tree_edges)))
        if inst.n <= MAX_EXACT_N:
            rep = verify_thinness(tree, z, opt_hk)
            check("thinness-alpha", abs(rep.alpha_achieved - diag["alpha_achieved"]) <= 1e-9,
                  f"exhaustive alpha {rep.alpha_achieved:.6f} over {rep.cuts_checked} cuts, "
                  f"reported {diag['alpha_achieved']:.6f}")
            check("thinness-s", abs(rep.s_achieved - diag["s_achieved"]) <= 1e-9,
                  f"s = {rep.s_achieved:.6f}")
        a, s = diag["alpha_used"], diag["s_achieved"]
        bound = diag["oriented_cost"] + 2 * a * opt_hk
        check("circulation-bound", diag["circulation_cost"] <= bound + 1e-6,
              f"c(f) = {diag['circulation_cost']:.6f} <= c(T_D) + 2 alpha OPT_HK = {bound:.6f}")
        check("shortcut", cost <= diag["circulation_cost"] + 1e-6,
              f"tour {cost:.6f} <= c(f) {diag['circulation_cost']:.6f}")
        check("tour-bound-chain", cost <= (2 * a + s) * opt_hk + 1e-6,
              f"tour {cost:.6f} <= (2 alpha + s) OPT_HK = {(2 * a + s) * opt_hk:.6f}")
    elif kind == "path":
        ch = diag["chain"]
        check("path-cost-matches-chain", abs(ch["path_cost"] - cost) <= 1e-6 * max(1.0, cost),
              f"chain path cost {ch['path_cost']:.6f}")
        bound = ch["inner_tour_cost"] - ch["r"] * ch["d"] + \
            (1 + report["params"]["eps"] / 8) * ch["r"] * ch["d_guess"]
        check("chain-bound-recomputed", abs(bound - ch["chain_bound"]) <= 1e-6 * max(1.0, bound),
              f"w(Q) <= c(S) - r d + (1 + eps/8) r d_guess = {bound:.6f}")
        check("chain-holds", cost <= bound + 1e-9, f"w(Q) = {cost:.6f}")
    return checks


def cmd_verify(args) -> tuple[list, bool]:
    try:
        with open(args.report) as fh:
            report = read_report(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {args.report}: {exc.strerror}") from None
    inst = resolve_instance(args)
    checks = verify_report(report, inst)
    return checks, all(ok for _, ok, _ in checks)


# --- argument parsing -------------------------------------------------------

def _add_instance_args(p):
    p.add_argument("--input", help="TSPLIB ATSP file (FULL_MATRIX)")
    p.add_argument("--gen", help="generate an instance: n,model,seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atsp-approx", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an ATSP instance")
    _add_instance_args(p)
    p.add_argument("--algo", choices=sorted(SOLVERS), default="asadpour")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--exact-compare", action="store_true")
    p.add_argument("--json", action="store_true", help="print the full JSON report")

    p = sub.add_parser("atspp", help="solve an s-t Hamiltonian path instance")
    _add_instance_args(p)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--inner", choices=["cyclecover", "asadpour"], default="cyclecover")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--exact-compare", action="store_true")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="benchmark table as CSV")
    p.add_argument("--sizes", required=True)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--algos", default="asadpour,cyclecover")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=GENERATORS, default="uniform-metric")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("verify", help="replay invariants of a stored report")
    p.add_argument("--report", required=True)
    _add_instance_args(p)
    return parser


def _summary(report: dict) -> str:
    lines = [f"{report['algorithm']} on {report['instance']['name']} "
             f"(n={report['instance']['n']}): cost {report['cost']:.6f}"]
    if report["opt_hk"] is not None:
        lines.append(f"  Held-Karp bound {report['opt_hk']:.6f}")
    if report["exact_cost"] is not None:
        lines.append(f"  exact optimum {report['exact_cost']:.6f} (ratio {report['ratio_exact']:.4f})")
    lines.append("  order " + " ".join(map(str, report["order"])))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("solve", "atspp"):
            report = cmd_solve(args) if args.command == "solve" else cmd_atspp(args)
            print(dump_report(report) if args.json else _summary(report))
            return 0
        if args.command == "bench":
            text = cmd_bench(args)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        checks, ok = cmd_verify(args)
        for name, passed, detail in checks:
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        return 0 if ok else 1
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"atsp-approx: error: {exc}", file=sys.stderr)
        return 2
    except ATSPError as exc:
        print(f"atsp-approx: solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
