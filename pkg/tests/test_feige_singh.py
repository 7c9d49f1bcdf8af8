import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atsp_approx import (Instance, InstanceError, MergeBudgetExceeded, PathCollection,
                         algorithm_B, algorithm_C, cycle_cover, exact_atsp, exact_atspp,
                         gen_instance, merge_ordered_paths, repeated_cycle_cover_atsp,
                         respects_order)
from atsp_approx.feige_singh import (MergeLog, _split_at_return_arc, cycle_cover_rounds,
                                     d_grid, merge_arity, path_cost_array)

from conftest import random_metric


def interleavings(seqs):
    if all(not s for s in seqs):
        yield ()
        return
    for i, s in enumerate(seqs):
        if s:
            rest = list(seqs)
            rest[i] = s[1:]
            for tail in interleavings(rest):
                yield (s[0],) + tail


def brute_merge(pc, c):
    inner = [p[1:-1] for p in pc.paths]
    return min(path_cost_array(c, (pc.s,) + mid + (pc.t,)) for mid in interleavings(inner))


def random_collection(n, k, rng, s=0, t=None):
    t = n - 1 if t is None else t
    rest = [v for v in range(n) if v not in (s, t)]
    rng.shuffle(rest)
    cuts = sorted(rng.choice(np.arange(1, len(rest)), size=min(k - 1, len(rest) - 1),
                             replace=False).tolist()) if len(rest) > 1 and k > 1 else []
    parts = np.split(np.array(rest, dtype=int), cuts)
    return PathCollection(s, t, tuple((s,) + tuple(int(v) for v in p) + (t,) for p in parts))


def test_respects_order():
    assert respects_order([0, 3, 1, 4, 2], [0, 1, 2])
    assert not respects_order([0, 2, 1], [0, 1, 2])
    assert not respects_order([0, 1], [0, 1, 2])


def test_path_collection_validation():
    with pytest.raises(InstanceError):
        PathCollection(0, 3, ((0, 1, 3), (0, 1, 2, 3)))
    with pytest.raises(InstanceError):
        PathCollection(0, 3, ((0, 1, 2),))
    pc = PathCollection(0, 5, ((0, 1, 2, 5), (0, 3, 4, 5)))
    assert pc.r == 2 and pc.vertices() == set(range(6))


@pytest.mark.parametrize("lengths", [ls for k in (1, 2, 3)
                                     for ls in itertools.product(range(0, 5), repeat=k)
                                     if sum(ls) <= 8])
def test_merge_equals_bruteforce_small(lengths):
    # every composition with k <= 3 and interior lengths <= 4 (paths of <= 6 vertices)
    n = sum(lengths) + 2
    rng = np.random.default_rng(sum((i + 1) * 7 ** j for j, i in enumerate(lengths)))
    c = rng.uniform(0, 10, size=(n, n))
    verts = list(range(1, n - 1))
    paths, at = [], 0
    for m in lengths:
        paths.append((0,) + tuple(verts[at:at + m]) + (n - 1,))
        at += m
    pc = PathCollection(0, n - 1, tuple(paths))
    merged = merge_ordered_paths(pc, c)
    assert merged.cost == pytest.approx(brute_merge(pc, c), abs=1e-9)
    for p in pc.paths:
        assert respects_order(merged.order, p)
    assert sorted(merged.order) == list(range(n))


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 11), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_merge_respects_order_property(n, k, seed):
    rng = np.random.default_rng(seed)
    inst = random_metric(n, rng)
    pc = random_collection(n, k, rng)
    merged = merge_ordered_paths(pc, inst)
    assert all(respects_order(merged.order, p) for p in pc.paths)
    assert merged.cost == pytest.approx(path_cost_array(inst.cost, merged.order))


@pytest.mark.parametrize("case", range(20))
def test_merge_weight_bound(case):
    rng = np.random.default_rng(1000 + case)
    n = int(rng.integers(5, 10))
    k = int(rng.integers(2, 4))
    inst = random_metric(n, rng)
    pc = random_collection(n, k, rng)
    merged = merge_ordered_paths(pc, inst)
    opt = exact_atspp(inst, pc.s, pc.t).cost
    total = sum(path_cost_array(inst.cost, p) for p in pc.paths)
    assert merged.cost <= total + pc.r * opt + 1e-9


def test_merge_budget():
    pc = PathCollection(0, 9, ((0, 1, 2, 3, 4, 9), (0, 5, 6, 7, 8, 9)))
    with pytest.raises(MergeBudgetExceeded):
        merge_ordered_paths(pc, np.ones((10, 10)), budget=10)


def test_merge_arity():
    assert merge_arity(1.0, 20) == 9
    assert merge_arity(0.1, 5) == 5
    assert merge_arity(100.0, 7) == 2


def test_algorithm_c_logs_rounds():
    rng = np.random.default_rng(3)
    inst = random_metric(10, rng)
    pc = PathCollection(0, 9, tuple((0, v, 9) for v in range(1, 9)))
    log = MergeLog()
    out = algorithm_C(pc, 4.0, inst, log_to=log)   # arity ceil(9/4) = 3
    assert log.sizes == [3, 3, 3, 2]
    assert sorted(out.order) == list(range(10))
    assert all(respects_order(out.order, p) for p in pc.paths)


def brute_cover(c):
    n = len(c)
    best = np.inf
    for perm in itertools.permutations(range(n)):
        if all(perm[i] != i for i in range(n)):
            best = min(best, sum(c[i, perm[i]] for i in range(n)))
    return best


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_cycle_cover_optimal(n, seed):
    c = np.random.default_rng(seed).uniform(0, 10, size=(n, n))
    cover = cycle_cover(c)
    assert cover.weight == pytest.approx(brute_cover(c))
    succ = cover.successor()
    assert sorted(succ) == list(range(n)) and sorted(succ.values()) == list(range(n))
    assert all(len(cyc) >= 2 and cyc[0] == min(cyc) for cyc in cover.cycles)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_repeated_cycle_cover(n, seed):
    inst = random_metric(n, np.random.default_rng(seed))
    tour = repeated_cycle_cover_atsp(inst)
    assert sorted(tour.order) == list(range(n))
    covers = cycle_cover_rounds(inst)
    assert len(covers) <= max(1, int(np.floor(np.log2(n))))
    # each round costs at most OPT, and shortcutting never hurts
    opt = exact_atsp(inst).cost
    assert all(cv.weight <= opt + 1e-9 for cv in covers)
    assert tour.cost <= sum(cv.weight for cv in covers) + 1e-9


def test_d_grid():
    g = d_grid(10.0, 20.0, 1.0)
    assert g[0] == 10.0 and g[-1] <= 20.0 and g[-1] * 1.125 > 20.0
    assert np.allclose(np.diff(np.log(g)), np.log(1.125))


def test_split_at_return_arc():
    assert _split_at_return_arc([0, 1, 5, 0, 2, 5, 0], 0, 5) == [[0, 1, 5], [0, 2, 5]]


def test_algorithm_b_frozen_instance():
    inst = gen_instance(8, "uniform-metric", 3)
    res = algorithm_B(inst, 0, 7)
    opt = 173.69497496288596  # frozen exhaustive minimum
    assert res.path.order[0] == 0 and res.path.order[-1] == 7
    assert sorted(res.path.order) == list(range(8))
    assert res.path.cost >= opt - 1e-9
    assert res.lower <= opt <= res.upper + 1e-9
    assert res.best.path_cost == pytest.approx(res.path.cost)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.data())
def test_algorithm_b_valid_paths(n, seed, data):
    inst = random_metric(n, np.random.default_rng(seed))
    s = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(0, n - 1).filter(lambda v: v != s))
    res = algorithm_B(inst, s, t, eps=1.0)
    p = res.path
    assert p.order[0] == s and p.order[-1] == t and sorted(p.order) == list(range(n))
    assert p.cost >= exact_atspp(inst, s, t).cost - 1e-9
    for cand in res.candidates:
        assert cand.path_cost <= cand.paths_weight + 1e-9 or cand.r > 1


def test_algorithm_b_errors():
    inst = gen_instance(5, "uniform-metric", 0)
    with pytest.raises(InstanceError):
        algorithm_B(inst, 2, 2)
    with pytest.raises(InstanceError):
        algorithm_B(inst, 0, 9)


def test_algorithm_b_zero_costs():
    inst = Instance(np.zeros((5, 5)), metric=True)
    res = algorithm_B(inst, 0, 4)
    assert res.path.cost == 0


def test_merge_single_path_unchanged():
    pc = PathCollection(0, 3, ((0, 2, 1, 3),))
    assert merge_ordered_paths(pc, np.ones((4, 4))).order == (0, 2, 1, 3)
    assert algorithm_C(pc, 1.0, np.ones((4, 4))).order == (0, 2, 1, 3)


def test_merge_two_singletons_picks_cheaper():
    c = np.full((4, 4), 5.0)
    c[0, 2] = c[2, 1] = c[1, 3] = 1.0  # s=0, a=1, b=2, t=3: order s,b,a,t is cheap
    pc = PathCollection(0, 3, ((0, 1, 3), (0, 2, 3)))
    out = merge_ordered_paths(pc, c)
    assert out.order == (0, 2, 1, 3) and out.cost == 3


@pytest.mark.parametrize("seed", range(10))
def test_merge_three_paths_nine_vertices(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0, 10, size=(9, 9))
    pc = random_collection(9, 3, rng)
    assert merge_ordered_paths(pc, c).cost == pytest.approx(brute_merge(pc, c))


def test_algorithm_c_arity_two_stays_valid():
    # eps = 9 gives 9/eps = 1; the arity is raised to 2 so every round makes progress.
    # Each round removes k - 1 = 1 path, so four paths need three rounds.
    rng = np.random.default_rng(4)
    inst = random_metric(10, rng)
    pc = random_collection(10, 4, rng)
    log = MergeLog()
    out = algorithm_C(pc, 9.0, inst, log_to=log)
    assert log.sizes == [2, 2, 2]
    assert all(respects_order(out.order, p) for p in pc.paths)
    assert out.cost >= merge_ordered_paths(pc, inst).cost - 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_algorithm_c_three_paths_one_round(seed):
    rng = np.random.default_rng(50 + seed)
    inst = random_metric(9, rng)
    pc = random_collection(9, 3, rng)
    log = MergeLog()
    out = algorithm_C(pc, 3.0, inst, log_to=log)
    assert log.rounds == 1
    opt = exact_atspp(inst, 0, 8).cost
    total = sum(path_cost_array(inst.cost, p) for p in pc.paths)
    assert out.cost <= total + (1 + 3.0 / 8) * 3 * opt + 1e-9


def test_cycle_cover_examples():
    k3 = cycle_cover(np.ones((3, 3)))
    assert k3.cycles == ((0, 1, 2),) or k3.cycles == ((0, 2, 1),)
    assert k3.weight == 3
    c = np.full((4, 4), 10.0)
    c[0, 1] = c[1, 0] = c[2, 3] = c[3, 2] = 1.0
    two = cycle_cover(c)
    assert two.cycles == ((0, 1), (2, 3)) and two.weight == 4


@pytest.mark.parametrize("seed", range(20))
def test_cycle_cover_below_optimum(seed):
    inst = gen_instance(7, "uniform-metric", seed)
    assert cycle_cover(inst).weight <= exact_atsp(inst).cost + 1e-9


def test_repeated_cycle_cover_small():
    assert repeated_cycle_cover_atsp(Instance(np.ones((3, 3)))).cost == 3
    two = repeated_cycle_cover_atsp(Instance(np.array([[0, 3.0], [5, 0]])))
    assert two.cost == 8


def test_repeated_cycle_cover_ratio_table():
    ratios = []
    for seed in range(30):
        inst = gen_instance(10, "uniform-metric", seed)
        tour = repeated_cycle_cover_atsp(inst)
        assert sorted(tour.order) == list(range(10))
        ratios.append(tour.cost / exact_atsp(inst).cost)
    assert min(ratios) >= 1 - 1e-9
    assert max(ratios) <= 1 + np.log(10)


def test_algorithm_b_small():
    two = algorithm_B(Instance(np.array([[0, 3.0], [5, 0]])), 0, 1)
    assert two.path.order == (0, 1) and two.path.cost == 3
    k3 = algorithm_B(Instance(np.ones((3, 3))), 0, 2)
    assert k3.path.cost == 2 == exact_atspp(Instance(np.ones((3, 3))), 0, 2).cost
