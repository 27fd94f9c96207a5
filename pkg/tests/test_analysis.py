import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs
from tolbip.analysis import (
    ProofContext,
    RestPolicy,
    all_graphs,
    balanced_set,
    build_special_bipartition,
    check_decomposition,
    check_optimal_placement,
    compute_pi,
    heavy_margin_statistic,
    heavy_set,
    is_derived,
    is_special,
    run_sweep,
)
from tolbip.errors import DomainError, VerificationFailure
from tolbip.graph import Bipartition, ClassificationParams, DenseGraph, Side, bip_distance_wrt, exact_bip_distance

TRIANGLE = DenseGraph.complete(3)
# n = 3, k = 100, eps = 1/2: margin 1, ratio 3/2
TRI_P = ClassificationParams(Fraction(1, 2), Fraction(100), 3)
TRI_F = Bipartition.full(3, [1, 2])


def test_heavy_set_trivial():
    p = ClassificationParams("0.5", 10, 6)
    assert heavy_set(DenseGraph.empty(6), Bipartition.full(6), p) == frozenset()
    # margin 100 * 0.9 * 30 / 150 = 18 exceeds every degree of C_30
    p = ClassificationParams("0.9", 100, 30)
    assert p.margin == 18
    assert heavy_set(DenseGraph.cycle(30), Bipartition.full(30), p) == frozenset()


def test_heavy_set_star():
    star = DenseGraph.from_edges(6, [(0, v) for v in range(1, 6)])
    p = ClassificationParams(Fraction(1, 4), 100, 6)
    assert p.margin == 1
    # the centre has 5 L neighbours; each leaf has 1 L neighbour and 0 R, which also clears margin 1
    assert heavy_set(star, Bipartition.full(6), p) == frozenset(range(6))
    assert balanced_set(star, Bipartition.full(6), p) == frozenset()


def test_pi_examples():
    assert compute_pi(DenseGraph.complete_bipartite(3, 3), Bipartition.full(6, [3, 4, 5]), (), ClassificationParams("0.5", 1, 6)) == 0
    # vertex 0 is R-heavy (2 R neighbours, 0 L); 1 and 2 are balanced with one same-side neighbour each
    assert heavy_set(TRIANGLE, TRI_F, TRI_P) == {0}
    assert compute_pi(TRIANGLE, TRI_F, (), TRI_P) == 2
    assert compute_pi(TRIANGLE, TRI_F, (1,), TRI_P) == 1


@settings(max_examples=100, deadline=None)
@given(graphs(max_n=7), st.integers(0, 127), st.sampled_from([("0.5", 100), ("0.1", 10), ("0.9", 1)]))
def test_pi_at_most_distance(g, code, ek):
    f = Bipartition.full(g.n, code & ((1 << g.n) - 1))
    p = ClassificationParams(ek[0], ek[1], g.n)
    assert compute_pi(g, f, (), p) <= bip_distance_wrt(g, f)
    h, b = heavy_set(g, f, p), balanced_set(g, f, p)
    assert h | b == set(range(g.n)) and not h & b


def test_context_validation():
    with pytest.raises(DomainError):
        ProofContext(TRIANGLE, Bipartition.full(3), frozenset(), TRI_P, frozenset())  # distance 6, not optimal
    with pytest.raises(DomainError):
        ProofContext.build(TRIANGLE, TRI_P, x_set=(), h_prime={1}, f_opt=TRI_F)  # 1 is balanced
    with pytest.raises(DomainError):
        ProofContext.build(TRIANGLE, TRI_P, x_set=(5,), f_opt=TRI_F)


def test_special_copy_equals_opt():
    ctx = ProofContext.build(TRIANGLE, TRI_P, f_opt=TRI_F)
    assert build_special_bipartition(ctx, RestPolicy.COPY_F) == TRI_F
    empty_heavy = ProofContext.build(TRIANGLE, TRI_P, h_prime=(), f_opt=TRI_F)
    assert build_special_bipartition(empty_heavy, "CopyF") == TRI_F


def test_special_policies_comply():
    g = DenseGraph.cycle(5).with_edge(0, 2)
    ctx = ProofContext.build(g, ClassificationParams("0.5", 100, 5), x_set=(1,))
    for policy in RestPolicy:
        spl = build_special_bipartition(ctx, policy, seed=3)
        assert is_special(ctx, spl)
        assert spl.side(1) is ctx.f_opt.side(1)
    assert build_special_bipartition(ctx, RestPolicy.ARBITRARY, seed=3) == build_special_bipartition(ctx, RestPolicy.ARBITRARY, seed=3)


def _exhaustive_worst(ctx, free):
    base = build_special_bipartition(ctx, RestPolicy.COPY_F)
    worst = 0
    for bits in itertools.product((0, 1), repeat=len(free)):
        right = set(base.right) - set(free) | {v for v, b in zip(free, bits) if b}
        worst = max(worst, bip_distance_wrt(ctx.graph, Bipartition.full(ctx.graph.n, right)))
    return worst


@pytest.mark.parametrize("seed", range(20))
def test_adversarial_greedy_rule(seed):
    rng = np.random.default_rng(seed)
    n = 6
    upper = np.triu(rng.random((n, n)) < 0.5, 1)
    g = DenseGraph.from_matrix(upper | upper.T)
    ctx = ProofContext.build(g, ClassificationParams("0.5", 100, n), x_set=(0,))
    spl = build_special_bipartition(ctx, RestPolicy.ADVERSARIAL_WORST)
    forced = set(ctx.x_set) | set(ctx.h_prime)
    free = [v for v in range(n) if v not in forced]
    placed = set(forced)
    for v in free:
        same = sum(1 for u in placed if g.has_edge(u, v) and spl.side(u) is spl.side(v))
        other = sum(1 for u in placed if g.has_edge(u, v) and spl.side(u) is not spl.side(v))
        # R only on a strict majority of placed neighbours there; ties go to L
        assert same > other or (same == other and spl.side(v) is Side.L)
        placed.add(v)
    assert bip_distance_wrt(g, spl) <= _exhaustive_worst(ctx, free)


def test_decomposition_bipartite_all_zero():
    g = DenseGraph.complete_bipartite(3, 3)
    ctx = ProofContext.build(g, ClassificationParams("0.5", 100, 6), x_set=(0, 4))
    rep = check_decomposition(ctx, build_special_bipartition(ctx))
    assert (rep.d_spl, rep.d_a, rep.d_b, rep.d_c, rep.d_cross, rep.pi) == (0, 0, 0, 0, 0, 0)


def test_decomposition_triangle_by_hand():
    ctx = ProofContext.build(TRIANGLE, TRI_P, f_opt=TRI_F)
    rep = check_decomposition(ctx, build_special_bipartition(ctx))
    assert (rep.d_spl, rep.d_a, rep.d_b, rep.d_c, rep.d_cross) == (2, 0, 0, 2, 0)
    assert rep.pi == 2 and rep.d_opt == 2
    # T1 = 2*(1+1) + k eps n^2/150 = 4 + 3; T2 = (2 + 1/2) * 2
    assert rep.t1 == 7 and rep.t2 == 5
    assert (rep.s1, rep.s2) == (4, 4)
    assert rep.failures == []


def test_three_term_bound_counterexample():
    ctx = ProofContext.build(TRIANGLE, TRI_P, x_set=(1,), h_prime={0}, f_opt=TRI_F)
    spl = build_special_bipartition(ctx)
    rep = check_decomposition(ctx, spl, strict=False)
    # edge 1-2 is monochromatic; its copy from 1 (in X) to 2 (outside) is in none of the three terms
    assert (rep.d_spl, rep.d_a, rep.d_b, rep.d_c, rep.d_cross) == (2, 0, 0, 1, 1)
    assert rep.failures == ["three_term_bound"]
    assert rep.identity
    with pytest.raises(VerificationFailure) as info:
        check_decomposition(ctx, spl)
    assert info.value.report == rep


def test_decomposition_rejects_non_special():
    ctx = ProofContext.build(TRIANGLE, TRI_P, x_set=(1,), f_opt=TRI_F)
    with pytest.raises(DomainError):
        check_decomposition(ctx, Bipartition.full(3, [0]))


@settings(max_examples=80, deadline=None)
@given(graphs(min_n=2, max_n=7), st.data())
def test_decomposition_properties(g, data):
    eps, k = data.draw(st.sampled_from([("0.5", 100), ("0.3", 50), ("0.1", 10), ("0.9", 100)]))
    p = ClassificationParams(eps, k, g.n)
    d, f = exact_bip_distance(g)
    heavy = sorted(heavy_set(g, f, p))
    h_prime = data.draw(st.sets(st.sampled_from(heavy)) if heavy else st.just(set()))
    x_set = data.draw(st.sets(st.integers(0, g.n - 1), max_size=3))
    ctx = ProofContext(g, f, frozenset(x_set), p, frozenset(h_prime), d_opt=d)
    policy = data.draw(st.sampled_from(list(RestPolicy)))
    spl = build_special_bipartition(ctx, policy, seed=1)
    rep = check_decomposition(ctx, spl, strict=False)
    assert rep.identity
    assert rep.inner_bound
    assert rep.balanced_bound
    assert rep.s1 <= rep.t1 and rep.s2 <= rep.t2
    assert rep.pi <= rep.d_opt


def test_optimal_placement_exhaustive():
    for n in range(1, 6):
        for g in all_graphs(n):
            for eps in ("0.1", "0.5", "0.9"):
                assert check_optimal_placement(g, ClassificationParams(eps, 100, n))


def test_optimal_placement_random():
    rng = np.random.default_rng(0)
    for i in range(500):
        n = int(rng.integers(2, 8))
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.2, 0.9), 1)
        g = DenseGraph.from_matrix(upper | upper.T)
        margin = int(rng.integers(1, 4))
        eps = Fraction(150 * margin, 100 * 8)  # n = 8 scale keeps eps below 1
        assert check_optimal_placement(g, ClassificationParams(eps, 100, n))


def test_optimal_placement_trivial():
    edge = DenseGraph.from_edges(2, [(0, 1)])
    assert check_optimal_placement(edge, ClassificationParams(Fraction(3, 4), 100, 2))
    assert check_optimal_placement(DenseGraph.complete_bipartite(2, 3), ClassificationParams("0.5", 100, 5))


def test_heavy_margin_full_and_empty():
    star = DenseGraph.from_edges(6, [(0, v) for v in range(1, 6)])
    p = ClassificationParams(Fraction(1, 4), 100, 6)
    f = Bipartition.full(6)
    full = heavy_margin_statistic(star, f, range(6), p)
    assert {h.vertex: h.margin for h in full} == {0: 5, 1: 1, 2: 1, 3: 1, 4: 1, 5: 1}
    assert all(h.margin >= p.margin >= h.threshold and h.meets for h in full)
    empty = heavy_margin_statistic(star, f, (), p)
    assert all(h.margin == 0 and h.threshold == 0 for h in empty)


def test_heavy_margin_orientation():
    # vertex 0 has three R neighbours: R-heavy, margin counted towards R
    g = DenseGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    f = Bipartition.full(4, [1, 2, 3])
    stats = heavy_margin_statistic(g, f, (1, 2), ClassificationParams(Fraction(1, 2), 100, 4))
    zero = [h for h in stats if h.vertex == 0][0]
    assert zero.heavy_side is Side.R and zero.margin == 2


def test_is_derived():
    f = Bipartition.full(4, [1])
    assert is_derived(Bipartition.full(4, [1, 3]), f, (0, 1), DenseGraph.empty(4))
    assert not is_derived(Bipartition.full(4, [0, 1]), f, (0, 1), DenseGraph.empty(4))
    assert not is_derived(Bipartition.from_sides({0: "L", 1: "R"}), f, (0, 1), DenseGraph.empty(4))


def test_small_sweep():
    s = run_sweep(max_exhaustive_n=4, random_count=30, seed=2)
    assert s.graphs == 1 + 2 + 8 + 64 + 30
    for name, count in s.failures.items():
        if name != "three_term_bound":
            assert count == 0, name
    assert s.failures["three_term_bound"] > 0
    assert "three_term_bound" in s.table()
