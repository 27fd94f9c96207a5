import logging
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tolbip.tester as tester_mod
from tolbip.errors import ConfigurationError, DomainError
from tolbip.generators import gen_complete, gen_complete_bipartite
from tolbip.graph import DenseGraph, Side
from tolbip.oracle import AdjacencyOracle
from tolbip.tester import (
    Decision,
    SampledSets,
    TesterParams,
    TieBreak,
    compute_zeta,
    enumerate_bipartitions,
    extend_label,
    gather,
    predicted_query_count,
    run_tester,
    run_tester_with_sets,
    sample_pairs,
)


# -- parameters ---------------------------------------------------------------


def test_derived_sizes():
    t, x, z, clamped = TesterParams("0.1", 1).resolved()
    # log2(10) = 3.3219...: t = 4, x = ceil(33.2) -> clamped to 16, z = ceil(332.19)
    assert (t, x, z, clamped) == (4, 16, 333, True)
    assert TesterParams("0.05", 1).resolved() == (5, 16, 1729, True)
    # k eps = 1/5, log2 5 = 2.3219...: x = ceil(1.25 * 2.32) = 3, z = ceil(3.125 * 2.32) = 8
    assert TesterParams("0.1", 2).resolved() == (3, 3, 8, False)


def test_overrides_and_thresholds():
    p = TesterParams("0.05", 1, t=4, x_size=12, z_size=2000)
    assert p.resolved() == (4, 12, 2000, False)
    assert p.zeta_threshold == Fraction(41, 400)
    assert p.extension_margin(12) == Fraction(12, 20 * 225000)


@pytest.mark.parametrize(
    "kwargs,exc",
    [
        ({"epsilon": "0"}, DomainError),
        ({"epsilon": "1"}, DomainError),
        ({"epsilon": "0.1", "k": "101"}, DomainError),
        ({"epsilon": "0.1", "c2": 0}, DomainError),
        ({"epsilon": "0.1", "x_size": 17}, ConfigurationError),
        ({"epsilon": "0.1", "x_size": 5, "x_size_cap": 4}, ConfigurationError),
        ({"epsilon": "0.1", "t": 0}, DomainError),
    ],
)
def test_param_validation(kwargs, exc):
    with pytest.raises(exc):
        TesterParams(**kwargs)


def test_n_below_x_size():
    with pytest.raises(ConfigurationError):
        run_tester(AdjacencyOracle(DenseGraph.complete(4)), TesterParams("0.1", x_size=5, t=1, z_size=3))


def test_small_sample_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="tolbip.tester"):
        run_tester(AdjacencyOracle(DenseGraph.complete(10)), TesterParams("0.1", x_size=3, t=1, z_size=3))
    assert "n/10" in caplog.text


# -- extension rule and zeta --------------------------------------------------


def test_extend_label_examples():
    assert extend_label(0, 5, "0.1") is Side.L
    assert extend_label(5, 0, "0.1") is Side.R
    assert extend_label(3, 3, "0.1", TieBreak.ALWAYS_L) is Side.L
    assert extend_label(3, 3, "0.1", TieBreak.ALWAYS_R) is Side.R
    # inside the margin is a tie
    assert extend_label(3, 4, 2, TieBreak.ALWAYS_R) is Side.R
    with pytest.raises(ConfigurationError):
        extend_label(1, 1, 0, TieBreak.COIN)
    rng = np.random.default_rng(0)
    assert extend_label(1, 1, 0, TieBreak.COIN, rng) in (Side.L, Side.R)


@given(st.integers(0, 50), st.integers(0, 50), st.fractions(min_value=0, max_value=5))
def test_extend_label_swap_equivariance(a, b, theta):
    left = extend_label(a, b, theta, TieBreak.ALWAYS_L)
    swapped = extend_label(b, a, theta, TieBreak.ALWAYS_L)
    if abs(a - b) > theta:
        assert swapped is left.other()
    else:
        assert left is swapped is Side.L


def test_compute_zeta_examples():
    pairs = [(0, 1), (1, 2), (2, 3), (3, 0)]
    labels = {0: Side.L, 1: Side.L, 2: Side.R, 3: Side.R}
    assert compute_zeta(pairs, [True, False, False, False], labels) == Fraction(1, 2)
    assert compute_zeta(pairs, [False] * 4, labels) == 0
    assert compute_zeta([(0, 1), (2, 3)], [True, True], labels) == 2
    with pytest.raises(DomainError):
        compute_zeta([], [], labels)
    with pytest.raises(DomainError):
        compute_zeta([(0, 9)], [True], labels)


def test_enumeration_is_swap_classes():
    sides = enumerate_bipartitions(4)
    assert sides.shape == (8, 4)
    assert (sides[:, 0] == 0).all()
    rows = {tuple(r) for r in sides}
    assert len(rows) == 8
    assert all(tuple(1 - v for v in r) not in rows for r in rows)
    # bit b of j puts X[b+1] on R
    assert tuple(sides[5]) == (0, 1, 0, 1)
    assert enumerate_bipartitions(1).shape == (1, 1)


def test_sample_pairs_no_loops():
    pairs = sample_pairs(np.random.default_rng(3), 3, 2000)
    assert len(pairs) == 2000
    assert all(a != b for a, b in pairs)
    assert len(set(pairs)) == 6


# -- query plan ---------------------------------------------------------------


def test_predicted_count_disjoint():
    sets = SampledSets(((0, 1, 2), (3, 4, 5)), ((6, 7), (8, 9)))
    assert predicted_query_count(sets) == 26
    o = AdjacencyOracle(DenseGraph.complete(10))
    gather(o, sets.x_sets, sets.z_pairs)
    assert o.ledger().total_queries == 26


def test_predicted_count_pair_inside_c():
    sets = SampledSets(((0, 1, 2),), ((0, 1),))
    # block: {0,1}, {0,2}, {1,2}; the Z pair reuses {0,1}
    assert predicted_query_count(sets) == 3
    o = AdjacencyOracle(DenseGraph.complete(3))
    realized = gather(o, sets.x_sets, sets.z_pairs)
    assert o.ledger().total_queries == 3
    assert realized.z_edge_bits == (True,)


def test_predicted_count_empty_z():
    assert predicted_query_count(SampledSets(((0, 1),), ())) == 0


def test_repeated_z_pair_asked_once():
    sets = SampledSets(((0,),), ((4, 5), (5, 4), (4, 5)))
    o = AdjacencyOracle(DenseGraph.complete(6))
    gather(o, sets.x_sets, sets.z_pairs)
    assert o.ledger().total_queries == predicted_query_count(sets) == 2 + 1


@settings(max_examples=60, deadline=None)
@given(
    st.integers(4, 14),
    st.integers(1, 3),
    st.integers(1, 4),
    st.integers(1, 25),
    st.integers(0, 2**32 - 1),
    st.floats(0, 1),
)
def test_ledger_exact(n, t, x, z, seed, density):
    x = min(x, n)
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, 1)
    g = DenseGraph.from_matrix(upper | upper.T)
    o = AdjacencyOracle(g)
    verdict, sets = run_tester_with_sets(o, TesterParams("0.3", 1, t=t, x_size=x, z_size=z, seed=seed))
    assert verdict.ledger.total_queries == predicted_query_count(sets)
    assert verdict.ledger.distinct_pairs == verdict.ledger.total_queries
    assert verdict.ledger.sampled_vertices == t * x + 2 * z


# -- evaluation against a direct implementation -------------------------------


def naive_evaluate(sets: SampledSets, p: TesterParams, x_size: int):
    theta = p.extension_margin(x_size)
    ans = sets.answers
    best = None
    for i, xs in enumerate(sets.x_sets):
        for j in range(1 << (len(xs) - 1)):
            f = {xs[0]: Side.L}
            for b, v in enumerate(xs[1:]):
                f[v] = Side.R if (j >> b) & 1 else Side.L
            labels = {}
            for z in sets.z_vertices:
                if z in f:
                    labels[z] = f[z]
                    continue
                nl = sum(1 for v in xs if f[v] is Side.L and ans[(min(v, z), max(v, z))])
                nr = sum(1 for v in xs if f[v] is Side.R and ans[(min(v, z), max(v, z))])
                labels[z] = extend_label(nl, nr, theta, p.tie_break)
            zeta = compute_zeta(sets.z_pairs, sets.z_edge_bits, labels)
            best = zeta if best is None else min(best, zeta)
            if zeta <= p.zeta_threshold:
                return (i, j, zeta), best
    return None, best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.sampled_from([TieBreak.ALWAYS_L, TieBreak.ALWAYS_R]), st.sampled_from(["0.05", "0.2", "0.4"]))
def test_vectorised_matches_naive(seed, density, tie, eps):
    n = 24
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, 1)
    g = DenseGraph.from_matrix(upper | upper.T)
    p = TesterParams(eps, 1, t=3, x_size=5, z_size=30, tie_break=tie, seed=seed)
    verdict, sets = run_tester_with_sets(AdjacencyOracle(g), p)
    witness, best = naive_evaluate(sets, p, 5)
    if witness is None:
        assert verdict.decision is Decision.REJECT
        assert verdict.min_zeta == best
    else:
        assert verdict.decision is Decision.ACCEPT
        assert (verdict.witness.i, verdict.witness.j, verdict.witness.zeta) == witness


# -- end-to-end behaviour ------------------------------------------------------


def test_verdict_invariants():
    g = gen_complete_bipartite(60).graph
    for seed in range(5):
        v = run_tester(AdjacencyOracle(g), TesterParams("0.1", 1, t=2, x_size=6, z_size=80, seed=seed))
        assert v.accepted == (v.witness is not None and v.witness.zeta <= v.zeta_threshold)
        assert 0 <= v.zeta <= 2
        assert (v.zeta * 80 / 2).denominator == 1


def test_deterministic():
    g = gen_complete(40).graph
    p = TesterParams("0.1", 1, t=2, x_size=6, z_size=50, seed=11, tie_break=TieBreak.COIN)
    assert run_tester(AdjacencyOracle(g), p) == run_tester(AdjacencyOracle(g), p)


def test_no_query_after_gather(monkeypatch):
    g = gen_complete(30).graph
    o = AdjacencyOracle(g)
    seen = {}
    original = tester_mod.evaluate

    def spy(*args, **kwargs):
        seen["before"] = o.ledger()
        return original(*args, **kwargs)

    monkeypatch.setattr(tester_mod, "evaluate", spy)
    v = run_tester(o, TesterParams("0.1", 1, t=2, x_size=4, z_size=30))
    assert seen["before"] == o.ledger() == v.ledger


def test_single_edge_accepts():
    g = DenseGraph.from_edges(2, [(0, 1)])
    for x in (1, 2):
        v = run_tester(AdjacencyOracle(g), TesterParams("0.1", 1, t=1, x_size=x, z_size=5))
        assert v.accepted and v.zeta == 0


def test_complete_bipartite_accepts():
    g = gen_complete_bipartite(200).graph
    accepts = sum(
        run_tester(AdjacencyOracle(g), TesterParams("0.1", 1, t=3, x_size=10, z_size=500, seed=s)).accepted
        for s in range(100)
    )
    assert accepts >= 95


def test_complete_graph_rejects():
    g = gen_complete(200).graph
    rejects = sum(
        not run_tester(AdjacencyOracle(g), TesterParams("0.05", 1, t=3, x_size=10, z_size=500, seed=s)).accepted
        for s in range(100)
    )
    assert rejects >= 95


def test_clamped_flag_propagates():
    v = run_tester(AdjacencyOracle(gen_complete(200).graph), TesterParams("0.3", 1, t=1, z_size=20, x_size_cap=4))
    assert v.clamped and v.x_size == 4
    assert math.isclose(float(v.zeta_threshold), 2.05 * 0.3)
