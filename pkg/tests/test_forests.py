import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import A, B, C, D, metrics
from routelp.errors import EmptyTerminalSet, InvalidCover
from routelp.forests import (FractionalCover, RootedForest, _root_map, bridge_montecarlo,
                             check_cover_inequality, double_forest_to_cycles, drop_value,
                             exact_bridge_expectation, exchange_violations, forest_cost,
                             independent_distribution, independent_sampler, min_rooted_forest)
from routelp.instance import WeightedMultigraph, walk_cost
from routelp.oracles import brute_rooted_forest


def brute_c(m, T):
    return brute_rooted_forest(m, T).total_cost


class TestMinRootedForest:
    def test_path4_two_roots(self, path4):
        f = min_rooted_forest(path4, {A, D})
        # {ab, cd} and {ab, bc} tie at cost 2
        assert len(f.edges) == 2
        assert f.total_cost == 2 == brute_c(path4, {A, D})
        assert f.root_of[A] == A and f.root_of[D] == D and f.root_of[B] == A

    def test_all_terminals(self, path4):
        f = min_rooted_forest(path4, range(4))
        assert f.edges == () and f.total_cost == 0

    def test_single_root_is_mst(self, path4):
        assert min_rooted_forest(path4, {A}).total_cost == 3 == brute_c(path4, {A})

    def test_empty_terminals(self, path4):
        with pytest.raises(EmptyTerminalSet):
            min_rooted_forest(path4, set())

    def test_multigraph_keeps_parallel_edges(self):
        g = WeightedMultigraph(3, ((0, 1, 5), (0, 1, 2), (1, 1, 0), (1, 2, 4)))
        f = min_rooted_forest(g, {0})
        assert f.total_cost == 6

    @given(metrics(min_n=2, max_n=6), st.data())
    def test_matches_brute_force(self, m, data):
        T = data.draw(st.sets(st.integers(0, m.n - 1), min_size=1))
        f = min_rooted_forest(m, T)
        assert f.total_cost == brute_c(m, T)
        assert exchange_violations(m, T, f) == []
        assert {f.root_of[t] for t in T} == set(T)
        assert all(f.root_of[v] in T for v in range(m.n))

    def test_exchange_detects_suboptimal(self, path4):
        edges = ((A, C, path4.c(A, C)), (B, D, path4.c(B, D)))
        bad = RootedForest(4, edges, _root_map(4, edges, {A, D}), Fraction(4))
        assert exchange_violations(path4, {A, D}, bad)


class TestDrop:
    def test_path4(self, path4):
        assert drop_value(path4, {A}, {D}) == 1 == brute_c(path4, {A}) - brute_c(path4, {A, D})

    def test_empty(self, path4):
        assert drop_value(path4, {A}, set()) == 0

    def test_everything(self, path4):
        assert drop_value(path4, {A}, {B, C, D}) == forest_cost(path4, {A})

    def test_rejects_terminals(self, path4):
        with pytest.raises(ValueError):
            drop_value(path4, {A}, {A})

    @given(metrics(min_n=2, max_n=7), st.data())
    def test_monotone(self, m, data):
        T = data.draw(st.sets(st.integers(0, m.n - 1), min_size=1))
        rest = [v for v in range(m.n) if v not in T]
        S2 = data.draw(st.sets(st.sampled_from(rest))) if rest else set()
        S1 = data.draw(st.sets(st.sampled_from(sorted(S2)))) if S2 else set()
        assert 0 <= drop_value(m, T, S1) <= drop_value(m, T, S2)
        assert forest_cost(m, set(T) | S2) <= forest_cost(m, T)


class TestCover:
    def test_whole_set(self, path4):
        holds, slack = check_cover_inequality(path4, {A}, FractionalCover(((frozenset({B, C, D}), 1),)))
        assert holds and slack == 0

    def test_singletons(self, path4):
        cover = FractionalCover(tuple((frozenset({v}), 1) for v in (B, C, D)))
        holds, slack = check_cover_inequality(path4, {A}, cover)
        base = brute_c(path4, {A})
        rhs = sum(base - brute_c(path4, {A, v}) for v in (B, C, D))
        assert holds and slack == rhs - base

    def test_no_nonterminals(self, path4):
        assert check_cover_inequality(path4, set(range(4)), FractionalCover(())) == (True, 0)

    def test_invalid(self, path4):
        with pytest.raises(InvalidCover):
            check_cover_inequality(path4, {A}, FractionalCover(((frozenset({B}), 1),)))
        with pytest.raises(InvalidCover):
            check_cover_inequality(path4, {A}, FractionalCover(((frozenset({A, B, C, D}), 1),)))
        with pytest.raises(InvalidCover):
            check_cover_inequality(path4, {A}, FractionalCover(((frozenset({B, C, D}), -1),)))


class TestBridge:
    def test_full_sample(self, path4):
        rep = bridge_montecarlo(path4, {A}, lambda rng: {B, C, D}, 0.0, 50)
        assert rep["empiricalMean"] == 0 and rep["pass"]

    def test_empty_sample(self, path4):
        rep = bridge_montecarlo(path4, {A}, lambda rng: set(), 1.0, 50)
        assert rep["empiricalMean"] == rep["cT"] == 3 and rep["pass"] and rep["slack"] == 0

    def test_path4_independent(self, path4):
        g = math.exp(-1)
        p = 1 - g
        exact = 0.0
        for bits in itertools.product((0, 1), repeat=3):
            S = {v for v, b in zip((B, C, D), bits) if b}
            prob = math.prod(p if b else 1 - p for b in bits)
            exact += prob * float(brute_c(path4, {A} | S))
        assert exact <= g * 3
        rep = bridge_montecarlo(path4, {A}, independent_sampler([B, C, D], p), g, 10**4, seed=11)
        assert rep["pass"]
        assert abs(rep["empiricalMean"] - exact) <= 4 * rep["stddev"] / 100

    def test_exact_expectation_path4(self, path4):
        dist = independent_distribution([B, C, D], {B: H, C: H, D: H})
        E, gamma = exact_bridge_expectation(path4, {A}, dist)
        assert gamma == H
        ref = sum((brute_c(path4, {A} | set(S)) for S in itertools.chain.from_iterable(
            itertools.combinations((B, C, D), r) for r in range(4))), Fraction(0)) / 8
        assert E == ref and E <= gamma * 3

    @given(metrics(min_n=2, max_n=6), st.data())
    @settings(max_examples=40)
    def test_forest_bound_exact(self, m, data):
        T = data.draw(st.sets(st.integers(0, m.n - 1), min_size=1))
        rest = [v for v in range(m.n) if v not in T]
        probs = {v: Fraction(data.draw(st.integers(0, 6)), 6) for v in rest}
        E, gamma = exact_bridge_expectation(m, T, independent_distribution(rest, probs))
        assert E <= gamma * forest_cost(m, T)


H = Fraction(1, 2)


class TestCycles:
    def test_edge(self, path4):
        f = min_rooted_forest(path4, {A, C, D})
        assert double_forest_to_cycles(f) == [(A, [A, B, A])]

    def test_star(self):
        g = WeightedMultigraph(3, ((0, 1, 1), (0, 2, 1), (1, 2, 2)))
        from routelp.instance import metric_closure
        m = metric_closure(g)
        f = min_rooted_forest(m, {0})
        (root, cyc), = double_forest_to_cycles(f)
        assert root == 0 and sorted(cyc[:-1]) == [0, 1, 2]
        assert walk_cost(m, cyc) <= 4

    def test_singletons(self, path4):
        assert double_forest_to_cycles(min_rooted_forest(path4, range(4))) == []

    @given(metrics(min_n=2, max_n=7), st.data())
    def test_cycle_cost(self, m, data):
        T = data.draw(st.sets(st.integers(0, m.n - 1), min_size=1))
        f = min_rooted_forest(m, T)
        comps = f.components()
        for root, cyc in double_forest_to_cycles(f):
            assert cyc[0] == cyc[-1] == root
            assert sorted(cyc[:-1]) == sorted(comps[root])
            comp_cost = sum((c for u, v, c in f.edges if f.root_of[u] == root), Fraction(0))
            assert walk_cost(m, cyc) <= 2 * comp_cost
