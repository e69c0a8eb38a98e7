from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import A, B, C, D, metrics
from routelp.errors import (AnchorNotOnAnyPath, ComponentNotAnchored, Disconnected,
                            OddCardinality, OddDegreePresent, OddSetTooLarge)
from routelp.instance import OtspInstance, WeightedMultigraph, verify_otsp_solution, walk_cost
from routelp.oracles import brute_min_ojoin
from routelp.parity import (assemble_otsp_tour, eulerian_circuit, graft_cycles_into_paths,
                            min_weight_perfect_matching, multigraph_components, odd_degree_nodes)


def enum_matchings(O):
    if not O:
        yield []
        return
    u, rest = O[0], O[1:]
    for j, v in enumerate(rest):
        for m in enum_matchings(rest[:j] + rest[j + 1:]):
            yield [(u, v)] + m


class TestOddDegree:
    def test_path(self):
        assert odd_degree_nodes(WeightedMultigraph(4, ((0, 1, 1), (1, 2, 1), (2, 3, 1)))) == [0, 3]

    def test_cycle(self):
        assert odd_degree_nodes(WeightedMultigraph(3, ((0, 1, 1), (1, 2, 1), (2, 0, 1)))) == []

    def test_loop_counts_twice(self):
        assert odd_degree_nodes(WeightedMultigraph(2, ((0, 0, 0), (0, 1, 1)))) == [0, 1]


class TestMatching:
    def test_path4(self, path4):
        pairs, cost = min_weight_perfect_matching(path4, [A, B, C, D])
        assert cost == 2 == brute_min_ojoin(path4, [A, B, C, D])
        assert sorted(pairs) == [(A, B), (C, D)]

    def test_empty(self, path4):
        assert min_weight_perfect_matching(path4, []) == ([], 0)

    def test_odd(self, path4):
        with pytest.raises(OddCardinality):
            min_weight_perfect_matching(path4, [A, B, C])

    def test_cap(self, path4):
        with pytest.raises(OddSetTooLarge):
            min_weight_perfect_matching(path4, [A, B, C, D], cap=2)
        pairs, cost = min_weight_perfect_matching(path4, [A, B, C, D], cap=2, heuristic=True)
        assert sorted(v for p in pairs for v in p) == [A, B, C, D] and cost >= 2

    @given(metrics(min_n=2, max_n=7), st.data())
    def test_matches_enumeration_and_join(self, m, data):
        O = sorted(data.draw(st.sets(st.integers(0, m.n - 1))))
        if len(O) % 2:
            O = O[:-1]
        pairs, cost = min_weight_perfect_matching(m, O)
        ref = min((sum((m.c(u, v) for u, v in mt), Fraction(0)) for mt in enum_matchings(O)))
        assert cost == ref == brute_min_ojoin(m, O)
        assert sorted(v for p in pairs for v in p) == O


class TestEuler:
    def test_triangle(self):
        g = WeightedMultigraph(3, ((0, 1, 1), (1, 2, 1), (2, 0, 1)))
        assert eulerian_circuit(g) == [0, 1, 2, 0]

    def test_double_edge(self):
        g = WeightedMultigraph(2, ((0, 1, 1), (0, 1, 1)))
        assert eulerian_circuit(g, start=1) == [1, 0, 1]

    def test_figure_eight(self):
        edges = ((0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 1), (3, 4, 1), (4, 0, 1))
        walk = eulerian_circuit(WeightedMultigraph(5, edges))
        assert walk[0] == walk[-1] == 0 and len(walk) == 7
        used = sorted(tuple(sorted(p)) for p in zip(walk, walk[1:]))
        assert used == sorted(tuple(sorted(e[:2])) for e in edges)

    def test_errors(self):
        with pytest.raises(OddDegreePresent):
            eulerian_circuit(WeightedMultigraph(2, ((0, 1, 1),)))
        with pytest.raises(Disconnected):
            eulerian_circuit(WeightedMultigraph(4, ((0, 1, 1), (0, 1, 1), (2, 3, 1), (2, 3, 1))))

    def test_components(self):
        g = WeightedMultigraph(5, ((3, 4, 1), (0, 1, 1), (1, 0, 1)))
        assert multigraph_components(g) == [([0, 1], [1, 2]), ([3, 4], [0])]


class TestGraft:
    def test_path4(self, path4):
        out = graft_cycles_into_paths([[A, D]], [(A, [A, B, A])])
        assert out == [[A, B, D]]
        assert walk_cost(path4, out[0]) == 3

    def test_first_path_wins(self):
        out = graft_cycles_into_paths([[0, 1], [2, 1]], [(1, [1, 3, 1])])
        assert out == [[0, 3, 1], [2, 1]]  # endpoint stays last

    def test_missing_anchor(self):
        with pytest.raises(AnchorNotOnAnyPath):
            graft_cycles_into_paths([[0, 1]], [(2, [2, 3, 2])])


class TestAssemble:
    def test_tri3(self, tri3):
        inst = OtspInstance(tri3, (0, 1))
        paths = [[0, 1], [1, 0]]
        extra = [(0, 2, 1)]
        join = [(0, 2, 1)]
        sol = assemble_otsp_tour(paths, extra, join, tri3)
        assert verify_otsp_solution(inst, sol).ok
        assert sol.total_cost == 3

    def test_no_extras(self, path4):
        inst = OtspInstance(path4, (A, B, C, D))
        paths = [[A, B], [B, C], [C, D], [D, A]]
        sol = assemble_otsp_tour(paths, [], [], path4)
        assert verify_otsp_solution(inst, sol).ok
        assert sol.tour == [A, B, C, D] and sol.total_cost == 6

    def test_unanchored(self, path4):
        with pytest.raises(ComponentNotAnchored):
            assemble_otsp_tour([[A, B], [B, A]], [(C, D, 1)], [(C, D, 1)], path4)

    def test_odd(self, path4):
        with pytest.raises(OddDegreePresent):
            assemble_otsp_tour([[A, B], [B, A]], [(A, C, 2)], [], path4)

    @given(metrics(min_n=3, max_n=7), st.data())
    @settings(max_examples=40)
    def test_random_spanning_extras(self, m, data):
        n = m.n
        perm = data.draw(st.permutations(range(n)))
        k = data.draw(st.integers(1, n - 1))
        order = perm[:k]
        paths = [[order[i], order[(i + 1) % k]] for i in range(k)] if k > 1 else [[order[0], order[0]]]
        # connect every free node to some earlier node, then fix parity
        extra = []
        for idx in range(k, n):
            u = perm[data.draw(st.integers(0, idx - 1))]
            extra.append((u, perm[idx], m.c(u, perm[idx])))
        odd = odd_degree_nodes(WeightedMultigraph(n, tuple(extra)))
        pairs, _ = min_weight_perfect_matching(m, odd)
        join = [(u, v, m.c(u, v)) for u, v in pairs]
        sol = assemble_otsp_tour(paths, extra, join, m)
        assert verify_otsp_solution(OtspInstance(m, tuple(order)), sol).ok
        bound = sum((walk_cost(m, p) for p in paths), Fraction(0))
        bound += sum((c for *_, c in extra + join), Fraction(0))
        assert sol.total_cost <= bound
