import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import A, B, C, D, ktspp_instances, otsp_instances
from routelp.errors import BudgetExceeded
from routelp.instance import (KtsppInstance, OtspInstance, generate_instance, verify_ktspp_solution,
                              verify_otsp_solution, walk_cost)
from routelp.oracles import (OracleBudget, brute_ktspp, brute_min_ojoin, brute_otsp,
                             brute_rooted_forest)


def enum_otsp(inst):
    """Cheapest feasible tour, checking every permutation with the verifier."""
    m = inst.metric
    best = None
    first = inst.order[0]
    rest = [v for v in range(m.n) if v != first]
    for perm in itertools.permutations(rest):
        tour = [first, *perm]
        c = walk_cost(m, tour, closed=True)
        if best is not None and c >= best:
            continue
        from routelp.instance import SolutionTour
        if verify_otsp_solution(inst, SolutionTour(tour, c)).ok:
            best = c
    return best


def enum_ktspp(inst):
    """Every ordering of the free nodes cut into k consecutive chunks."""
    m = inst.metric
    T = {v for p in inst.pairs for v in p}
    free = [v for v in range(m.n) if v not in T]
    k = inst.k
    best = None
    for perm in itertools.permutations(free):
        for cuts in itertools.combinations_with_replacement(range(len(free) + 1), k - 1):
            bounds = (0, *cuts, len(free))
            total = Fraction(0)
            for i, (s, t) in enumerate(inst.pairs):
                total += walk_cost(m, [s, *perm[bounds[i]:bounds[i + 1]], t])
            best = total if best is None else min(best, total)
    return best


def enum_forest(m, T):
    """Sum over non-terminals of nothing clever: try every parent function."""
    T = set(T)
    others = [v for v in range(m.n) if v not in T]
    best = None
    for parents in itertools.product(range(m.n), repeat=len(others)):
        par = dict(zip(others, parents))
        ok = True
        for v in others:
            seen = set()
            x = v
            while x not in T:
                if x in seen:
                    ok = False
                    break
                seen.add(x)
                x = par[x]
            if not ok:
                break
        if ok:
            c = sum((m.c(v, par[v]) for v in others), Fraction(0))
            best = c if best is None else min(best, c)
    return best


class TestOtsp:
    def test_tri3(self, tri3):
        sol = brute_otsp(OtspInstance(tri3, (0, 1)))
        assert sol.total_cost == 3

    def test_path4(self, path4):
        inst = OtspInstance(path4, (A, D))
        sol = brute_otsp(inst)
        assert sol.total_cost == 6 and verify_otsp_solution(inst, sol).ok

    def test_forced_detour(self, path4):
        # order a, c, b, d forces crossing back and forth
        inst = OtspInstance(path4, (A, C, B, D))
        sol = brute_otsp(inst)
        assert sol.total_cost == enum_otsp(inst) == 8

    def test_budget(self):
        inst = generate_instance("euclidean2d", 11, 2, 0, problem="otsp")
        with pytest.raises(BudgetExceeded):
            brute_otsp(inst)

    @given(otsp_instances(min_n=2, max_n=7))
    @settings(max_examples=50)
    def test_matches_enumeration(self, inst):
        sol = brute_otsp(inst)
        assert verify_otsp_solution(inst, sol).ok
        assert sol.total_cost == enum_otsp(inst)


class TestKtspp:
    def test_path4(self, path4):
        sol = brute_ktspp(KtsppInstance(path4, ((A, D),)))
        assert sol.total_cost == 3 and sol.paths == [[A, B, C, D]]

    def test_two_pairs(self, path4):
        inst = KtsppInstance(path4, ((A, B), (C, D)))
        sol = brute_ktspp(inst)
        assert sol.total_cost == 2 and verify_ktspp_solution(inst, sol).ok

    def test_budget(self, path4):
        with pytest.raises(BudgetExceeded):
            brute_ktspp(KtsppInstance(path4, ((A, D),)), OracleBudget(max_nodes_paths=3))

    @given(ktspp_instances(max_n=7, max_k=3))
    @settings(max_examples=50)
    def test_matches_enumeration(self, inst):
        sol = brute_ktspp(inst)
        assert verify_ktspp_solution(inst, sol).ok
        assert sol.total_cost == enum_ktspp(inst)

    @given(ktspp_instances(max_n=6, max_k=3, distinct=False))
    @settings(max_examples=30)
    def test_shared_endpoints_feasible(self, inst):
        assert verify_ktspp_solution(inst, brute_ktspp(inst)).ok


class TestForestAndJoin:
    def test_forest_examples(self, path4):
        assert brute_rooted_forest(path4, {A, D}).total_cost == 2
        assert brute_rooted_forest(path4, {A}).total_cost == 3
        assert brute_rooted_forest(path4, range(4)).total_cost == 0

    @given(otsp_instances(min_n=2, max_n=6))
    @settings(max_examples=40)
    def test_forest_matches_parent_enumeration(self, inst):
        T = set(inst.order)
        assert brute_rooted_forest(inst.metric, T).total_cost == enum_forest(inst.metric, T)

    def test_join(self, path4):
        assert brute_min_ojoin(path4, [A, D]) == 3
        assert brute_min_ojoin(path4, []) == 0
        with pytest.raises(ValueError):
            brute_min_ojoin(path4, [A])

    def test_budgets(self, path4):
        with pytest.raises(BudgetExceeded):
            brute_rooted_forest(path4, {A}, OracleBudget(max_nodes_forest=3))
        with pytest.raises(BudgetExceeded):
            brute_min_ojoin(path4, [A, B], OracleBudget(max_nodes_join=3))
