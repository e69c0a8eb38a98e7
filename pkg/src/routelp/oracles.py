"""Brute-force exact solvers used as ground truth at desk scale."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded
from .forests import RootedForest, _root_map
from .instance import (KtsppInstance, OtspInstance, SolutionPaths, SolutionTour,
                       normalize_ktspp, walk_cost)


@dataclass(frozen=True)
class OracleBudget:
    max_nodes_tour: int = 10
    max_nodes_paths: int = 10
    max_nodes_forest: int = 8
    max_nodes_join: int = 10


DEFAULT_BUDGET = OracleBudget()


def _int_costs(m):
    L = 1
    for row in m.cost:
        for x in row:
            L = L * x.denominator // math.gcd(L, x.denominator)
    return [[int(x * L) for x in row] for row in m.cost], L


def brute_otsp(inst: OtspInstance, budget: OracleBudget = DEFAULT_BUDGET) -> SolutionTour:
    """Held-Karp from the first order node, admitting order nodes only in sequence."""
    m = inst.metric
    n = m.n
    if n > budget.max_nodes_tour:
        raise BudgetExceeded(f"n={n} exceeds tour budget {budget.max_nodes_tour}")
    C, _ = _int_costs(m)
    order = list(inst.order)
    start = order[0]
    order_idx = {o: i for i, o in enumerate(order)}
    order_bits = 0
    for o in order:
        order_bits |= 1 << o
    if n == 1:
        return SolutionTour([start], Fraction(0))
    full = (1 << n) - 1
    dp = {(1 << start, start): (0, None)}
    # iterate masks in increasing popcount order
    layers = [[(1 << start, start)]]
    for _ in range(n - 1):
        nxt = {}
        for mask, last in layers[-1]:
            base = dp[(mask, last)][0]
            seen_orders = bin(mask & order_bits).count("1")
            for w in range(n):
                if mask >> w & 1:
                    continue
                if w in order_idx and order_idx[w] != seen_orders:
                    continue
                key = (mask | 1 << w, w)
                c = base + C[last][w]
                cur = dp.get(key)
                if cur is None or c < cur[0]:
                    dp[key] = (c, last)
                    nxt[key] = True
        layers.append(sorted(nxt))
    best = None
    for mask, last in layers[-1]:
        c = dp[(mask, last)][0] + C[last][start]
        if best is None or c < best[0]:
            best = (c, last)
    tour = []
    mask, last = full, best[1]
    while last is not None:
        tour.append(last)
        prev = dp[(mask, last)][1]
        mask &= ~(1 << last)
        last = prev
    tour.reverse()
    return SolutionTour(tour, walk_cost(m, tour, closed=True))


def brute_ktspp(inst: KtsppInstance, budget: OracleBudget = DEFAULT_BUDGET) -> SolutionPaths:
    """Exact optimum via a subset DP over the concatenation s1..t1 s2..t2 ... tk.

    The free nodes are assigned to pairs implicitly: the DP walks path 1, jumps
    from t_i to s_{i+1} for free, and only t_i can close path i.
    """
    norm = normalize_ktspp(inst)
    ni = norm.instance
    m = ni.metric
    n = m.n
    if n > budget.max_nodes_paths:
        raise BudgetExceeded(f"n={n} exceeds path budget {budget.max_nodes_paths}")
    C, _ = _int_costs(m)
    pairs = list(ni.pairs)
    k = len(pairs)
    T = set(ni.terminals)
    free = [v for v in range(n) if v not in T]
    t_bits = 0
    for _, t in pairs:
        t_bits |= 1 << t
    s0 = pairs[0][0]
    dp = {(1 << s0, s0): (0, None)}
    frontier = [(1 << s0, s0)]
    for _ in range(n - 1):
        nxt = {}
        for mask, last in frontier:
            base = dp[(mask, last)][0]
            i = bin(mask & t_bits).count("1")  # index of the open path
            if i == k:
                continue
            if i > 0 and last == pairs[i - 1][1]:
                # path i-1 just closed: jump to s_i at zero cost
                moves = [(pairs[i][0], 0)]
            else:
                s, t = pairs[i]
                moves = [(w, C[last][w]) for w in free if not mask >> w & 1]
                moves.append((t, C[last][t]))
            for w, c in moves:
                if mask >> w & 1:
                    continue
                key = (mask | 1 << w, w)
                val = base + c
                cur = dp.get(key)
                if cur is None or val < cur[0]:
                    dp[key] = (val, last)
                    nxt[key] = True
        frontier = sorted(nxt)
    full = (1 << n) - 1
    end = (full, pairs[-1][1])
    if end not in dp:
        raise BudgetExceeded("no feasible solution found")
    seq = []
    mask, last = end
    while last is not None:
        seq.append(last)
        prev = dp[(mask, last)][1]
        mask &= ~(1 << last)
        last = prev
    seq.reverse()
    paths = []
    cur = []
    ends = {t for _, t in pairs}
    for v in seq:
        cur.append(v)
        if v in ends:
            paths.append(cur)
            cur = []
    total = sum((walk_cost(m, p) for p in paths), Fraction(0))
    return norm.to_original(SolutionPaths(paths, total))


def brute_rooted_forest(m, T, budget: OracleBudget = DEFAULT_BUDGET) -> RootedForest:
    """Branch and bound over edge subsets of the complete graph."""
    n = m.n
    if n > budget.max_nodes_forest:
        raise BudgetExceeded(f"n={n} exceeds forest budget {budget.max_nodes_forest}")
    T = sorted(set(T))
    need = n - len(T)
    edges = sorted((m.cost[u][v], u, v) for u in range(n) for v in range(u + 1, n))
    best = [None, None]
    term = [False] * n
    for t in T:
        term[t] = True

    def rec(idx, parent, has_term, chosen, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if len(chosen) == need:
            if best[0] is None or cost < best[0]:
                best[0], best[1] = cost, list(chosen)
            return
        if len(edges) - idx < need - len(chosen):
            return
        c, u, v = edges[idx]

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ru, rv = find(u), find(v)
        if ru != rv and not (has_term[ru] and has_term[rv]):
            p2 = list(parent)
            h2 = list(has_term)
            p2[rv] = ru
            h2[ru] = h2[ru] or h2[rv]
            chosen.append((u, v, c))
            rec(idx + 1, p2, h2, chosen, cost + c)
            chosen.pop()
        rec(idx + 1, parent, has_term, chosen, cost)

    rec(0, list(range(n)), list(term), [], Fraction(0))
    chosen = best[1]
    return RootedForest(n, tuple(chosen), _root_map(n, chosen, T), best[0])


def brute_min_ojoin(m, O, budget: OracleBudget = DEFAULT_BUDGET) -> Fraction:
    """Minimum over all edge subsets of K_n whose odd-degree set is exactly ``O``.

    Dynamic program over edges with the current odd-set as state.
    """
    n = m.n
    if n > budget.max_nodes_join:
        raise BudgetExceeded(f"n={n} exceeds join budget {budget.max_nodes_join}")
    target = 0
    for v in O:
        target |= 1 << v
    best = {0: Fraction(0)}
    for u in range(n):
        for v in range(u + 1, n):
            c = m.cost[u][v]
            flip = (1 << u) | (1 << v)
            new = dict(best)
            for state, val in best.items():
                s2 = state ^ flip
                cand = val + c
                if s2 not in new or cand < new[s2]:
                    new[s2] = cand
            best = new
    if target not in best:
        raise ValueError("O must have even size")
    return best[target]
