"""Minimum-cost T-rooted spanning forests and checks of the forest bound under random node additions.

A T-rooted spanning forest is a spanning forest in which every component
holds exactly one node of ``T``; its optimum equals a minimum spanning tree of
the graph with ``T`` contracted to one node, which is how it is computed here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable


from .errors import EmptyTerminalSet, InvalidCover, Disconnected
from .flows import stream
from .instance import MetricInstance


@dataclass(frozen=True)
class RootedForest:
    n: int
    edges: tuple  # (u, v, cost) with u < v
    root_of: tuple  # node -> terminal its component is rooted at
    total_cost: Fraction

    def components(self) -> dict:
        comp = {}
        for v, r in enumerate(self.root_of):
            comp.setdefault(r, []).append(v)
        return comp


def _edge_list(g):
    """(cost, id, u, v) for every non-loop edge, in id order."""
    if isinstance(g, MetricInstance):
        n = g.n
        out = []
        eid = 0
        for u in range(n):
            for v in range(u + 1, n):
                out.append((g.cost[u][v], eid, u, v))
                eid += 1
        return n, out
    out = [(Fraction(c), eid, min(u, v), max(u, v)) for eid, (u, v, c) in enumerate(g.edges) if u != v]
    return g.n, out


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[rb] = ra
        return True


def _root_map(n, edges, T):
    adj = {v: [] for v in range(n)}
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    root_of = [None] * n
    for t in sorted(T):
        if root_of[t] is not None:
            continue
        root_of[t] = t
        stack = [t]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if root_of[w] is None:
                    root_of[w] = t
                    stack.append(w)
    return tuple(root_of)


def min_rooted_forest(g, T) -> RootedForest:
    """Kruskal on ``g`` with ``T`` contracted; ties broken by (cost, edge id)."""
    T = sorted(set(T))
    if not T:
        raise EmptyTerminalSet("terminal set must be nonempty")
    n, edges = _edge_list(g)
    dsu = _DSU(n)
    for t in T[1:]:
        dsu.union(T[0], t)
    chosen = []
    for c, eid, u, v in sorted(edges):
        if dsu.union(u, v):
            chosen.append((u, v, c))
    if len(chosen) != n - len(T):
        raise Disconnected("graph is not connected")
    root_of = _root_map(n, chosen, T)
    return RootedForest(n, tuple(chosen), root_of, sum((c for _, _, c in chosen), Fraction(0)))


def forest_cost(g, T) -> Fraction:
    return min_rooted_forest(g, T).total_cost


def exchange_violations(g, T, forest: RootedForest) -> list:
    """Non-forest edges breaking the optimality exchange conditions."""
    n, edges = _edge_list(g)
    adj = {v: [] for v in range(n)}
    in_forest = set()
    for u, v, c in forest.edges:
        adj[u].append((v, c))
        adj[v].append((u, c))
        in_forest.add((min(u, v), max(u, v)))

    def path_costs(a, b):
        # edge costs on the forest path a -> b (same component assumed)
        prev = {a: None}
        stack = [a]
        while stack:
            x = stack.pop()
            for y, c in adj[x]:
                if y not in prev:
                    prev[y] = (x, c)
                    stack.append(y)
        out = []
        while b != a:
            x, c = prev[b]
            out.append(c)
            b = x
        return out

    bad = []
    for c, _, u, v in edges:
        if (u, v) in in_forest:
            continue
        ru, rv = forest.root_of[u], forest.root_of[v]
        if ru == rv:
            costs = path_costs(u, v)
        else:
            costs = path_costs(ru, u) + path_costs(rv, v)
        if any(c < x for x in costs):
            bad.append((u, v))
    return bad


def drop_value(g, T, S) -> Fraction:
    S = set(S)
    if S & set(T):
        raise ValueError("S must avoid T")
    if not S:
        return Fraction(0)
    return forest_cost(g, T) - forest_cost(g, set(T) | S)


@dataclass(frozen=True)
class FractionalCover:
    sets: tuple  # tuple of (frozenset, Fraction)


def check_cover_inequality(g, T, cover: FractionalCover):
    """Compare the optimal forest cost with the drop-weighted cover.

    Returns ``(holds, slack)`` with ``slack = sum(drop(S) * z_S) - c_T``.
    """
    n = g.n
    T = set(T)
    covered = {v: Fraction(0) for v in range(n) if v not in T}
    for S, w in cover.sets:
        w = Fraction(w)
        if w < 0:
            raise InvalidCover("negative weight")
        if set(S) & T or any(not 0 <= v < n for v in S):
            raise InvalidCover(f"set {sorted(S)} is not inside V \\ T")
        for v in S:
            covered[v] += w
    short = [v for v, q in covered.items() if q < 1]
    if short:
        raise InvalidCover(f"nodes {short} covered less than once")
    cT = forest_cost(g, T)
    rhs = sum((drop_value(g, T, S) * Fraction(w) for S, w in cover.sets), Fraction(0))
    return rhs >= cT, rhs - cT


def bridge_montecarlo(g, T, sampler: Callable, gamma: float, trials: int, seed: int = 0) -> dict:
    """Empirical mean of ``c_{T u S}`` against ``gamma * c_T``.

    ``sampler(rng)`` returns a subset of ``V \\ T``; trial ``j`` draws from its
    own stream keyed by ``(seed, j)``. Passes when the mean is within three
    standard errors of the bound.
    """
    T = frozenset(T)
    cT = forest_cost(g, T)
    cache = {}
    total = Fraction(0)
    total_sq = Fraction(0)
    for j in range(trials):
        S = frozenset(sampler(stream(seed, j)))
        if S & T:
            raise ValueError("sampler returned terminals")
        if S not in cache:
            cache[S] = forest_cost(g, T | S)
        c = cache[S]
        total += c
        total_sq += c * c
    mean = total / trials
    var = (total_sq / trials - mean * mean) * trials / (trials - 1) if trials > 1 else Fraction(0)
    sd = math.sqrt(max(float(var), 0.0))
    bound = gamma * float(cT)
    slack = bound + 3 * sd / math.sqrt(trials) - float(mean)
    return {"empiricalMean": float(mean), "bound": bound, "cT": float(cT), "stddev": sd,
            "trials": trials, "gamma": gamma, "pass": slack >= 0, "slack": slack}


def independent_sampler(nodes: Iterable[int], p: float) -> Callable:
    """Each node joins S independently with probability ``p``."""
    nodes = sorted(nodes)

    def draw(rng):
        u = rng.random(len(nodes))
        return {v for v, x in zip(nodes, u) if x < p}

    return draw


def exact_bridge_expectation(g, T, dist):
    """Exact ``E[c_{T u S}]`` and the miss bound for a finite distribution.

    ``dist`` is a list of ``(S, probability)`` with rational probabilities.
    Returns ``(expectation, gamma)`` where ``gamma = max_v Pr[v not in S]``.
    """
    T = set(T)
    nonterm = [v for v in range(g.n) if v not in T]
    total_p = sum((Fraction(q) for _, q in dist), Fraction(0))
    if total_p != 1:
        raise ValueError("probabilities must sum to 1")
    miss = {v: Fraction(0) for v in nonterm}
    exp = Fraction(0)
    for S, q in dist:
        q = Fraction(q)
        exp += q * forest_cost(g, T | set(S))
        for v in nonterm:
            if v not in S:
                miss[v] += q
    gamma = max(miss.values(), default=Fraction(0))
    return exp, gamma


def independent_distribution(nonterm, probs: dict):
    """Enumerate all subsets of ``nonterm`` under independent inclusion probabilities."""
    nonterm = sorted(nonterm)
    out = []
    for bits in itertools.product((0, 1), repeat=len(nonterm)):
        q = Fraction(1)
        S = []
        for v, b in zip(nonterm, bits):
            p = Fraction(probs[v])
            q *= p if b else 1 - p
            if b:
                S.append(v)
        if q:
            out.append((frozenset(S), q))
    return out


def double_forest_to_cycles(forest: RootedForest) -> list:
    """One closed walk ``[root, ..., root]`` per non-singleton component.

    The walk is the preorder of the doubled tree (children in id order), i.e.
    the shortcut Euler tour; it visits each component node once.
    """
    adj = {v: [] for v in range(forest.n)}
    for u, v, _ in forest.edges:
        adj[u].append(v)
        adj[v].append(u)
    out = []
    for r, members in sorted(forest.components().items()):
        if len(members) < 2:
            continue
        order = []
        seen = {r}
        stack = [r]
        while stack:
            u = stack.pop()
            order.append(u)
            for w in sorted(adj[u], reverse=True):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out.append((r, order + [r]))
    return out
