"""Exact max-flow, root connectivity and preflow-to-branching decomposition.

Capacities are Fractions or ints; nothing here touches floating point. The
decomposition scales the preflow and the coverage requirements to integers
by their least common denominator and then peels off branchings, each with
an integer multiplicity, by a depth-first search that is exhaustive: any
failure to find a family on a valid input is reported as SearchExhausted.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .errors import (DenominatorOverflow, NotAPreflow,
                     RequirementExceedsConnectivity, SearchExhausted)

Arc = Tuple[int, int]


@dataclass(frozen=True)
class CapacitatedDigraph:
    nodes: tuple
    cap: dict  # (u, v) -> capacity >= 0
    root: Optional[int] = None

    def in_cap(self, v):
        return sum((c for (a, b), c in self.cap.items() if b == v), Fraction(0))

    def out_cap(self, v):
        return sum((c for (a, b), c in self.cap.items() if a == v), Fraction(0))

    def is_preflow(self) -> bool:
        return not self.preflow_violations()

    def preflow_violations(self) -> list:
        inn = {v: Fraction(0) for v in self.nodes}
        out = {v: Fraction(0) for v in self.nodes}
        for (a, b), c in self.cap.items():
            out[a] += c
            inn[b] += c
        return [v for v in self.nodes if v != self.root and inn[v] < out[v]]


@dataclass(frozen=True)
class Branching:
    root: int
    arcs: tuple  # sorted tuple of (u, v)

    @property
    def nodes(self) -> frozenset:
        return frozenset([self.root]) | frozenset(v for _, v in self.arcs)

    def cost(self, metric) -> Fraction:
        return sum((metric.cost[u][v] for u, v in self.arcs), Fraction(0))

    def children(self) -> dict:
        ch = {}
        for u, v in self.arcs:
            ch.setdefault(u, []).append(v)
        return ch

    def path_to(self, t) -> list:
        """Node sequence root -> t inside the tree."""
        parent = {v: u for u, v in self.arcs}
        seq = [t]
        while seq[-1] != self.root:
            seq.append(parent[seq[-1]])
        return seq[::-1]

    def structural_violations(self) -> list:
        bad = []
        indeg = {}
        for u, v in self.arcs:
            indeg[v] = indeg.get(v, 0) + 1
        for v, d in indeg.items():
            if v == self.root:
                bad.append(f"arc enters root {v}")
            elif d != 1:
                bad.append(f"node {v} has in-degree {d}")
        # every arc reachable from the root
        ch = self.children()
        seen = {self.root}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for v in ch.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        unreached = [v for v in indeg if v not in seen]
        if unreached:
            bad.append(f"nodes {sorted(unreached)} not reachable from root")
        return bad


@dataclass
class BranchingFamily:
    members: list  # list of (Branching, Fraction weight)

    def weights(self) -> list:
        return [w for _, w in self.members]

    def denominator(self) -> int:
        d = 1
        for w in self.weights():
            d = d * w.denominator // math.gcd(d, w.denominator)
        return d


# --------------------------------------------------------------------------
# max flow


def _max_flow(nodes, cap: dict, s, t, limit=None):
    """Edmonds-Karp. Returns (value, residual dict). Stops early at ``limit``."""
    res = {}
    adj = {v: [] for v in nodes}
    for (u, v), c in cap.items():
        if c <= 0 or u == v:
            continue
        if (u, v) not in res:
            res[(u, v)] = 0
            adj[u].append(v)
            if (v, u) not in res:
                res[(v, u)] = 0
                adj[v].append(u)
        res[(u, v)] += c
    for v in adj:
        adj[v].sort()
    value = 0
    while limit is None or value < limit:
        parent = {s: None}
        q = deque([s])
        while q and t not in parent:
            u = q.popleft()
            for w in adj[u]:
                if w not in parent and res[(u, w)] > 0:
                    parent[w] = u
                    q.append(w)
        if t not in parent:
            break
        bottleneck = None
        w = t
        while parent[w] is not None:
            u = parent[w]
            r = res[(u, w)]
            if bottleneck is None or r < bottleneck:
                bottleneck = r
            w = u
        w = t
        while parent[w] is not None:
            u = parent[w]
            res[(u, w)] -= bottleneck
            res[(w, u)] += bottleneck
            w = u
        value += bottleneck
    return value, res, adj


def max_flow_min_cut(g: CapacitatedDigraph, s, t):
    """Exact max-flow value and the smallest source-side minimum cut."""
    if s == t:
        raise ValueError("source equals sink")
    value, res, adj = _max_flow(g.nodes, g.cap, s, t)
    side = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in side and res[(u, w)] > 0:
                side.add(w)
                stack.append(w)
    return Fraction(value), frozenset(side)


def min_cut_sink_side(nodes, cap: dict, s, t):
    """Max-flow value and the smallest sink-side min cut (nodes that reach t in the residual)."""
    value, res, adj = _max_flow(nodes, cap, s, t)
    side = {t}
    stack = [t]
    while stack:
        w = stack.pop()
        for u in adj[w]:
            if u not in side and res[(u, w)] > 0:
                side.add(u)
                stack.append(u)
    return value, frozenset(side)


def cut_in_capacity(cap: dict, U) -> Fraction:
    return sum((c for (a, b), c in cap.items() if b in U and a not in U), Fraction(0))


def connectivity_vector(g: CapacitatedDigraph) -> dict:
    r = g.root
    return {v: max_flow_min_cut(g, r, v)[0] for v in g.nodes if v != r}


# --------------------------------------------------------------------------
# decomposition


def _lcm(a, b):
    return a * b // math.gcd(a, b)


class _Search:
    def __init__(self, nodes, root, node_budget):
        self.nodes = tuple(nodes)
        self.root = root
        self.budget = node_budget
        self.steps = 0
        self.failed = set()

    def _flow_at_least(self, X, v, need):
        if need <= 0:
            return True
        value, _, _ = _max_flow(self.nodes, X, self.root, v, limit=need)
        return value >= need

    def feasible(self, X, R, k):
        """Necessary conditions for (X, R, k) to admit k branchings."""
        for v, req in R.items():
            if req > k:
                return False
        for v, req in sorted(R.items(), key=lambda kv: -kv[1]):
            if not self._flow_at_least(X, v, req):
                return False
        return True

    def candidates(self, X, R, k):
        """Sub-branchings of the support containing every forced node.

        Enumerated by include/exclude decisions on frontier arcs in (tail, head)
        order, including first. Partial trees are pruned when some node could
        no longer meet its requirement even after the tree is completed.
        """
        r = self.root
        forced = {v for v, req in R.items() if req >= k}
        arcs_sorted = sorted(a for a, c in X.items() if c > 0)

        def reachable(nodes_in, excluded):
            seen = set(nodes_in)
            stack = list(nodes_in)
            out = {}
            for a in arcs_sorted:
                if a not in excluded:
                    out.setdefault(a[0], []).append(a[1])
            while stack:
                u = stack.pop()
                for w in out.get(u, ()):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            return seen

        def partial_ok(Xp, in_tree):
            for v, req in R.items():
                need = req - 1
                if need > 0 and not self._flow_at_least(Xp, v, need):
                    return False
            return True

        def rec(in_tree, tree_arcs, excluded, Xp):
            self.steps += 1
            if self.steps > self.budget:
                raise SearchExhausted(f"decomposition search exceeded {self.budget} steps")
            nxt = None
            for a in arcs_sorted:
                if a[0] in in_tree and a[1] not in in_tree and a[1] != r and a not in excluded:
                    nxt = a
                    break
            if nxt is None:
                if forced <= in_tree:
                    children = {u for u, _ in tree_arcs}
                    if all(R.get(v, 0) > 0 for v in in_tree if v != r and v not in children):
                        yield tuple(sorted(tree_arcs))
                return
            u, w = nxt
            Xi = dict(Xp)
            Xi[nxt] -= 1
            if Xi[nxt] == 0:
                del Xi[nxt]
            if partial_ok(Xi, in_tree | {w}):
                yield from rec(in_tree | {w}, tree_arcs + [nxt], excluded, Xi)
            ex = excluded | {nxt}
            if forced <= reachable(in_tree, ex):
                yield from rec(in_tree, tree_arcs, ex, Xp)

        yield from rec(frozenset([r]), [], frozenset(), dict(X))

    def solve(self, X, R, k):
        if k == 0:
            return []
        R = {v: q for v, q in R.items() if q > 0}
        if not R:
            return [((), k)]
        key = (tuple(sorted(X.items())), tuple(sorted(R.items())), k)
        if key in self.failed:
            return None
        for arcs in self.candidates(X, R, k):
            in_tree = {self.root} | {v for _, v in arcs}
            mu_max = min([k] + [X[a] for a in arcs])
            outside = [q for v, q in R.items() if v not in in_tree]
            if outside:
                mu_max = min(mu_max, k - max(outside))
            for mu in sorted({mu_max, 1}, reverse=True):
                if mu < 1:
                    continue
                X2 = dict(X)
                for a in arcs:
                    X2[a] -= mu
                    if X2[a] == 0:
                        del X2[a]
                R2 = {v: (q - mu if v in in_tree else q) for v, q in R.items()}
                R2 = {v: q for v, q in R2.items() if q > 0}
                if not self.feasible(X2, R2, k - mu):
                    continue
                rest = self.solve(X2, R2, k - mu)
                if rest is not None:
                    return [(arcs, mu)] + rest
        self.failed.add(key)
        return None


def decompose_preflow(g: CapacitatedDigraph, z: dict, denominator_cap: int = 10**6,
                      family_cap: Optional[int] = None, node_budget: int = 200000) -> BranchingFamily:
    """Convex combination of root-out branchings under ``g``'s capacities.

    Weights sum to 1, every arc ``a`` is used with total weight at most
    ``g.cap[a]`` and every node ``v`` is covered with total weight at least
    ``z[v]``.
    """
    r = g.root
    bad = g.preflow_violations()
    if bad:
        raise NotAPreflow(f"in-flow below out-flow at nodes {bad}")
    z = {v: Fraction(q) for v, q in z.items() if v != r and Fraction(q) > 0}
    for v, q in sorted(z.items()):
        if q > 1:
            raise RequirementExceedsConnectivity(f"z[{v}] = {q} exceeds total weight 1")
        conn, _ = max_flow_min_cut(g, r, v)
        if conn < q:
            raise RequirementExceedsConnectivity(f"z[{v}] = {q} > connectivity {conn}")
    cap = {a: Fraction(c) for a, c in g.cap.items() if Fraction(c) > 0 and a[1] != r and a[0] != a[1]}
    D = 1
    for q in list(cap.values()) + list(z.values()):
        D = _lcm(D, q.denominator)
        if D > denominator_cap:
            raise DenominatorOverflow(f"common denominator exceeds {denominator_cap}")
    X = {a: int(c * D) for a, c in cap.items()}
    R = {v: int(q * D) for v, q in z.items()}
    search = _Search(g.nodes, r, node_budget)
    parts = search.solve(X, R, D)
    if parts is None:
        raise SearchExhausted("no branching family found")
    merged = {}
    for arcs, mu in parts:
        merged[arcs] = merged.get(arcs, 0) + mu
    members = [(Branching(r, arcs), Fraction(mu, D)) for arcs, mu in sorted(merged.items())]
    if family_cap is not None and len(members) > family_cap:
        raise SearchExhausted(f"family size {len(members)} exceeds cap {family_cap}")
    return BranchingFamily(members)


def verify_branching_family(g: CapacitatedDigraph, z: dict, fam: BranchingFamily):
    """Exact check of the family contract. Returns (ok, violations)."""
    violations = []
    total = sum((w for _, w in fam.members), Fraction(0))
    if total != 1:
        violations.append(f"weight sum {total} != 1")
    usage = {}
    cover = {}
    for b, w in fam.members:
        if w <= 0:
            violations.append(f"non-positive weight {w}")
        if b.root != g.root:
            violations.append(f"branching rooted at {b.root}, expected {g.root}")
        for msg in b.structural_violations():
            violations.append(f"structure: {msg}")
        for a in b.arcs:
            usage[a] = usage.get(a, Fraction(0)) + w
        for v in b.nodes:
            cover[v] = cover.get(v, Fraction(0)) + w
    for a, used in sorted(usage.items()):
        avail = Fraction(g.cap.get(a, 0))
        if used > avail:
            violations.append(f"arc {a} overused by {used - avail}")
    for v, q in sorted(z.items()):
        if v == g.root:
            continue
        got = cover.get(v, Fraction(0))
        if got < Fraction(q):
            violations.append(f"node {v} covered {got} < {q}")
    return (not violations), violations


# --------------------------------------------------------------------------
# sampling


def stream(*key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for an integer key such as (seed, trial, pair)."""
    ss = np.random.SeedSequence([int(k) & (2**64 - 1) for k in key])
    return np.random.Generator(np.random.Philox(ss))


def draw_index(weights: list, rng: np.random.Generator) -> int:
    """Index ``j`` with probability exactly ``weights[j]`` (Fractions summing to 1)."""
    D = 1
    for w in weights:
        D = _lcm(D, Fraction(w).denominator)
    u = int(rng.integers(0, D))
    acc = 0
    for j, w in enumerate(weights):
        acc += int(Fraction(w) * D)
        if u < acc:
            return j
    return len(weights) - 1


def sample_branching(fam: BranchingFamily, rng: np.random.Generator) -> Branching:
    return fam.members[draw_index(fam.weights(), rng)][0]


def bernoulli(p: Fraction, rng: np.random.Generator) -> bool:
    """True with probability exactly ``p``."""
    p = Fraction(p)
    if p <= 0:
        return False
    if p >= 1:
        return True
    return int(rng.integers(0, p.denominator)) < p.numerator


def family_to_dict(fam: BranchingFamily) -> dict:
    from .instance import frac_str
    return {"branchings": [{"root": b.root, "arcs": [list(a) for a in b.arcs],
                            "weight": frac_str(w)} for b, w in fam.members]}


def family_from_dict(d: dict) -> BranchingFamily:
    return BranchingFamily([(Branching(int(m["root"]), tuple(sorted(tuple(map(int, a)) for a in m["arcs"]))),
                             Fraction(m["weight"])) for m in d["branchings"]])
