"""Parity correction, Eulerian circuits and order-preserving tour assembly."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .errors import (AnchorNotOnAnyPath, ComponentNotAnchored, Disconnected,
                     OddCardinality, OddDegreePresent, OddSetTooLarge)
from .instance import MetricInstance, SolutionTour, WeightedMultigraph, shortcut_walk, walk_cost

MATCHING_CAP = 22


def odd_degree_nodes(mg: WeightedMultigraph) -> list:
    return [v for v, d in enumerate(mg.degree()) if d % 2]


def min_weight_perfect_matching(m: MetricInstance, O, cap: int = MATCHING_CAP,
                                heuristic: bool = False):
    """Exact minimum perfect matching on ``O`` by subset DP.

    Among optimal matchings the one whose sorted pair list is lexicographically
    smallest is returned. Above ``cap`` nodes, ``heuristic=True`` switches to a
    greedy matching with no optimality guarantee.
    """
    O = sorted(O)
    if len(O) % 2:
        raise OddCardinality(f"|O| = {len(O)} is odd")
    if not O:
        return [], Fraction(0)
    if len(O) > cap:
        if not heuristic:
            raise OddSetTooLarge(f"|O| = {len(O)} exceeds exact cap {cap}; pass heuristic=True")
        return _greedy_matching(m, O)
    C = m.cost

    @lru_cache(maxsize=None)
    def best(mask):
        if mask == 0:
            return Fraction(0), ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        choice = None
        j_bits = rest
        while j_bits:
            j = (j_bits & -j_bits).bit_length() - 1
            j_bits &= j_bits - 1
            sub_cost, sub_pairs = best(rest & ~(1 << j))
            c = C[O[i]][O[j]] + sub_cost
            if choice is None or c < choice[0]:
                choice = (c, ((O[i], O[j]),) + sub_pairs)
        return choice

    cost, pairs = best((1 << len(O)) - 1)
    return list(pairs), cost


def _greedy_matching(m, O):
    left = list(O)
    pairs = []
    cost = Fraction(0)
    while left:
        u = left.pop(0)
        j = min(range(len(left)), key=lambda x: (m.cost[u][left[x]], left[x]))
        v = left.pop(j)
        pairs.append((u, v))
        cost += m.cost[u][v]
    return pairs, cost


def eulerian_circuit(mg: WeightedMultigraph, start=None) -> list:
    """Hierholzer's closed walk using every edge once; lowest-id edges first."""
    deg = mg.degree()
    odd = [v for v, d in enumerate(deg) if d % 2]
    if odd:
        raise OddDegreePresent(f"odd degree at {odd}")
    if not mg.edges:
        return [start] if start is not None else []
    adj = {v: [] for v in range(mg.n)}
    for eid, (u, v, _) in enumerate(mg.edges):
        adj[u].append((v, eid))
        if u != v:
            adj[v].append((u, eid))
    for v in adj:
        adj[v].sort(key=lambda x: (x[1], x[0]), reverse=True)
    if start is None:
        start = min(v for v in range(mg.n) if deg[v] > 0)
    used = [False] * len(mg.edges)
    stack = [start]
    walk = []
    while stack:
        u = stack[-1]
        lst = adj[u]
        while lst and used[lst[-1][1]]:
            lst.pop()
        if lst:
            w, eid = lst.pop()
            used[eid] = True
            stack.append(w)
        else:
            walk.append(stack.pop())
    if not all(used):
        raise Disconnected("edges outside the start component")
    return walk[::-1]


def multigraph_components(mg: WeightedMultigraph) -> list:
    """Edge-index lists of the connected components that carry edges."""
    parent = list(range(mg.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in mg.edges:
        parent[find(u)] = find(v)
    groups = {}
    for eid, (u, _, _) in enumerate(mg.edges):
        groups.setdefault(find(u), []).append(eid)
    comps = []
    for eids in groups.values():
        nodes = sorted({x for e in eids for x in mg.edges[e][:2]})
        comps.append((nodes, eids))
    comps.sort(key=lambda c: c[0][0])
    return comps


def graft_cycles_into_paths(paths, cycles) -> list:
    """Splice each ``(anchor, [anchor, ..., anchor])`` into the first path holding the anchor.

    The detour goes in right after the anchor's first occurrence; every path
    is then shortcut keeping its final endpoint last.
    """
    paths = [list(p) for p in paths]
    for anchor, cyc in cycles:
        for p in paths:
            if anchor in p:
                i = p.index(anchor)
                p[i + 1:i + 1] = list(cyc[1:])
                break
        else:
            raise AnchorNotOnAnyPath(f"anchor {anchor} lies on no path")
    return [shortcut_walk(p, keep_last=p[-1]) for p in paths]


def shortcut_closed_walk(walk, protected: dict) -> list:
    """Keep first visits, except nodes in ``protected`` keep the visit at the given position."""
    seen = set()
    out = []
    for i, v in enumerate(walk):
        if v in protected:
            if protected[v] == i:
                out.append(v)
            continue
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def assemble_otsp_tour(paths_in_order, extra_edges, join_edges, metric: MetricInstance) -> SolutionTour:
    """Turn order paths plus an even-degree edge multiset into a feasible OTSP tour.

    ``paths_in_order[i]`` runs from the i-th order node to the next one
    (cyclically). ``extra_edges`` and ``join_edges`` are ``(u, v, cost)``
    triples whose union has even degree everywhere.
    """
    n = metric.n
    segments = [list(p[:-1]) for p in paths_in_order]
    walk = [v for seg in segments for v in seg]
    marker_pos = {}
    pos = 0
    for seg in segments:
        marker_pos[seg[0]] = pos
        pos += len(seg)
    H = WeightedMultigraph(n, tuple(extra_edges) + tuple(join_edges))
    if any(d % 2 for d in H.degree()):
        raise OddDegreePresent("extra edges plus join are not even")
    first_pos = {}
    for i, v in enumerate(walk):
        first_pos.setdefault(v, i)
    inserts = []
    for nodes, eids in multigraph_components(H):
        on_walk = [v for v in nodes if v in first_pos]
        if not on_walk:
            raise ComponentNotAnchored(f"component {nodes} touches no order path")
        anchor = min(on_walk, key=lambda v: first_pos[v])
        sub = WeightedMultigraph(n, tuple(H.edges[e] for e in eids))
        circuit = eulerian_circuit(sub, start=anchor)
        cyc = shortcut_walk(circuit)
        inserts.append((first_pos[anchor], cyc[1:]))
    # splice from the back so earlier positions stay valid
    walk2 = list(walk)
    protected = dict(marker_pos)
    for p, extra in sorted(inserts, key=lambda x: -x[0]):
        walk2[p + 1:p + 1] = extra
        for v, q in protected.items():
            if q > p:
                protected[v] = q + len(extra)
    tour = shortcut_closed_walk(walk2, protected)
    return SolutionTour(tour, walk_cost(metric, tour, closed=True))
