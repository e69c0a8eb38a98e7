"""Instances, metrics, walk shortcutting and feasibility checks.

Costs are exact :class:`fractions.Fraction` values everywhere. A metric may be
a pseudometric: distinct nodes at distance zero model colocated copies of the
same location, which is how duplicate k-TSPP endpoints and the two roles of an
OTSP order node are represented.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DisconnectedGraph, InvalidInstance, InvalidParams, ParseError

GRID = 10**6


@dataclass(frozen=True)
class MetricInstance:
    names: tuple
    cost: tuple  # tuple of row tuples of Fraction

    @property
    def n(self) -> int:
        return len(self.names)

    def c(self, u: int, v: int) -> Fraction:
        return self.cost[u][v]

    @classmethod
    def from_matrix(cls, matrix, names=None) -> "MetricInstance":
        rows = tuple(tuple(Fraction(x) for x in row) for row in matrix)
        if names is None:
            names = tuple(str(i) for i in range(len(rows)))
        return cls(tuple(names), rows)

    def with_copies(self, originals: Sequence[int], suffix: str = "'") -> "MetricInstance":
        """Append one colocated copy per entry of ``originals`` (distance 0 to it)."""
        idx = list(range(self.n)) + list(originals)
        names = list(self.names) + [self.names[o] + suffix for o in originals]
        # disambiguate repeated copies of the same node
        seen = {}
        for j in range(self.n, len(names)):
            seen[names[j]] = seen.get(names[j], 0) + 1
            if seen[names[j]] > 1:
                names[j] = names[j] + str(seen[names[j]])
        rows = tuple(tuple(self.cost[a][b] for b in idx) for a in idx)
        return MetricInstance(tuple(names), rows)


@dataclass(frozen=True)
class OtspInstance:
    metric: MetricInstance
    order: tuple

    @property
    def k(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class KtsppInstance:
    metric: MetricInstance
    pairs: tuple  # tuple of (s, t)

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def terminals(self) -> tuple:
        return tuple(v for p in self.pairs for v in p)

    def free_nodes(self) -> list:
        T = set(self.terminals)
        return [v for v in range(self.metric.n) if v not in T]

    def has_distinct_endpoints(self) -> bool:
        T = self.terminals
        return len(set(T)) == len(T)


@dataclass(frozen=True)
class WeightedMultigraph:
    n: int
    edges: tuple  # tuple of (u, v, cost)

    def degree(self) -> list:
        deg = [0] * self.n
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def total_cost(self) -> Fraction:
        return sum((c for _, _, c in self.edges), Fraction(0))


@dataclass
class SolutionTour:
    tour: list
    total_cost: Fraction


@dataclass
class SolutionPaths:
    paths: list
    total_cost: Fraction


class Verdict(NamedTuple):
    ok: bool
    reason: str

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class Normalization:
    """A k-TSPP instance with distinct endpoints plus the map back to input ids."""

    instance: KtsppInstance
    origin: tuple  # normalized node id -> original node id

    def to_original(self, sol: SolutionPaths) -> SolutionPaths:
        paths = [[self.origin[v] for v in p] for p in sol.paths]
        return SolutionPaths(paths, sol.total_cost)


# --------------------------------------------------------------------------
# metric handling


def metric_closure(graph: WeightedMultigraph, names=None) -> MetricInstance:
    n = graph.n
    INF = None
    d = [[INF] * n for _ in range(n)]
    for v in range(n):
        d[v][v] = Fraction(0)
    for u, v, c in graph.edges:
        c = Fraction(c)
        if c < 0:
            raise InvalidParams(f"negative edge cost on {u}-{v}")
        if u == v:
            continue
        if d[u][v] is None or c < d[u][v]:
            d[u][v] = d[v][u] = c
    for w in range(n):
        dw = d[w]
        for u in range(n):
            duw = d[u][w]
            if duw is None:
                continue
            du = d[u]
            for v in range(n):
                if dw[v] is None:
                    continue
                alt = duw + dw[v]
                if du[v] is None or alt < du[v]:
                    du[v] = alt
    for u in range(n):
        for v in range(n):
            if d[u][v] is None:
                raise DisconnectedGraph(f"nodes {u} and {v} are not connected")
    return MetricInstance.from_matrix(d, names)


def validate_metric(m: MetricInstance) -> list:
    """Return human-readable violations; empty iff ``m`` is a pseudometric."""
    report = []
    n = m.n
    C = m.cost
    if any(len(row) != n for row in C):
        return ["cost matrix is not square"]
    for u in range(n):
        if C[u][u] != 0:
            report.append(f"diagonal: cost[{u}][{u}] = {C[u][u]}")
        for v in range(n):
            if C[u][v] < 0:
                report.append(f"negative: cost[{u}][{v}] = {C[u][v]}")
            if v > u and C[u][v] != C[v][u]:
                report.append(f"symmetry: cost[{u}][{v}] = {C[u][v]} != cost[{v}][{u}] = {C[v][u]}")
    for u in range(n):
        for w in range(n):
            for v in range(n):
                if C[u][w] > C[u][v] + C[v][w]:
                    report.append(
                        f"triangle: ({u},{v},{w}) cost[{u}][{w}] = {C[u][w]} > "
                        f"{C[u][v]} + {C[v][w]}")
    return report


def path_metric(n: int, names=None) -> MetricInstance:
    """Metric closure of the unit-weight path 0-1-...-(n-1)."""
    g = WeightedMultigraph(n, tuple((i, i + 1, Fraction(1)) for i in range(n - 1)))
    return metric_closure(g, names)


def _ceil_sqrt(x: int) -> int:
    if x <= 0:
        return 0
    r = math.isqrt(x)
    return r if r * r == x else r + 1


GENERATOR_KINDS = ("euclidean2d", "graphClosure", "uniformMatrix")


def generate_metric(kind: str, n: int, rng: np.random.Generator) -> MetricInstance:
    if kind == "euclidean2d":
        pts = rng.integers(0, GRID + 1, size=(n, 2))
        pts = [(int(x), int(y)) for x, y in pts]
        mat = [[Fraction(_ceil_sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2), GRID)
                for b in pts] for a in pts]
        edges = tuple((u, v, mat[u][v]) for u in range(n) for v in range(u + 1, n))
        return metric_closure(WeightedMultigraph(n, edges))
    if kind == "graphClosure":
        edges = []
        perm = [int(v) for v in rng.permutation(n)]
        for i in range(1, n):
            j = int(rng.integers(0, i))
            edges.append((perm[i], perm[j], Fraction(int(rng.integers(1, 11)))))
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.3:
                    edges.append((u, v, Fraction(int(rng.integers(1, 11)))))
        return metric_closure(WeightedMultigraph(n, tuple(edges)))
    if kind == "uniformMatrix":
        edges = tuple((u, v, Fraction(int(rng.integers(1, 11))))
                      for u in range(n) for v in range(u + 1, n))
        return metric_closure(WeightedMultigraph(n, edges))
    raise InvalidParams(f"unknown generator kind {kind!r}")


def generate_instance(kind: str, n: int, k: int, seed: int, problem: str = "ktspp"):
    """Deterministic random instance for ``(kind, n, k, seed)``.

    For ``problem="otsp"`` the order has ``k`` distinct nodes, for ``"ktspp"``
    there are ``k`` pairs with ``2k`` distinct endpoints.
    """
    if k < 1:
        raise InvalidParams("k must be at least 1")
    need = k if problem == "otsp" else 2 * k
    if n < max(2, need):
        raise InvalidParams(f"n={n} too small for k={k} ({problem})")
    if problem not in ("otsp", "ktspp"):
        raise InvalidParams(f"unknown problem {problem!r}")
    rng = np.random.default_rng([GENERATOR_KINDS.index(kind) if kind in GENERATOR_KINDS else 99,
                                 seed & (2**64 - 1)])
    metric = generate_metric(kind, n, rng)
    chosen = [int(v) for v in rng.permutation(n)[:need]]
    if problem == "otsp":
        return OtspInstance(metric, tuple(chosen))
    pairs = tuple((chosen[2 * i], chosen[2 * i + 1]) for i in range(k))
    return KtsppInstance(metric, pairs)


# --------------------------------------------------------------------------
# walks


def walk_cost(m: MetricInstance, walk: Sequence[int], closed: bool = False) -> Fraction:
    total = sum((m.cost[a][b] for a, b in zip(walk, walk[1:])), Fraction(0))
    if closed and len(walk) > 1:
        total += m.cost[walk[-1]][walk[0]]
    return total


def shortcut_walk(walk: Sequence[int], keep_last: Optional[int] = None) -> list:
    """Keep the first visit of every node; for ``keep_last`` keep its last visit."""
    last_t = None
    if keep_last is not None:
        for i in range(len(walk) - 1, -1, -1):
            if walk[i] == keep_last:
                last_t = i
                break
    seen = set()
    out = []
    for i, v in enumerate(walk):
        if v == keep_last and i != last_t:
            continue
        if v in seen:
            continue
        seen.add(v)
        out.append(v)
    return out


# --------------------------------------------------------------------------
# normalization


def normalize_ktspp(inst: KtsppInstance) -> Normalization:
    """Split repeated endpoints into colocated copies."""
    used = set()
    copies = []
    pairs = []
    next_id = inst.metric.n
    for s, t in inst.pairs:
        new = []
        for v in (s, t):
            if v in used:
                copies.append(v)
                new.append(next_id)
                next_id += 1
            else:
                used.add(v)
                new.append(v)
        pairs.append(tuple(new))
    metric = inst.metric.with_copies(copies) if copies else inst.metric
    origin = tuple(range(inst.metric.n)) + tuple(copies)
    return Normalization(KtsppInstance(metric, tuple(pairs)), origin)


# --------------------------------------------------------------------------
# verification


def verify_otsp_solution(inst: OtspInstance, sol: SolutionTour) -> Verdict:
    n = inst.metric.n
    tour = list(sol.tour)
    if len(tour) != n or set(tour) != set(range(n)):
        missing = sorted(set(range(n)) - set(tour))
        if missing:
            return Verdict(False, f"not Hamiltonian: missing nodes {missing}")
        return Verdict(False, "not Hamiltonian: repeated or foreign nodes")
    cost = walk_cost(inst.metric, tour, closed=True)
    if cost != sol.total_cost:
        return Verdict(False, f"total cost {sol.total_cost} != recomputed {cost}")
    pos = {v: i for i, v in enumerate(tour)}
    order = [pos[o] for o in inst.order]
    for seq in (order, [(n - p) % n for p in order]):
        # rotate so the first order node sits at position 0
        base = seq[0]
        rel = [(p - base) % n for p in seq]
        if all(a < b for a, b in zip(rel, rel[1:])):
            return Verdict(True, "ok")
    return Verdict(False, "order violated in both directions")


def verify_ktspp_solution(inst: KtsppInstance, sol: SolutionPaths) -> Verdict:
    """Check endpoints, simplicity and that the paths partition the nodes.

    Endpoint nodes shared by several pairs (un-normalized input) may appear
    once per endpoint role; every other node appears exactly once overall.
    """
    n = inst.metric.n
    if len(sol.paths) != inst.k:
        return Verdict(False, f"expected {inst.k} paths, got {len(sol.paths)}")
    endpoint_uses = {}
    for s, t in inst.pairs:
        endpoint_uses[s] = endpoint_uses.get(s, 0) + 1
        endpoint_uses[t] = endpoint_uses.get(t, 0) + 1
    interior_seen = set()
    covered = set()
    total = Fraction(0)
    for i, ((s, t), path) in enumerate(zip(inst.pairs, sol.paths)):
        if not path or path[0] != s or path[-1] != t:
            return Verdict(False, f"path {i} has wrong endpoints")
        if s != t and len(path) < 2:
            return Verdict(False, f"path {i} has wrong endpoints")
        inner = path[1:-1]
        if len(set(path)) != len(path) and not (s == t and len(set(path[:-1])) == len(path) - 1):
            return Verdict(False, f"path {i} is not simple")
        for v in inner:
            if not 0 <= v < n:
                return Verdict(False, f"path {i} has unknown node {v}")
            if v in endpoint_uses or v in interior_seen:
                return Verdict(False, f"node {v} lies on more than one path")
            interior_seen.add(v)
        covered.update(path)
        total += walk_cost(inst.metric, path)
    if covered != set(range(n)):
        return Verdict(False, f"coverage: nodes {sorted(set(range(n)) - covered)} not visited")
    if total != sol.total_cost:
        return Verdict(False, f"total cost {sol.total_cost} != recomputed {total}")
    return Verdict(True, "ok")


# --------------------------------------------------------------------------
# JSON I/O


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s, fieldname="value") -> Fraction:
    if isinstance(s, bool):
        raise ParseError("expected rational", field=fieldname)
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError):
            pass
    raise ParseError(f"bad rational {s!r}", field=fieldname)


def instance_to_dict(inst) -> dict:
    m = inst.metric
    d = {
        "type": "otsp" if isinstance(inst, OtspInstance) else "ktspp",
        "n": m.n,
        "names": list(m.names),
        "cost": [[frac_str(x) for x in row] for row in m.cost],
    }
    if isinstance(inst, OtspInstance):
        d["order"] = list(inst.order)
    else:
        d["pairs"] = [list(p) for p in inst.pairs]
    return d


def write_instance(inst) -> bytes:
    return json.dumps(instance_to_dict(inst), indent=1).encode()


def instance_from_dict(d: dict, check: bool = True):
    if not isinstance(d, dict):
        raise ParseError("top level must be an object")
    for key in ("type", "n", "cost"):
        if key not in d:
            raise ParseError("missing field", field=key)
    kind = d["type"]
    if kind not in ("otsp", "ktspp"):
        raise ParseError(f"unknown type {kind!r}", field="type")
    n = d["n"]
    if not isinstance(n, int) or n < 1:
        raise ParseError("n must be a positive integer", field="n")
    names = d.get("names") or [str(i) for i in range(n)]
    if len(names) != n:
        raise ParseError("names has wrong length", field="names")
    cost = d["cost"]
    if not isinstance(cost, list) or len(cost) != n or any(
            not isinstance(r, list) or len(r) != n for r in cost):
        raise ParseError("cost must be an n x n matrix", field="cost")
    rows = tuple(tuple(parse_frac(x, f"cost[{i}][{j}]") for j, x in enumerate(r))
                 for i, r in enumerate(cost))
    metric = MetricInstance(tuple(str(x) for x in names), rows)
    if check:
        bad = validate_metric(metric)
        if bad:
            raise InvalidInstance("; ".join(bad[:5]))
    if kind == "otsp":
        if "order" not in d:
            raise ParseError("missing field", field="order")
        order = tuple(int(v) for v in d["order"])
        if not order or len(set(order)) != len(order) or any(not 0 <= v < n for v in order):
            raise InvalidInstance("order must be nonempty, distinct and in range")
        return OtspInstance(metric, order)
    if "pairs" not in d:
        raise ParseError("missing field", field="pairs")
    pairs = []
    for p in d["pairs"]:
        if not isinstance(p, list) or len(p) != 2:
            raise ParseError("pairs entries must be [s, t]", field="pairs")
        s, t = int(p[0]), int(p[1])
        if not (0 <= s < n and 0 <= t < n):
            raise InvalidInstance(f"pair {p} out of range")
        pairs.append((s, t))
    if not pairs:
        raise InvalidInstance("at least one pair required")
    return KtsppInstance(metric, tuple(pairs))


def read_instance(data) -> "OtspInstance | KtsppInstance":
    if isinstance(data, bytes):
        data = data.decode()
    try:
        d = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return instance_from_dict(d)


def solution_to_dict(sol) -> dict:
    if isinstance(sol, SolutionTour):
        return {"tour": list(sol.tour), "totalCost": frac_str(sol.total_cost)}
    return {"paths": [list(p) for p in sol.paths], "totalCost": frac_str(sol.total_cost)}


def solution_from_dict(d: dict):
    if "totalCost" not in d:
        raise ParseError("missing field", field="totalCost")
    cost = parse_frac(d["totalCost"], "totalCost")
    if "tour" in d:
        return SolutionTour([int(v) for v in d["tour"]], cost)
    if "paths" in d:
        return SolutionPaths([[int(v) for v in p] for p in d["paths"]], cost)
    raise ParseError("solution needs 'tour' or 'paths'")
