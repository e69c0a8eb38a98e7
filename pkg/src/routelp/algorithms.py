"""Randomized LP-rounding solvers for OTSP and k-TSPP, plus the forest baseline.

Each solver is a pipeline: solve the path LP once, decompose every pair's
flow into a convex combination of branchings once, then per seeded trial
sample one branching per pair, patch coverage with a minimum rooted forest
and repair into a feasible solution. :class:`KtsppPipeline` and
:class:`OtspPipeline` cache the expensive deterministic part so Monte-Carlo
loops only pay for sampling and repair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal, localcontext
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InvalidParams, TerminalNotInBranching
from .flows import (Branching, BranchingFamily, CapacitatedDigraph, bernoulli, decompose_preflow,
                    sample_branching, stream)
from .forests import RootedForest, double_forest_to_cycles, min_rooted_forest
from .instance import (KtsppInstance, MetricInstance, OtspInstance, SolutionPaths, SolutionTour,
                       WeightedMultigraph, frac_str, normalize_ktspp, shortcut_walk, walk_cost)
from .lp import LpSolution, solve_ktspp_lp
from .parity import (assemble_otsp_tour, graft_cycles_into_paths, min_weight_perfect_matching,
                     odd_degree_nodes)

GAMMA_DIGITS = 15
KTSPP_ALGORITHMS = ("final", "warmup", "baseline3")


class InvariantBreach(AssertionError):
    """A deterministic guarantee failed at runtime (a bug, never bad input)."""


# --------------------------------------------------------------------------
# tau / gamma and analytic bounds


@dataclass(frozen=True)
class TauGamma:
    opt_lp: Fraction
    delta: Fraction
    tau: Fraction
    gamma: float
    gamma_coin: Fraction  # exact coin bias; never above ln(1/tau)
    degenerate: bool = False


def _round_down_sig(d: Decimal, digits: int) -> Decimal:
    if d == 0:
        return d
    exp = d.adjusted() - digits + 1
    return d.quantize(Decimal(1).scaleb(exp), rounding=ROUND_DOWN)


def gamma_from_tau(tau: Fraction) -> Fraction:
    """min(1, ln(1/tau)) truncated toward zero at 15 significant digits."""
    tau = Fraction(tau)
    if not 0 <= tau <= 1:
        raise InvalidParams(f"tau = {tau} outside [0, 1]")
    if tau == 0:
        return Fraction(1)
    with localcontext() as ctx:
        ctx.prec = 50
        val = Decimal(tau.denominator).ln() - Decimal(tau.numerator).ln()
        if val >= 1:
            return Fraction(1)
        return Fraction(_round_down_sig(val, GAMMA_DIGITS))


def tau_gamma(opt_lp: Fraction, delta: Fraction) -> TauGamma:
    opt_lp, delta = Fraction(opt_lp), Fraction(delta)
    if opt_lp == 0:
        return TauGamma(opt_lp, delta, Fraction(0), 1.0, Fraction(1), degenerate=True)
    tau = 1 - delta / opt_lp
    g = gamma_from_tau(tau)
    return TauGamma(opt_lp, delta, tau, float(g), g)


def compute_tau_gamma(lp: LpSolution, inst: KtsppInstance) -> TauGamma:
    delta = sum((inst.metric.c(s, t) for s, t in inst.pairs), Fraction(0))
    return tau_gamma(lp.objective, delta)


def _up(x: Decimal) -> float:
    """Smallest float not below ``x``."""
    f = float(x)
    if Fraction(f) < Fraction(x):
        f = math.nextafter(f, math.inf)
    return f


def _exp_neg(g: Fraction) -> Decimal:
    return (-(Decimal(g.numerator) / Decimal(g.denominator))).exp()


def _dec(q: Fraction) -> Decimal:
    return Decimal(q.numerator) / Decimal(q.denominator)


def otsp_ratio() -> float:
    with localcontext() as ctx:
        ctx.prec = 40
        return _up(Decimal(3) / 2 + _exp_neg(Fraction(1)))


def global_ktspp_ratio() -> float:
    with localcontext() as ctx:
        ctx.prec = 40
        return _up(1 + 2 * _exp_neg(Fraction(1, 2)))


def warmup_ratio(tau: Fraction) -> float:
    with localcontext() as ctx:
        ctx.prec = 40
        return _up(1 + _dec(Fraction(tau)) + 2 * _exp_neg(Fraction(1)))


def final_ratio(tau: Fraction, gamma: Fraction) -> float:
    """Guarantee for coin bias ``gamma``; evaluated at the truncated bias actually used."""
    tau, gamma = Fraction(tau), Fraction(gamma)
    with localcontext() as ctx:
        ctx.prec = 40
        return _up(1 - _dec(tau) + 2 * _dec(gamma * tau) + 2 * _exp_neg(gamma))


def baseline3_ratio(tau: Fraction) -> Fraction:
    return 3 - Fraction(tau)


def coverage_miss_bound(gamma: Fraction) -> float:
    with localcontext() as ctx:
        ctx.prec = 40
        return _up(_exp_neg(Fraction(gamma)))


# --------------------------------------------------------------------------
# run ledger


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


@dataclass
class RunArtifacts:
    """Everything one trial produced, enough to re-derive every recorded cost.

    Branchings and pre-graft paths use ``work_metric`` ids; the forest uses
    ``forest_metric`` ids; join pairs and the solution use ``metric`` ids.
    """

    problem: str
    algorithm: str
    seed: int
    trial: int
    metric: MetricInstance
    work_metric: MetricInstance
    forest_metric: MetricInstance
    branchings: list = field(default_factory=list)
    coins: list = field(default_factory=list)
    paths: list = field(default_factory=list)
    t_prime: list = field(default_factory=list)
    forest: Optional[RootedForest] = None
    join: list = field(default_factory=list)
    odd: list = field(default_factory=list)
    extra_edges: list = field(default_factory=list)
    costs: dict = field(default_factory=dict)
    solution: object = None
    ledger: list = field(default_factory=list)

    def failed_checks(self) -> list:
        return [e for e in self.ledger if not e.holds]

    def audit(self) -> list:
        """Recorded costs that disagree with a recomputation from the structures."""
        bad = []

        def check(name, value):
            if name in self.costs and self.costs[name] != value:
                bad.append(f"{name}: recorded {self.costs[name]} recomputed {value}")

        wm, fm, m = self.work_metric, self.forest_metric, self.metric
        check("branchings", sum((b.cost(wm) for b in self.branchings if b is not None), Fraction(0)))
        check("paths", sum((walk_cost(wm, p) for p in self.paths), Fraction(0)))
        if self.forest is not None:
            fc = sum((fm.c(u, v) for u, v, _ in self.forest.edges), Fraction(0))
            check("forest", fc)
            if self.forest.total_cost != fc:
                bad.append("forest: stored total differs from its edges")
        check("join", sum((m.c(u, v) for u, v in self.join), Fraction(0)))
        if isinstance(self.solution, SolutionTour):
            check("solution", walk_cost(m, self.solution.tour, closed=True))
        elif isinstance(self.solution, SolutionPaths):
            check("solution", sum((walk_cost(m, p) for p in self.solution.paths), Fraction(0)))
        return bad

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "trial": self.trial,
            "branchings": [None if b is None else {"root": b.root, "arcs": [list(a) for a in b.arcs]}
                           for b in self.branchings],
            "coins": list(self.coins),
            "paths": [list(p) for p in self.paths],
            "tPrime": list(self.t_prime),
            "forest": None if self.forest is None else [[u, v] for u, v, _ in self.forest.edges],
            "join": [list(p) for p in self.join],
            "odd": list(self.odd),
            "extraEdges": [[u, v] for u, v, _ in self.extra_edges],
            "costs": {k: frac_str(v) for k, v in self.costs.items()},
            "ledger": [{"name": e.name, "lhs": frac_str(e.lhs), "rhs": frac_str(e.rhs),
                        "holds": e.holds} for e in self.ledger],
        }


# --------------------------------------------------------------------------
# building blocks


def branching_to_path(B: Branching, t: int, metric: Optional[MetricInstance] = None) -> list:
    """Root-to-``t`` path visiting exactly the nodes of ``B``.

    Walks the doubled off-path subtrees as excursions while moving along the
    tree path, then shortcuts keeping the final visit of ``t``. ``metric`` is
    accepted for signature symmetry and unused.
    """
    if t not in B.nodes:
        raise TerminalNotInBranching(f"node {t} is not in the branching rooted at {B.root}")
    spine = B.path_to(t)
    on_spine = set(spine)
    ch = {u: sorted(vs) for u, vs in B.children().items()}
    walk = []

    def excursion(u):
        walk.append(u)
        for w in ch.get(u, ()):
            excursion(w)
            walk.append(u)

    for idx, u in enumerate(spine):
        walk.append(u)
        for w in ch.get(u, ()):
            if w in on_spine:
                continue
            excursion(w)
            walk.append(u)
    return shortcut_walk(walk, keep_last=t)


def pair_requirements(inst: KtsppInstance, lp: LpSolution, i: int) -> dict:
    s, t = inst.pairs[i]
    z = {v: lp.z.get((i, v), Fraction(0)) for v in inst.free_nodes()}
    z = {v: q for v, q in z.items() if q > 0}
    z[t] = Fraction(1)
    return z


def decompose_pair(inst: KtsppInstance, lp: LpSolution, i: int, **kw) -> BranchingFamily:
    """Branching family for pair ``i``; every member contains ``t_i``."""
    s, t = inst.pairs[i]
    g = CapacitatedDigraph(tuple(range(inst.metric.n)), lp.flow(i), s)
    fam = decompose_preflow(g, pair_requirements(inst, lp, i), **kw)
    for b, _ in fam.members:
        if t not in b.nodes:
            raise InvariantBreach(f"branching of pair {i} misses t = {t}")
    return fam


def otsp_to_ktspp(inst: OtspInstance):
    """Pairs (o_i, copy of o_{i+1}) on the metric extended by one colocated copy per order node.

    Returns the k-TSPP instance and the map from its node ids to ``inst`` ids.
    """
    order = list(inst.order)
    k = len(order)
    if len(set(order)) != k:
        raise InvalidParams("order nodes must be distinct")
    n = inst.metric.n
    succ = [order[(i + 1) % k] for i in range(k)]
    metric = inst.metric.with_copies(succ)
    pairs = tuple((order[i], n + i) for i in range(k))
    origin = tuple(range(n)) + tuple(succ)
    return KtsppInstance(metric, pairs), origin


def _dedupe_free(paths: list, terminals: set) -> list:
    """Each non-terminal stays only in the lowest-index path holding it."""
    seen = set()
    out = []
    for p in paths:
        q = []
        for v in p:
            if v in terminals:
                q.append(v)
            elif v not in seen:
                seen.add(v)
                q.append(v)
        out.append(q)
    return out


# --------------------------------------------------------------------------
# k-TSPP


class KtsppPipeline:
    """Cached LP and branching families for one k-TSPP instance."""

    def __init__(self, inst: KtsppInstance, lp: Optional[LpSolution] = None,
                 decompose_kw: Optional[dict] = None):
        self.inst = inst
        self.norm = normalize_ktspp(inst)
        self.work = self.norm.instance
        self.lp = lp if lp is not None else solve_ktspp_lp(self.work)
        self.tg = compute_tau_gamma(self.lp, self.work)
        self._decompose_kw = decompose_kw or {}
        self._families = None

    @property
    def families(self) -> list:
        if self._families is None:
            self._families = [decompose_pair(self.work, self.lp, i, **self._decompose_kw)
                              for i in range(self.work.k)]
        return self._families

    def bound_ratio(self, algorithm: str):
        tg = self.tg
        if algorithm == "warmup":
            return warmup_ratio(tg.tau)
        if algorithm == "final":
            return final_ratio(tg.tau, tg.gamma_coin)
        if algorithm == "baseline3":
            return baseline3_ratio(tg.tau)
        raise InvalidParams(f"unknown algorithm {algorithm!r}")

    def _artifacts(self, algorithm, seed, trial):
        wm = self.work.metric
        return RunArtifacts("ktspp", algorithm, seed, trial, self.inst.metric, wm, wm)

    def _finish(self, art: RunArtifacts, paths: list, T_prime, extra_ledger=()):
        work = self.work
        wm = work.metric
        forest = min_rooted_forest(wm, T_prime)
        terminals = set(work.terminals)
        merged = _dedupe_free(paths, terminals)
        merged = graft_cycles_into_paths(merged, double_forest_to_cycles(forest))
        total = sum((walk_cost(wm, p) for p in merged), Fraction(0))
        sol = self.norm.to_original(SolutionPaths(merged, total))
        art.t_prime = sorted(T_prime)
        art.forest = forest
        art.costs["forest"] = forest.total_cost
        art.costs["solution"] = total
        art.solution = sol
        art.ledger.append(LedgerEntry("cost <= paths + 2 forest", total,
                                      art.costs["paths"] + 2 * forest.total_cost))
        art.ledger.extend(extra_ledger)
        return sol, art

    def sample(self, algorithm: str, seed: int, trial: int):
        """One branching and one coin per pair, drawn from stream ``(seed, trial, i)``.

        Warmup never flips, so its coins are all heads.
        """
        bs, heads = [], []
        for i, fam in enumerate(self.families):
            rng = stream(seed, trial, i)
            bs.append(sample_branching(fam, rng))
            heads.append(True if algorithm == "warmup" else bernoulli(self.tg.gamma_coin, rng))
        return bs, heads

    def run(self, algorithm: str, seed: int = 0, trial: int = 0):
        if algorithm == "baseline3":
            return self.run_baseline3(seed, trial)
        if algorithm not in ("warmup", "final"):
            raise InvalidParams(f"unknown algorithm {algorithm!r}")
        work = self.work
        wm = work.metric
        art = self._artifacts(algorithm, seed, trial)
        if self.tg.degenerate:
            paths = [[s, t] for s, t in work.pairs]
            art.branchings = [None] * work.k
            art.coins = [None] * work.k
            art.paths = paths
            art.costs["branchings"] = Fraction(0)
            art.costs["paths"] = sum((walk_cost(wm, p) for p in paths), Fraction(0))
            return self._finish(art, paths, set(work.terminals))
        bs, flips = self.sample(algorithm, seed, trial)
        paths, per_pair = [], []
        for i, (s, t) in enumerate(work.pairs):
            B, heads = bs[i], flips[i]
            if heads:
                P = branching_to_path(B, t)
                cP = walk_cost(wm, P)
                per_pair.append(LedgerEntry(f"c(P_{i}) <= 2c(B_{i}) - c(path)", cP,
                                            2 * B.cost(wm) - walk_cost(wm, B.path_to(t))))
            else:
                P = [s, t]
            paths.append(P)
        T_prime = set()
        for P in paths:
            T_prime.update(P)
        art.branchings = bs
        art.coins = flips if algorithm == "final" else [None] * work.k
        art.paths = paths
        art.costs["branchings"] = sum((b.cost(wm) for b in bs), Fraction(0))
        art.costs["paths"] = sum((walk_cost(wm, p) for p in paths), Fraction(0))
        return self._finish(art, paths, T_prime, per_pair)

    def run_baseline3(self, seed: int = 0, trial: int = 0):
        work = self.work
        art = self._artifacts("baseline3", seed, trial)
        paths = [[s, t] for s, t in work.pairs]
        art.paths = paths
        art.costs["paths"] = self.tg.delta
        sol, art = self._finish(art, paths, set(work.terminals))
        art.ledger.append(LedgerEntry("c_T <= OPT_LP", art.forest.total_cost, self.tg.opt_lp))
        art.ledger.append(LedgerEntry("cost <= (3 - tau) OPT_LP", sol.total_cost,
                                      baseline3_ratio(self.tg.tau) * self.tg.opt_lp))
        return sol, art


def _check_ktspp(inst):
    if not isinstance(inst, KtsppInstance):
        raise InvalidParams("expected a k-TSPP instance")


def solve_ktspp_warmup(inst: KtsppInstance, seed: int = 0, trial: int = 0,
                       pipeline: Optional[KtsppPipeline] = None):
    _check_ktspp(inst)
    return (pipeline or KtsppPipeline(inst)).run("warmup", seed, trial)


def solve_ktspp_final(inst: KtsppInstance, seed: int = 0, trial: int = 0,
                      pipeline: Optional[KtsppPipeline] = None):
    _check_ktspp(inst)
    return (pipeline or KtsppPipeline(inst)).run("final", seed, trial)


def solve_ktspp_baseline3(inst: KtsppInstance, pipeline: Optional[KtsppPipeline] = None) -> SolutionPaths:
    """Doubled minimum forest rooted at all endpoints, grafted onto direct edges."""
    _check_ktspp(inst)
    if pipeline is None:
        norm = normalize_ktspp(inst)
        work = norm.instance
        forest = min_rooted_forest(work.metric, set(work.terminals))
        paths = graft_cycles_into_paths([[s, t] for s, t in work.pairs],
                                        double_forest_to_cycles(forest))
        total = sum((walk_cost(work.metric, p) for p in paths), Fraction(0))
        return norm.to_original(SolutionPaths(paths, total))
    return pipeline.run_baseline3()[0]


def best_of(inst: KtsppInstance, algorithms: Sequence[str], seeds: Sequence[int] = (0,),
            pipeline: Optional[KtsppPipeline] = None) -> SolutionPaths:
    """Cheapest output over every (algorithm, seed); earliest wins ties."""
    if not algorithms:
        raise InvalidParams("need at least one algorithm")
    pipe = pipeline or KtsppPipeline(inst)
    best = None
    for alg in algorithms:
        for seed in (seeds if alg != "baseline3" else seeds[:1]):
            sol, _ = pipe.run(alg, seed)
            if best is None or sol.total_cost < best.total_cost:
                best = sol
    return best


# --------------------------------------------------------------------------
# OTSP


class OtspPipeline:
    """Cached reduction, LP and branching families for one OTSP instance."""

    def __init__(self, inst: OtspInstance, lp: Optional[LpSolution] = None,
                 decompose_kw: Optional[dict] = None):
        self.inst = inst
        self.red, self.origin = otsp_to_ktspp(inst)
        self.lp = lp if lp is not None else solve_ktspp_lp(self.red)
        self._decompose_kw = decompose_kw or {}
        self._families = None

    @property
    def opt_lp(self) -> Fraction:
        return self.lp.objective

    @property
    def families(self) -> list:
        if self._families is None:
            self._families = [decompose_pair(self.red, self.lp, i, **self._decompose_kw)
                              for i in range(self.red.k)]
        return self._families

    def sample(self, seed: int, trial: int) -> list:
        return [sample_branching(f, stream(seed, trial, i)) for i, f in enumerate(self.families)]

    def t_prime(self, branchings) -> set:
        return {self.origin[v] for b in branchings for v in b.nodes}

    def run(self, seed: int = 0, trial: int = 0):
        m = self.inst.metric
        wm = self.red.metric
        org = self.origin
        bs = self.sample(seed, trial)
        art = RunArtifacts("otsp", "final", seed, trial, m, wm, m)
        spines, extra = [], []
        for i, B in enumerate(bs):
            t = self.red.pairs[i][1]
            spine = B.path_to(t)
            on = set(zip(spine, spine[1:]))
            spines.append(spine)
            extra.extend((org[u], org[v], wm.c(u, v)) for u, v in B.arcs if (u, v) not in on)
        T_prime = self.t_prime(bs)
        forest = min_rooted_forest(m, T_prime)
        extra.extend(forest.edges)
        odd = odd_degree_nodes(WeightedMultigraph(m.n, tuple(extra)))
        pairs, cJ = min_weight_perfect_matching(m, odd)
        join = [(u, v, m.c(u, v)) for u, v in pairs]
        tour = assemble_otsp_tour([[org[v] for v in sp] for sp in spines], extra, join, m)
        cB = sum((b.cost(wm) for b in bs), Fraction(0))
        art.branchings = bs
        art.paths = spines
        art.t_prime = sorted(T_prime)
        art.forest = forest
        art.join = [tuple(p) for p in pairs]
        art.odd = odd
        art.extra_edges = extra
        art.costs.update({"branchings": cB, "paths": sum((walk_cost(wm, p) for p in spines), Fraction(0)),
                          "forest": forest.total_cost, "join": cJ, "solution": tour.total_cost})
        art.solution = tour
        art.ledger.append(LedgerEntry("c(J) <= OPT_LP/2", cJ, self.opt_lp / 2))
        art.ledger.append(LedgerEntry("cost <= c(B) + c(F) + c(J)", tour.total_cost,
                                      cB + forest.total_cost + cJ))
        art.ledger.append(LedgerEntry("cost <= c(B) + c(F) + OPT_LP/2", tour.total_cost,
                                      cB + forest.total_cost + self.opt_lp / 2))
        return tour, art


def solve_otsp(inst: OtspInstance, seed: int = 0, trial: int = 0,
               pipeline: Optional[OtspPipeline] = None):
    if not isinstance(inst, OtspInstance):
        raise InvalidParams("expected an OTSP instance")
    return (pipeline or OtspPipeline(inst)).run(seed, trial)
