"""Exact rational linear programming and the cutting-plane k-TSPP relaxation.

The simplex works on a fraction-free integer tableau: every row is kept as
integers over one common denominator ``d`` (the basis determinant), and a
pivot updates entries by the Bareiss rule ``(a*p - b*c) // d``, which always
divides exactly. Bland's rule is used for both the primal and the dual
simplex, so the method terminates on degenerate problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import CutRoundLimit, InvalidInstance, IterationLimit
from .flows import min_cut_sink_side
from .instance import KtsppInstance, frac_str

OPTIMAL, INFEASIBLE, UNBOUNDED = "Optimal", "Infeasible", "Unbounded"


@dataclass
class LpProblem:
    lower: list = field(default_factory=list)  # Fraction or None (free)
    upper: list = field(default_factory=list)  # Fraction or None
    rows: list = field(default_factory=list)  # (dict var->coef, sense, rhs)
    objective: dict = field(default_factory=dict)
    names: list = field(default_factory=list)

    @property
    def n_vars(self):
        return len(self.lower)

    def add_var(self, name="", lo=Fraction(0), hi=None, cost=0):
        self.lower.append(None if lo is None else Fraction(lo))
        self.upper.append(None if hi is None else Fraction(hi))
        self.names.append(name)
        j = len(self.lower) - 1
        if cost:
            self.objective[j] = Fraction(cost)
        return j

    def add_row(self, coefs: dict, sense: str, rhs):
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"bad sense {sense!r}")
        coefs = {j: Fraction(a) for j, a in coefs.items() if a != 0}
        for j in coefs:
            if not 0 <= j < self.n_vars:
                raise ValueError(f"row references unknown variable {j}")
        self.rows.append((coefs, sense, Fraction(rhs)))
        return len(self.rows) - 1

    def validate(self):
        for j, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"variable {j} has lo > hi")


@dataclass
class LpResult:
    status: str
    x: Optional[list] = None
    objective: Optional[Fraction] = None
    pivots: int = 0


def _lcm_den(values) -> int:
    L = 1
    for v in values:
        den = Fraction(v).denominator
        L = L * den // math.gcd(L, den)
    return L


class SimplexSolver:
    """Two-phase primal simplex with warm-started dual simplex for added rows."""

    def __init__(self, problem: LpProblem, max_pivots: int = 200000):
        problem.validate()
        self.p = problem
        self.max_pivots = max_pivots
        self.pivots = 0
        self.status = None
        self._build()

    # ---- standard form ---------------------------------------------------
    def _build(self):
        p = self.p
        n = p.n_vars
        # column layout: one or two structural columns per variable
        self.colmap = []  # var -> list of (column, sign)
        self.shift = []
        ncol = 0
        for j in range(n):
            lo = p.lower[j]
            if lo is None:
                self.colmap.append([(ncol, 1), (ncol + 1, -1)])
                self.shift.append(Fraction(0))
                ncol += 2
            else:
                self.colmap.append([(ncol, 1)])
                self.shift.append(lo)
                ncol += 1
        self.n_struct = ncol
        rows = list(p.rows)
        for j in range(n):
            if p.upper[j] is not None:
                rows.append(({j: Fraction(1)}, "<=", p.upper[j]))
        std = []
        for coefs, sense, rhs in rows:
            cols = {}
            b = rhs
            for j, a in coefs.items():
                b -= a * self.shift[j]
                for c, sgn in self.colmap[j]:
                    cols[c] = cols.get(c, 0) + sgn * a
            std.append((cols, sense, b))
        # presolve: equality rows forcing nonnegative columns to zero
        self.fixed = set()
        changed = True
        while changed:
            changed = False
            for cols, sense, b in std:
                live = {c: a for c, a in cols.items() if c not in self.fixed and a != 0}
                if sense == "==" and b == 0 and live and (
                        all(a > 0 for a in live.values()) or all(a < 0 for a in live.values())):
                    self.fixed.update(live)
                    changed = True
        kept = []
        for cols, sense, b in std:
            live = {c: a for c, a in cols.items() if c not in self.fixed and a != 0}
            if not live:
                ok = (b == 0) if sense == "==" else (b >= 0 if sense == "<=" else b <= 0)
                if not ok:
                    self.status = INFEASIBLE
                continue
            kept.append((live, sense, b))
        self.std_rows = kept
        self.live_cols = [c for c in range(self.n_struct) if c not in self.fixed]
        self.col_index = {c: i for i, c in enumerate(self.live_cols)}
        c_obj = [Fraction(0)] * self.n_struct
        for j, a in p.objective.items():
            for c, sgn in self.colmap[j]:
                c_obj[c] += sgn * a
        self.c_struct = [c_obj[c] for c in self.live_cols]

    def _integer_row(self, live: dict, sense: str, b: Fraction):
        """Row over live structural columns scaled to integers, plus slack sign and rhs."""
        L = _lcm_den(list(live.values()) + [b])
        ints = {self.col_index[c]: int(a * L) for c, a in live.items()}
        rhs = int(b * L)
        slack = 0 if sense == "==" else (1 if sense == "<=" else -1)
        if rhs < 0:
            ints = {c: -a for c, a in ints.items()}
            rhs = -rhs
            slack = -slack
        return ints, slack, rhs

    # ---- pivoting ----------------------------------------------------------
    def _pivot(self, i, j):
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise IterationLimit(f"simplex exceeded {self.max_pivots} pivots")
        T = self.T
        if T[i][j] < 0:
            T[i] = [-v for v in T[i]]
        p = T[i][j]
        d = self.d
        Ti = T[i]
        for r in range(len(T)):
            if r == i:
                continue
            row = T[r]
            f = row[j]
            if f == 0:
                if p != d:
                    T[r] = [v * p // d for v in row]
            else:
                T[r] = [(v * p - f * w) // d for v, w in zip(row, Ti)]
        self.d = p
        self.basis[i] = j

    def _primal(self, allowed_cols):
        """Bland's-rule primal simplex on the objective row (last row)."""
        T = self.T
        m = len(T) - 1
        while True:
            obj = T[m]
            j = next((c for c in allowed_cols if obj[c] < 0), None)
            if j is None:
                return OPTIMAL
            best = None
            for r in range(m):
                a = T[r][j]
                if a > 0:
                    b = T[r][-1]
                    if best is None:
                        best = r
                    else:
                        bb, ab = T[best][-1], T[best][j]
                        lhs, rhs = b * ab, bb * a
                        if lhs < rhs or (lhs == rhs and self.basis[r] < self.basis[best]):
                            best = r
            if best is None:
                return UNBOUNDED
            self._pivot(best, j)
            T = self.T

    def _dual(self):
        """Bland's-rule dual simplex; requires a dual-feasible objective row."""
        T = self.T
        m = len(T) - 1
        while True:
            leave = None
            for r in range(m):
                if T[r][-1] < 0 and (leave is None or self.basis[r] < self.basis[leave]):
                    leave = r
            if leave is None:
                return OPTIMAL
            row = T[leave]
            obj = T[m]
            best = None
            for c in range(len(row) - 1):
                a = row[c]
                if a < 0:
                    if best is None:
                        best = c
                    else:
                        # compare obj[c]/-a against obj[best]/-row[best]
                        lhs = obj[c] * (-row[best])
                        rhs = obj[best] * (-a)
                        if lhs < rhs:
                            best = c
            if best is None:
                return INFEASIBLE
            self._pivot(leave, best)
            T = self.T

    # ---- phases ---------------------------------------------------------
    def solve(self) -> LpResult:
        if self.status == INFEASIBLE:
            return LpResult(INFEASIBLE, pivots=self.pivots)
        nlive = len(self.live_cols)
        rows = [self._integer_row(*r) for r in self.std_rows]
        n_slack = sum(1 for _, s, _ in rows if s != 0)
        need_art = [i for i, (_, s, _) in enumerate(rows) if s != 1]
        ncols = nlive + n_slack + len(need_art)
        self.slack_of_row = {}
        T = []
        basis = []
        sc = nlive
        ac = nlive + n_slack
        art_cols = []
        for i, (ints, slack, rhs) in enumerate(rows):
            row = [0] * (ncols + 1)
            for c, a in ints.items():
                row[c] = a
            if slack != 0:
                row[sc] = slack
                self.slack_of_row[i] = sc
                if slack == 1:
                    basis.append(sc)
                sc += 1
            if slack != 1:
                row[ac] = 1
                basis.append(ac)
                art_cols.append(ac)
                ac += 1
            row[-1] = rhs
            T.append(row)
        self.ncols = ncols
        self.d = 1
        self.basis = basis
        art = set(art_cols)
        # phase 1
        obj = [0] * (ncols + 1)
        for r, b in enumerate(basis):
            if b in art:
                for c in range(ncols + 1):
                    if c not in art:
                        obj[c] -= T[r][c]
        T.append(obj)
        self.T = T
        if art:
            status = self._primal([c for c in range(ncols) if c not in art])
            if self.T[-1][-1] != 0:
                self.status = INFEASIBLE
                return LpResult(INFEASIBLE, pivots=self.pivots)
            # drive remaining artificials out of the basis
            r = 0
            while r < len(self.T) - 1:
                if self.basis[r] in art:
                    row = self.T[r]
                    j = next((c for c in range(ncols) if c not in art and row[c] != 0), None)
                    if j is None:
                        del self.T[r]
                        del self.basis[r]
                        continue
                    self._pivot(r, j)
                r += 1
            keep = [c for c in range(ncols) if c not in art] + [ncols]
            remap = {c: i for i, c in enumerate(keep)}
            self.T = [[row[c] for c in keep] for row in self.T]
            self.basis = [remap[b] for b in self.basis]
            self.ncols = len(keep) - 1
        self.T[-1] = self._objective_row()
        status = self._primal(list(range(self.ncols)))
        self.status = status
        return self._result()

    def _objective_row(self):
        L = _lcm_den(self.c_struct) if self.c_struct else 1
        c = [int(a * L) for a in self.c_struct] + [0] * (self.ncols - len(self.c_struct))
        self.obj_scale = L
        d = self.d
        row = [cj * d for cj in c] + [0]
        for r, b in enumerate(self.basis):
            cb = c[b]
            if cb:
                Tr = self.T[r]
                row = [v - cb * w for v, w in zip(row, Tr)]
        return row

    def add_rows(self, new_rows: list) -> LpResult:
        """Append rows (over problem variables) and re-optimize by dual simplex.

        The current basis must be optimal; every new row gets its own slack.
        """
        if self.status != OPTIMAL:
            raise RuntimeError("add_rows requires an optimal basis")
        for coefs, sense, rhs in new_rows:
            self.p.rows.append((dict(coefs), sense, Fraction(rhs)))
            cols = {}
            b = Fraction(rhs)
            for j, a in coefs.items():
                a = Fraction(a)
                b -= a * self.shift[j]
                for c, sgn in self.colmap[j]:
                    if c in self.fixed:
                        continue
                    cols[c] = cols.get(c, 0) + sgn * a
            if sense == "==":
                raise ValueError("only inequality rows can be added")
            # as a <= row with +1 slack (no sign normalization: dual simplex handles b < 0)
            if sense == ">=":
                cols = {c: -a for c, a in cols.items()}
                b = -b
            L = _lcm_den(list(cols.values()) + [b])
            g = [0] * (self.ncols + 1)
            for c, a in cols.items():
                g[self.col_index[c]] = int(a * L)
            g[-1] = int(b * L)
            d = self.d
            new = [v * d for v in g]
            for r, bcol in enumerate(self.basis):
                coef = g[bcol]
                if coef:
                    Tr = self.T[r]
                    new = [v - coef * w for v, w in zip(new, Tr)]
            # new slack column
            for row in self.T:
                row.insert(self.ncols, 0)
            new.insert(self.ncols, d)
            self.T.insert(len(self.T) - 1, new)
            self.basis.append(self.ncols)
            self.ncols += 1
        self.status = self._dual()
        return self._result()

    def _result(self) -> LpResult:
        if self.status != OPTIMAL:
            return LpResult(self.status, pivots=self.pivots)
        vals = [Fraction(0)] * len(self.live_cols)
        d = self.d
        for r, b in enumerate(self.basis):
            if b < len(self.live_cols):
                vals[b] = Fraction(self.T[r][-1], d)
        colval = {}
        for i, c in enumerate(self.live_cols):
            colval[c] = vals[i]
        x = []
        for j in range(self.p.n_vars):
            v = self.shift[j]
            for c, sgn in self.colmap[j]:
                v += sgn * colval.get(c, Fraction(0))
            x.append(v)
        obj = sum((a * x[j] for j, a in self.p.objective.items()), Fraction(0))
        return LpResult(OPTIMAL, x, obj, self.pivots)


def simplex_solve(p: LpProblem, max_pivots: int = 200000) -> LpResult:
    """Exact basic optimal solution of ``min objective`` subject to ``p``."""
    return SimplexSolver(p, max_pivots).solve()


# --------------------------------------------------------------------------
# LP-kTSPP


@dataclass
class KtsppLp:
    problem: LpProblem
    xvar: dict  # (i, (u, v)) -> variable
    zvar: dict  # (i, v) -> variable


def build_ktspp_base_lp(inst: KtsppInstance) -> KtsppLp:
    """Flow, degree and coverage rows of the relaxation; no cut rows.

    Arcs of pair ``i`` touching an endpoint of another pair are forced to
    zero: in a shortcut solution each endpoint lies only on its own path.
    """
    if not inst.has_distinct_endpoints():
        raise InvalidInstance("LP needs distinct endpoints; normalize the instance first")
    m = inst.metric
    n = m.n
    free = inst.free_nodes()
    T = set(inst.terminals)
    p = LpProblem()
    xvar, zvar = {}, {}
    for i, (s, t) in enumerate(inst.pairs):
        for u in range(n):
            for v in range(n):
                if u != v:
                    xvar[(i, (u, v))] = p.add_var(f"x[{i},{u},{v}]", cost=m.cost[u][v])
    for i in range(inst.k):
        for v in free:
            zvar[(i, v)] = p.add_var(f"z[{i},{v}]")
    for i, (s, t) in enumerate(inst.pairs):
        def out_row(u):
            return {xvar[(i, (u, v))]: 1 for v in range(n) if v != u}

        def in_row(v):
            return {xvar[(i, (u, v))]: 1 for u in range(n) if u != v}

        p.add_row(out_row(s), "==", 1)
        p.add_row(in_row(t), "==", 1)
        p.add_row(in_row(s), "==", 0)
        p.add_row(out_row(t), "==", 0)
        for v in free:
            r = in_row(v)
            r[zvar[(i, v)]] = -1
            p.add_row(r, "==", 0)
            r = out_row(v)
            r[zvar[(i, v)]] = -1
            p.add_row(r, "==", 0)
        for u in sorted(T - {s, t}):
            p.add_row(in_row(u), "==", 0)
            p.add_row(out_row(u), "==", 0)
    for v in free:
        p.add_row({zvar[(i, v)]: 1 for i in range(inst.k)}, "==", 1)
    return KtsppLp(p, xvar, zvar)


@dataclass
class LpSolution:
    x: dict  # (i, (u, v)) -> Fraction, nonzero entries only
    z: dict  # (i, v) -> Fraction for v in V \ T
    objective: Fraction
    rounds: list = field(default_factory=list)  # objective after each round

    def flow(self, i) -> dict:
        return {a: q for (j, a), q in self.x.items() if j == i}

    def pair_cost(self, inst, i) -> Fraction:
        return sum((inst.metric.cost[u][v] * q for (u, v), q in self.flow(i).items()), Fraction(0))


@dataclass(frozen=True)
class CutCertificate:
    pair: int
    node: int
    U: frozenset
    violation: Fraction


def separate(inst: KtsppInstance, cand: LpSolution) -> list:
    """Most violated cut per (pair, free node); empty iff all cut rows hold."""
    n = inst.metric.n
    nodes = tuple(range(n))
    out = []
    for i, (s, t) in enumerate(inst.pairs):
        cap = cand.flow(i)
        for v in inst.free_nodes():
            zv = cand.z.get((i, v), Fraction(0))
            if zv <= 0:
                continue
            value, U = min_cut_sink_side(nodes, cap, s, v)
            value = Fraction(value)
            if value < zv:
                out.append(CutCertificate(i, v, U, zv - value))
    return out


def _cut_row(lp: KtsppLp, inst: KtsppInstance, cert: CutCertificate):
    n = inst.metric.n
    U = cert.U
    row = {lp.xvar[(cert.pair, (u, w))]: 1 for w in U for u in range(n) if u not in U}
    row[lp.zvar[(cert.pair, cert.node)]] = -1
    return row, ">=", 0


def _lp_solution(lp: KtsppLp, res: LpResult, rounds) -> LpSolution:
    x = {key: res.x[j] for key, j in lp.xvar.items() if res.x[j] != 0}
    z = {key: res.x[j] for key, j in lp.zvar.items()}
    return LpSolution(x, z, res.objective, list(rounds))


def solve_ktspp_lp(inst: KtsppInstance, max_rounds: int = 100,
                   cuts_per_round: Optional[int] = None) -> LpSolution:
    """Cutting-plane solve of the full relaxation, exact throughout."""
    lp = build_ktspp_base_lp(inst)
    solver = SimplexSolver(lp.problem)
    res = solver.solve()
    if res.status != OPTIMAL:
        raise InvalidInstance(f"base LP is {res.status}")
    rounds = [res.objective]
    for _ in range(max_rounds):
        sol = _lp_solution(lp, res, rounds)
        cuts = separate(inst, sol)
        if not cuts:
            return sol
        cuts.sort(key=lambda c: (-c.violation, c.pair, c.node))
        if cuts_per_round is not None:
            cuts = cuts[:cuts_per_round]
        res = solver.add_rows([_cut_row(lp, inst, c) for c in cuts])
        if res.status != OPTIMAL:
            raise InvalidInstance(f"LP became {res.status} after cuts")
        rounds.append(res.objective)
    raise CutRoundLimit(f"no convergence within {max_rounds} cut rounds")


def lp_solution_violations(inst: KtsppInstance, sol: LpSolution) -> list:
    """Exact check of every LP constraint including all cut rows (via min cut)."""
    bad = []
    n = inst.metric.n
    free = inst.free_nodes()
    for i, (s, t) in enumerate(inst.pairs):
        f = sol.flow(i)
        inn = [Fraction(0)] * n
        out = [Fraction(0)] * n
        for (u, v), q in f.items():
            if q < 0:
                bad.append(f"negative x[{i},{u},{v}]")
            out[u] += q
            inn[v] += q
        if out[s] != 1 or inn[t] != 1 or inn[s] != 0 or out[t] != 0:
            bad.append(f"pair {i}: endpoint degrees wrong")
        for v in free:
            zv = sol.z.get((i, v), Fraction(0))
            if zv < 0:
                bad.append(f"negative z[{i},{v}]")
            if inn[v] != zv or out[v] != zv:
                bad.append(f"pair {i}: flow at {v} != z")
    for v in free:
        if sum(sol.z.get((i, v), Fraction(0)) for i in range(inst.k)) != 1:
            bad.append(f"coverage of {v} != 1")
    for c in separate(inst, sol):
        bad.append(f"cut violated: pair {c.pair} node {c.node} U={sorted(c.U)} by {c.violation}")
    obj = sum((inst.metric.cost[u][v] * q for (i, (u, v)), q in sol.x.items()), Fraction(0))
    if obj != sol.objective:
        bad.append("objective mismatch")
    return bad


def lp_solution_to_dict(sol: LpSolution) -> dict:
    return {
        "objective": frac_str(sol.objective),
        "x": [[i, u, v, frac_str(q)] for (i, (u, v)), q in sorted(sol.x.items())],
        "z": [[i, v, frac_str(q)] for (i, v), q in sorted(sol.z.items())],
        "rounds": [frac_str(r) for r in sol.rounds],
    }


def lp_solution_from_dict(d: dict) -> LpSolution:
    x = {(int(i), (int(u), int(v))): Fraction(q) for i, u, v, q in d["x"]}
    z = {(int(i), int(v)): Fraction(q) for i, v, q in d["z"]}
    return LpSolution(x, z, Fraction(d["objective"]), [Fraction(r) for r in d.get("rounds", [])])
