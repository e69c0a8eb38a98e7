"""Seeded Monte-Carlo experiments and their CSV/JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Optional

from .algorithms import KTSPP_ALGORITHMS, KtsppPipeline, OtspPipeline, otsp_ratio
from .errors import BudgetExceeded, ConfigError, EmptyInput, RouteLPError
from .instance import GENERATOR_KINDS, frac_str, generate_instance, verify_ktspp_solution, verify_otsp_solution
from .oracles import brute_ktspp, brute_otsp

PARALLELISM_ENV = "ROUTELP_PARALLELISM"


def default_parallelism() -> int:
    raw = os.environ.get(PARALLELISM_ENV, "1")
    try:
        p = int(raw)
    except ValueError:
        raise ConfigError(f"{PARALLELISM_ENV}={raw!r} is not an integer")
    if p < 1:
        raise ConfigError(f"{PARALLELISM_ENV} must be positive")
    return p


@dataclass
class ExperimentConfig:
    problem: str = "ktspp"
    generator: str = "mixed"  # a generator kind, or "mixed" to cycle through all
    n: int = 8
    k: int = 2
    instances: int = 5
    base_seed: int = 0
    algorithms: list = field(default_factory=lambda: ["final"])
    trials: int = 100
    output_csv: Optional[str] = None
    output_json: Optional[str] = None
    parallelism: Optional[int] = None
    heuristic_matching: bool = False
    oracle: bool = True

    def validate(self):
        if self.problem not in ("otsp", "ktspp"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.generator != "mixed" and self.generator not in GENERATOR_KINDS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.instances < 1:
            raise ConfigError("instances must be at least 1")
        if self.k < 1 or self.n < (self.k if self.problem == "otsp" else 2 * self.k):
            raise ConfigError(f"n={self.n}, k={self.k} infeasible for {self.problem}")
        allowed = ("final",) if self.problem == "otsp" else KTSPP_ALGORITHMS
        if not self.algorithms or any(a not in allowed for a in self.algorithms):
            raise ConfigError(f"algorithms must be a nonempty subset of {allowed}")
        if self.parallelism is not None and self.parallelism < 1:
            raise ConfigError("parallelism must be positive")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def instance_seed(self, idx: int) -> int:
        return self.base_seed + idx

    def instance_kind(self, idx: int) -> str:
        return GENERATOR_KINDS[idx % len(GENERATOR_KINDS)] if self.generator == "mixed" else self.generator


@dataclass
class ReportRow:
    instance_id: int
    algorithm: str
    opt_lp: str
    delta: str
    tau: str
    gamma: float
    mean_cost: float
    stddev: float
    min_cost: str
    oracle_opt: str
    ratio: Optional[float]
    bound: float
    passed: bool
    error: str = ""


def _stats(costs):
    t = len(costs)
    mean = sum(costs, Fraction(0)) / t
    if t < 2:
        return mean, 0.0
    var = sum(((c - mean) ** 2 for c in costs), Fraction(0)) / (t - 1)
    return mean, math.sqrt(float(var))


def _error_row(cfg, idx, alg, exc) -> ReportRow:
    return ReportRow(idx, alg, "", "", "", float("nan"), float("nan"), float("nan"), "", "", None,
                     float("nan"), False, f"{type(exc).__name__}: {exc}")


def run_instance(cfg: ExperimentConfig, idx: int) -> list:
    """All rows for instance ``idx``; solver errors become rows, never exceptions."""
    seed = cfg.instance_seed(idx)
    try:
        inst = generate_instance(cfg.instance_kind(idx), cfg.n, cfg.k, seed, cfg.problem)
        pipe = OtspPipeline(inst) if cfg.problem == "otsp" else KtsppPipeline(inst)
    except RouteLPError as exc:
        return [_error_row(cfg, idx, a, exc) for a in cfg.algorithms]
    oracle = None
    if cfg.oracle:
        try:
            oracle = (brute_otsp(inst) if cfg.problem == "otsp" else brute_ktspp(inst)).total_cost
        except BudgetExceeded:
            oracle = None
    rows = []
    for alg in cfg.algorithms:
        try:
            rows.append(_run_algorithm(cfg, inst, pipe, alg, seed, oracle, idx))
        except RouteLPError as exc:
            rows.append(_error_row(cfg, idx, alg, exc))
    return rows


def _run_algorithm(cfg, inst, pipe, alg, seed, oracle, idx) -> ReportRow:
    otsp = cfg.problem == "otsp"
    verify = verify_otsp_solution if otsp else verify_ktspp_solution
    opt_lp = pipe.opt_lp if otsp else pipe.tg.opt_lp
    runs = 1 if alg == "baseline3" else cfg.trials
    costs = []
    ledger_ok = True
    feasible = True
    for trial in range(runs):
        sol, art = pipe.run(seed, trial) if otsp else pipe.run(alg, seed, trial)
        feasible &= bool(verify(inst, sol))
        ledger_ok &= not art.failed_checks() and not art.audit()
        costs.append(sol.total_cost)
    mean, sd = _stats(costs)
    lo = min(costs)
    if otsp:
        ratio_bound = otsp_ratio()
        tau, gamma, delta = "", float("nan"), ""
    else:
        ratio_bound = pipe.bound_ratio(alg)
        tg = pipe.tg
        tau, gamma, delta = frac_str(tg.tau), tg.gamma, frac_str(tg.delta)
    bound = float(ratio_bound) * float(opt_lp)
    ok = feasible and ledger_ok
    if runs > 1:
        ok &= float(mean) <= bound + 3 * sd / math.sqrt(runs)
    if oracle is not None:
        ok &= opt_lp <= oracle <= lo
    ratio = float(mean / opt_lp) if opt_lp > 0 else None
    return ReportRow(idx, alg, frac_str(opt_lp), delta, tau, gamma, float(mean), sd, frac_str(lo),
                     "" if oracle is None else frac_str(oracle), ratio, bound, bool(ok))


def _unit(args):
    cfg, idx = args
    return run_instance(cfg, idx)


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run every instance (in parallel if configured) and write the reports.

    Rows are ordered by instance id then by the configured algorithm order, so
    output does not depend on the degree of parallelism.
    """
    cfg.validate()
    par = cfg.parallelism or default_parallelism()
    units = [(cfg, idx) for idx in range(cfg.instances)]
    if par == 1:
        chunks = [_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=par) as ex:
            chunks = list(ex.map(_unit, units))
    order = {a: j for j, a in enumerate(cfg.algorithms)}
    rows = sorted((r for ch in chunks for r in ch), key=lambda r: (r.instance_id, order[r.algorithm]))
    if cfg.output_csv:
        with open(cfg.output_csv, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    if cfg.output_json:
        with open(cfg.output_json, "w") as fh:
            fh.write(rows_to_json(rows))
    return rows


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(ReportRow)]
    w.writerow(names)
    for r in rows:
        w.writerow([_cell(getattr(r, nm)) for nm in names])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v
    return json.dumps([{k: clean(v) for k, v in asdict(r).items()} for r in rows], indent=1) + "\n"


def summarize(rows) -> list:
    """Per-algorithm worst ratio, mean ratio and pass rate."""
    rows = list(rows)
    if not rows:
        raise EmptyInput("no rows to summarize")
    groups = {}
    for r in rows:
        groups.setdefault(r.algorithm, []).append(r)
    out = []
    for alg, rs in groups.items():
        ratios = [Fraction(r.ratio) for r in rs if r.ratio is not None]
        out.append({
            "algorithm": alg,
            "rows": len(rs),
            "worst_ratio": float(max(ratios)) if ratios else None,
            "mean_ratio": float(sum(ratios) / len(ratios)) if ratios else None,
            "pass_rate": float(Fraction(sum(1 for r in rs if r.passed), len(rs))),
        })
    return out
