"""``routelp`` command line: generation, solving, oracles, checks and benchmarks.

Exit codes: 0 ok, 1 infeasible or failed verification, 2 input error,
3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import algorithms as alg
from .bench import ExperimentConfig, rows_to_csv, run_experiment, summarize
from .errors import (BudgetExceeded, ConfigError, InvalidInstance, InvalidParams, ParseError,
                     RouteLPError)
from .flows import family_to_dict
from .forests import bridge_montecarlo, independent_sampler
from .instance import (GENERATOR_KINDS, KtsppInstance, OtspInstance, frac_str, generate_instance,
                       read_instance, solution_from_dict, solution_to_dict, verify_ktspp_solution,
                       verify_otsp_solution, write_instance)
from .lp import lp_solution_from_dict, lp_solution_to_dict, lp_solution_violations, solve_ktspp_lp
from .oracles import brute_ktspp, brute_min_ojoin, brute_otsp, brute_rooted_forest

OK, FAILED, INPUT_ERROR, INTERNAL = 0, 1, 2, 3


class _Fail(Exception):
    """Result is well-formed but infeasible or fails a check."""


def _emit(obj, out=None):
    text = json.dumps(obj, indent=1) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    try:
        with open(path, "rb") as fh:
            return read_instance(fh.read())
    except OSError as exc:
        raise InvalidParams(f"cannot read {path}: {exc}") from exc


def _expect(inst, kind):
    want = OtspInstance if kind == "otsp" else KtsppInstance
    if not isinstance(inst, want):
        raise InvalidInstance(f"instance is not a {kind} instance")


def _as_ktspp(inst):
    """The k-TSPP instance the LP is solved on (OTSP instances are reduced)."""
    if isinstance(inst, OtspInstance):
        return alg.otsp_to_ktspp(inst)[0]
    return alg.normalize_ktspp(inst).instance


# --------------------------------------------------------------------------
# commands


def cmd_gen(a):
    inst = generate_instance(a.kind, a.n, a.k, a.seed, a.problem)
    data = write_instance(inst)
    if a.output:
        with open(a.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode() + "\n")


def cmd_solve(a):
    inst = _load(a.instance)
    _expect(inst, a.problem)
    runs = []
    if a.problem == "otsp":
        if a.algorithm not in ("final", "best"):
            raise InvalidParams("OTSP supports --algorithm final")
        pipe = alg.OtspPipeline(inst)
        for trial in range(a.trials):
            runs.append(pipe.run(a.seed, trial))
        verify = verify_otsp_solution
        extra = {"optLp": frac_str(pipe.opt_lp)}
    else:
        pipe = alg.KtsppPipeline(inst)
        names = list(alg.KTSPP_ALGORITHMS) if a.algorithm == "best" else [a.algorithm]
        for name in names:
            for trial in range(1 if name == "baseline3" else a.trials):
                runs.append(pipe.run(name, a.seed, trial))
        verify = verify_ktspp_solution
        tg = pipe.tg
        extra = {"optLp": frac_str(tg.opt_lp), "delta": frac_str(tg.delta), "tau": frac_str(tg.tau),
                 "gamma": tg.gamma, "degenerate": tg.degenerate}
    best_sol, best_art = min(runs, key=lambda r: r[0].total_cost)
    out = {"solution": solution_to_dict(best_sol), "algorithm": best_art.algorithm,
           "trial": best_art.trial, "costs": [frac_str(s.total_cost) for s, _ in runs],
           "ledger": [{"name": e.name, "lhs": frac_str(e.lhs), "rhs": frac_str(e.rhs), "holds": e.holds}
                      for e in best_art.ledger], **extra}
    if a.dump_intermediate:
        out["intermediate"] = [art.to_dict() for _, art in runs]
    _emit(out, a.output)
    breaches = [(art.trial, e.name) for _, art in runs for e in art.failed_checks()]
    breaches += [(art.trial, msg) for _, art in runs for msg in art.audit()]
    if breaches:
        raise alg.InvariantBreach(f"ledger breach: {breaches[:3]}")
    bad = [v.reason for s, _ in runs for v in [verify(inst, s)] if not v]
    if bad:
        raise _Fail(bad[0])


def cmd_oracle(a):
    inst = _load(a.instance)
    if a.what in ("otsp", "ktspp"):
        _expect(inst, a.what)
        sol = brute_otsp(inst) if a.what == "otsp" else brute_ktspp(inst)
        _emit({"solution": solution_to_dict(sol), "optimum": frac_str(sol.total_cost)})
        return
    m = inst.metric
    if a.what == "forest":
        T = a.terminals if a.terminals is not None else (
            list(inst.order) if isinstance(inst, OtspInstance) else list(inst.terminals))
        f = brute_rooted_forest(m, T)
        _emit({"edges": [[u, v] for u, v, _ in f.edges], "cost": frac_str(f.total_cost)})
        return
    O = a.odd if a.odd is not None else []
    if len(O) % 2:
        raise InvalidParams("--odd needs an even number of nodes")
    _emit({"cost": frac_str(brute_min_ojoin(m, O))})


def cmd_lp(a):
    inst = _load(a.instance)
    sol = solve_ktspp_lp(_as_ktspp(inst), max_rounds=a.max_rounds)
    _emit(lp_solution_to_dict(sol), a.output)


def cmd_decompose(a):
    inst = _load(a.instance)
    work = _as_ktspp(inst)
    if not 0 <= a.pair < work.k:
        raise InvalidParams(f"pair {a.pair} out of range 0..{work.k - 1}")
    if a.lp:
        try:
            with open(a.lp) as fh:
                lp = lp_solution_from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ParseError(f"cannot read LP solution {a.lp}: {exc}") from exc
        bad = lp_solution_violations(work, lp)
        if bad:
            raise InvalidInstance(f"LP solution infeasible: {bad[0]}")
    else:
        lp = solve_ktspp_lp(work)
    fam = alg.decompose_pair(work, lp, a.pair)
    _emit({"pair": a.pair, "optLp": frac_str(lp.objective), **family_to_dict(fam)}, a.output)


def cmd_bridge(a):
    inst = _load(a.instance)
    T = sorted(set(inst.order) if isinstance(inst, OtspInstance) else set(inst.terminals))
    if not 0 <= a.gamma <= 1:
        raise InvalidParams("--gamma must lie in [0, 1]")
    nonterm = [v for v in range(inst.metric.n) if v not in T]
    res = bridge_montecarlo(inst.metric, T, independent_sampler(nonterm, 1 - a.gamma),
                            a.gamma, a.trials, a.seed)
    _emit(res)
    if not res["pass"]:
        raise _Fail("bridge bound failed")


def cmd_bench(a):
    cfg = ExperimentConfig.load(a.config)
    if a.parallelism is not None:
        cfg.parallelism = a.parallelism
    rows = run_experiment(cfg)
    if not cfg.output_csv:
        sys.stdout.write(rows_to_csv(rows))
    for s in summarize(rows):
        sys.stderr.write(json.dumps(s) + "\n")
    if not all(r.passed for r in rows):
        raise _Fail("some rows did not pass")


def cmd_verify(a):
    inst = _load(a.instance)
    try:
        with open(a.solution) as fh:
            sol = solution_from_dict(json.load(fh))
    except OSError as exc:
        raise InvalidParams(f"cannot read {a.solution}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    if isinstance(inst, OtspInstance):
        v = verify_otsp_solution(inst, sol) if hasattr(sol, "tour") else None
    else:
        v = verify_ktspp_solution(inst, sol) if hasattr(sol, "paths") else None
    if v is None:
        raise ParseError("solution kind does not match the instance")
    _emit({"ok": v.ok, "reason": v.reason})
    if not v:
        raise _Fail(v.reason)


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="routelp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--problem", choices=("otsp", "ktspp"), default="ktspp")
    g.add_argument("--kind", choices=GENERATOR_KINDS, default="euclidean2d")
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run a rounding algorithm")
    s.add_argument("problem", choices=("otsp", "ktspp"))
    s.add_argument("instance")
    s.add_argument("--algorithm", choices=("final", "warmup", "baseline3", "best"), default="final")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--dump-intermediate", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exact brute-force optimum")
    o.add_argument("what", choices=("otsp", "ktspp", "forest", "ojoin"))
    o.add_argument("instance")
    o.add_argument("--terminals", type=int, nargs="*")
    o.add_argument("--odd", type=int, nargs="*")
    o.set_defaults(func=cmd_oracle)

    lp = sub.add_parser("lp", help="LP relaxation")
    lps = lp.add_subparsers(dest="lp_command", required=True)
    ls = lps.add_parser("solve")
    ls.add_argument("instance")
    ls.add_argument("--max-rounds", type=int, default=100)
    ls.add_argument("-o", "--output")
    ls.set_defaults(func=cmd_lp)

    d = sub.add_parser("decompose", help="branching family for one pair")
    d.add_argument("instance")
    d.add_argument("--pair", type=int, default=0)
    d.add_argument("--lp", help="LP solution JSON from `lp solve` (solved afresh if omitted)")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("bridge-check", help="Monte-Carlo forest bound check")
    b.add_argument("instance")
    b.add_argument("--gamma", type=float, required=True)
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bridge)

    be = sub.add_parser("bench", help="run an experiment config")
    be.add_argument("config")
    be.add_argument("--parallelism", type=int)
    be.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check a solution file")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 1:
        sys.stderr.write("error: --trials must be at least 1\n")
        return INPUT_ERROR
    try:
        args.func(args)
    except _Fail as exc:
        sys.stderr.write(f"failed: {exc}\n")
        return FAILED
    except alg.InvariantBreach as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return INTERNAL
    except (ParseError, InvalidInstance, InvalidParams, ConfigError, BudgetExceeded) as exc:
        sys.stderr.write(f"input error: {type(exc).__name__}: {exc}\n")
        return INPUT_ERROR
    except RouteLPError as exc:
        sys.stderr.write(f"failed: {type(exc).__name__}: {exc}\n")
        return FAILED
    return OK


if __name__ == "__main__":
    sys.exit(main())
