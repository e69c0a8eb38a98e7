"""Exact LP-rounding approximations for ordered TSP and k-person TSP paths."""
from .algorithms import (KtsppPipeline, OtspPipeline, best_of, branching_to_path, compute_tau_gamma,
                         solve_ktspp_baseline3, solve_ktspp_final, solve_ktspp_warmup, solve_otsp)
from .instance import (KtsppInstance, MetricInstance, OtspInstance, SolutionPaths, SolutionTour,
                       generate_instance, path_metric, verify_ktspp_solution, verify_otsp_solution)
from .lp import solve_ktspp_lp

__all__ = [
    "KtsppInstance", "KtsppPipeline", "MetricInstance", "OtspInstance", "OtspPipeline",
    "SolutionPaths", "SolutionTour", "best_of", "branching_to_path", "compute_tau_gamma",
    "generate_instance", "path_metric", "solve_ktspp_baseline3", "solve_ktspp_final",
    "solve_ktspp_lp", "solve_ktspp_warmup", "solve_otsp", "verify_ktspp_solution",
    "verify_otsp_solution",
]
