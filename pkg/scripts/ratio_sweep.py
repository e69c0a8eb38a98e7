"""Tabulate the analytic k-TSPP ratios as a function of tau.

Shows where the coin-flip pipeline improves on the warm-up and on the
forest baseline, and that its worst case is the global constant.
"""
from fractions import Fraction

from routelp.algorithms import (baseline3_ratio, final_ratio, gamma_from_tau, global_ktspp_ratio,
                                warmup_ratio)


def main(steps: int = 20):
    print(f"{'tau':>6} {'gamma':>8} {'warmup':>8} {'final':>8} {'base3':>8} {'min(w,b)':>8}")
    for j in range(steps + 1):
        tau = Fraction(j, steps)
        g = gamma_from_tau(tau)
        w, f, b = warmup_ratio(tau), final_ratio(tau, g), float(baseline3_ratio(tau))
        print(f"{float(tau):6.3f} {float(g):8.4f} {w:8.4f} {f:8.4f} {b:8.4f} {min(w, b):8.4f}")
    print(f"global bound {global_ktspp_ratio():.6f}")


if __name__ == "__main__":
    main()
