"""Monte-Carlo and exact checks of the forest bound on random instances.

For each instance, non-terminals join S independently with probability
1 - gamma; the mean of c(T u S) is compared with gamma * c(T).
"""
import argparse
import math
from fractions import Fraction

import numpy as np

from routelp.forests import (bridge_montecarlo, exact_bridge_expectation, forest_cost,
                             independent_distribution, independent_sampler)
from routelp.instance import GENERATOR_KINDS, generate_metric


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=5)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for j in range(args.instances):
        m = generate_metric(GENERATOR_KINDS[j % len(GENERATOR_KINDS)], args.n, rng)
        T = [0, 1]
        rest = list(range(2, args.n))
        cT = forest_cost(m, T)
        for gamma in (math.exp(-1), 0.5):
            rep = bridge_montecarlo(m, T, independent_sampler(rest, 1 - gamma), gamma, args.trials, seed=j)
            print(f"instance {j} gamma={gamma:.4f} c_T={float(cT):8.3f} "
                  f"mean={rep['empiricalMean']:8.3f} bound={rep['bound']:8.3f} pass={rep['pass']}")
        half = Fraction(1, 2)
        E, g = exact_bridge_expectation(m, T, independent_distribution(rest, {v: half for v in rest}))
        print(f"instance {j} exact E at gamma=1/2: {float(E):.4f} <= {float(g * cT):.4f}")


if __name__ == "__main__":
    main()
