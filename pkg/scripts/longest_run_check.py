"""Compare the walk's largest projection with the longest-run law.

For the cyclic system the largest projection of w_n is the longest block of
a-letters in the reduced word.  The reduced word of w_n is close to a uniform
random reduced word of length about n/2, whose longest a-block grows like
log_3 of its length.  This script prints mean sup / log_3(n) for walks and for
directly sampled reduced words of matching length.
"""

import argparse
import math

import numpy as np

from projwalk.projection import ProjectionSystem
from projwalk.walk import checkpoint_sups, map_trials, sup_value
from projwalk.words import StepMeasure, random_reduced_array


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 10_000, 100_000])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    system = ProjectionSystem.cyclic()
    mu = StepMeasure.uniform()
    rows = map_trials(lambda t: checkpoint_sups(mu, system, args.n, 7, t).sups, args.trials, args.workers)
    walk = np.array(rows)
    rng = np.random.default_rng(7)
    print(f"{'n':>8} {'walk mean/log3 n':>17} {'reduced-word mean/log3 n':>25}")
    for j, n in enumerate(args.n):
        direct = [sup_value(a, len(a), system)[0]
                  for a in (random_reduced_array(n // 2, 2, rng) for _ in range(args.trials))]
        print(f"{n:>8} {walk[:, j].mean() / math.log(n, 3):>17.4f} {np.mean(direct) / math.log(n, 3):>25.4f}")


if __name__ == "__main__":
    main()
