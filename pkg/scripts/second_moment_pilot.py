"""Pilot sweep for the second-moment diagnostics.

Prints the per-window ratio E(Y_i)/p_n next to P(L_i) and P(R_i) for a few
(n, eps1) pairs.  With the default eps2 the threshold eps2 log(n)/3 equals
k/3, so for small k the side conditions L_i, R_i cap the ratio near
P(L_i) P(R_i) rather than near 1.
"""

import argparse

from projwalk.experiments import second_moment_experiment
from projwalk.projection import ProjectionSystem
from projwalk.words import StepMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    system = ProjectionSystem.cyclic()
    mu = StepMeasure.uniform()
    print(f"{'n':>8} {'eps1':>5} {'k':>2} {'thr':>5} {'ratio_y':>8} {'P(L)':>7} {'P(R)':>7} {'P(L)P(R)':>8} "
          f"{'ratio_pair':>10} {'w_pair':>7}")
    for n, eps1 in [(10_000, 0.35), (10_000, 0.45), (10_000, 0.55), (100_000, 0.45), (100_000, 0.6)]:
        try:
            r = second_moment_experiment(system, mu, n, args.trials, eps1, seed=args.seed,
                                         workers=args.workers, bootstrap=50)
        except ValueError as exc:
            print(f"{n:>8} {eps1:>5} skipped: {exc}")
            continue
        print(f"{n:>8} {eps1:>5} {r.k:>2} {r.threshold:>5.2f} {r.ratio_y:>8.4f} {r.p_L:>7.4f} {r.p_R:>7.4f} "
              f"{r.p_L * r.p_R:>8.4f} {r.ratio_pair:>10.4f} {r.ratio_w_pair:>7.4f}")


if __name__ == "__main__":
    main()
