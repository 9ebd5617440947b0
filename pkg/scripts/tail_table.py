"""Print the conditional tail table and the log-linear fits for d_<a>(1, w_n)."""

import argparse

from projwalk.experiments import tail_experiment
from projwalk.projection import ProjectionSystem
from projwalk.words import StepMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    system = ProjectionSystem.cyclic()
    rep = tail_experiment(system, StepMeasure.uniform(), system.base, args.n, args.trials,
                          [0, 2, 4], range(0, 13), args.seed, args.workers)
    for R in rep.R_grid:
        f = rep.fit_for(R)
        cells = " ".join(f"{r['p_hat']:.4f}" for r in rep.rows if r["R"] == R)
        print(f"R={R}: slope={f.slope:.4f} r2={f.r2:.4f} bins={f.bins}  {cells}")
    print(f"M_hat = {rep.M_hat:.4f}; flags: {rep.flags or 'none'}")


if __name__ == "__main__":
    main()
