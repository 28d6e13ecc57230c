"""Worst relative distortion against sketch size for one fixture.

Holds k, n fixed and sweeps m below n, where the dimension formula would
otherwise clamp to n, to show the 1/sqrt(m) decay.
"""
import argparse

import numpy as np

from nlse.distortion import Cell, run_cell


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixture", default="tanh")
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--m", default="16,32,64,128,256")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    ms = [int(v) for v in args.m.split(",")]
    means = []
    print("m,mean_worst,max_worst")
    for i, m in enumerate(ms):
        cell = Cell(args.fixture, "relative", args.k, args.n, 0.05, 6.0, eps=0.3, m=m)
        reps = run_cell(cell, args.trials, args.seed, i, args.samples, args.workers)
        worst = [r.worst_relative for r in reps]
        means.append(np.mean(worst))
        print(f"{m},{np.mean(worst):.4f},{np.max(worst):.4f}")
    print(f"# log-log slope {np.polyfit(np.log(ms), np.log(means), 1)[0]:+.3f}")


if __name__ == "__main__":
    main()
