"""Regret-vs-horizon sweep for UCB and EXP3 vanilla pricing on a named base instance."""

import argparse
import os

from pricelab import BASES, Strategy, regret_scaling_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instance", default="two-regular-base", choices=sorted(BASES))
    ap.add_argument("--max-exp", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    inst = BASES[args.instance]()
    horizons = [2**k for k in range(10, args.max_exp + 1)]
    for core in ("ucb", "exp3"):
        fit = regret_scaling_experiment(inst, Strategy("vanilla", core=core), horizons, args.seeds, jobs=args.jobs)
        print(f"{fit.learner:14s} slope {fit.slope:.3f}")
        for T, m, se in zip(fit.horizons, fit.mean_regret, fit.stderr):
            print(f"  T={T:>8d}  regret {m:10.1f} +- {se:.1f}  ({m / T ** (2 / 3):.2f} T^2/3)")


if __name__ == "__main__":
    main()
