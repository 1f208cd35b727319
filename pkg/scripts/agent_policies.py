"""Compare avalanche sizes when grains go to random, fullest, or emptiest cells."""

import argparse

import numpy as np

from soc_fire.pipeline import compare_policies
from soc_fire.sandpile import LatticeConfig, MaxIntent, MinIntent, UniformRandom, run_simulation

POLICIES = {"UniformRandom": UniformRandom(), "MaxIntent": MaxIntent(), "MinIntent": MinIntent()}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=20)
    ap.add_argument("--warmup", type=int, default=4000)
    ap.add_argument("--deposits", type=int, default=20_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[77, 78, 79])
    args = ap.parse_args()

    for seed in args.seeds:
        runs = {name: run_simulation(LatticeConfig(args.size, args.size, seed=seed,
                                                   warmup_deposits=args.warmup,
                                                   measured_deposits=args.deposits,
                                                   deposition_policy=pol))
                for name, pol in POLICIES.items()}
        rep = compare_policies(runs)
        print(f"seed {seed}: {rep.observed_direction()}")
        for name, run in runs.items():
            s = run.sizes()
            print(f"  {name:>13}: p99 size {np.percentile(s, 99):7.1f}, max {s.max()}")
        print(f"  Kruskal-Wallis p = {rep.kruskal_p:.3g}")
    print(f"\nexpected: {rep.expected_direction}")


if __name__ == "__main__":
    main()
