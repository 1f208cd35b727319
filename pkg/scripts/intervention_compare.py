"""Effect of periodically thinning the fullest cells (a controlled-burn analogue) on the size exponent."""

import argparse

from soc_fire.pipeline import analyze_simulation
from soc_fire.sandpile import LatticeConfig, NoIntervention, PeriodicRemoval, run_simulation
from soc_fire.stats import compare_slopes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=40)
    ap.add_argument("--warmup", type=int, default=16_000)
    ap.add_argument("--deposits", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--period", type=int, default=200)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.01, 0.05, 0.1])
    ap.add_argument("--grains", type=int, default=1)
    args = ap.parse_args()

    def run(iv):
        cfg = LatticeConfig(args.size, args.size, seed=args.seed, warmup_deposits=args.warmup,
                            measured_deposits=args.deposits, intervention=iv)
        r = run_simulation(cfg)
        return r, analyze_simulation(r, min_count=10)

    base_run, base = run(NoIntervention())
    print(f"no removal: slope {base.slope:.3f} +/- {base.se_slope:.3f}, mean size {base_run.sizes().mean():.2f}")
    for frac in args.fractions:
        r, fit = run(PeriodicRemoval(args.period, frac, args.grains))
        cmp = compare_slopes(fit, base)
        print(f"top {frac:.0%} every {args.period}: slope {fit.slope:.3f} +/- {fit.se_slope:.3f}, "
              f"mean size {r.sizes().mean():.2f}, removed {r.total_removed}, "
              f"slope difference one-sided p {cmp.p_one_sided:.3g}")


if __name__ == "__main__":
    main()
