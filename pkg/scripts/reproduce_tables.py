"""Recompute the per-quintile fits and pairwise slope tests from the embedded class means."""

import argparse

from soc_fire.pipeline import reproduce_published, write_report
from soc_fire.published import FLORIDA_QUINTILE_MEANS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="directory for table CSVs")
    args = ap.parse_args()

    report, checks = reproduce_published()
    print(f"{'category':>10} {'slope':>8} {'se':>7} {'r2':>7} {'p (2-sided)':>12}")
    for c in report.categories:
        f = report.fits[c]
        print(f"{report.label(c):>10} {f.slope:8.4f} {f.se_slope:7.4f} {f.r_squared:7.4f} {f.p_two_sided:12.5f}")
    print()
    print("one-sided p for equal slopes (df = 8)")
    for (a, b), cmp in sorted(report.comparisons.items()):
        print(f"  Q{a} vs Q{b}: t = {cmp.t:6.3f}  p = {cmp.p_one_sided:.4f}")
    failed = [c for c in checks if not c.passed]
    print(f"\n{len(checks) - len(failed)}/{len(checks)} values within tolerance")
    if args.out:
        for p in write_report(args.out, FLORIDA_QUINTILE_MEANS, report, "embedded", banner=True):
            print(f"wrote {p}")


if __name__ == "__main__":
    main()
