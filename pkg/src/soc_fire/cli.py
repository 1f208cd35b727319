"""Command-line front end: ``soc-fire {simulate,analyze,reproduce,t-tail}``.

Exit codes: 0 success, 2 usage/config error, 3 I/O failure, 4 insufficient data.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

from . import __version__
from .errors import ConfigError, DegenerateInputError, InsufficientDataError, ParseError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 2, 3, 4


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soc-fire", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"soc_fire {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a sandpile simulation")
    s.add_argument("--width", type=int, default=50)
    s.add_argument("--height", type=int, default=50)
    s.add_argument("--threshold", type=int, default=4)
    s.add_argument("--seed", type=_seed, default=None, help="64-bit seed (random if omitted)")
    s.add_argument("--warmup", type=int, default=None, help="default: 10 * width * height")
    s.add_argument("--deposits", type=int, default=200_000, help="measured deposits")
    s.add_argument("--policy", default="uniform", help="uniform | max | min | fixed:ROW,COL")
    s.add_argument("--intervention", default="none", help="none | periodic:PERIOD,FRACTION,GRAINS")
    s.add_argument("--runs", type=int, default=1, help="independent runs with seeds seed..seed+N-1")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for --runs")
    s.add_argument("--out", default=".")
    s.add_argument("--no-banner", action="store_true")

    a = sub.add_parser("analyze", help="fit class-size slopes for fire records, or a simulated run")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="fire record CSV")
    src.add_argument("--from-run", help="events CSV (or directory) written by simulate")
    a.add_argument("--groups", default="quintile",
                   help="quintile | quantile:G | periods:Y1-Y2,Y3-Y4,... | all")
    a.add_argument("--exclude", default=None,
                   help="categories left out of the slope-vs-burn fit (default: 2 for quintiles; 'none' to keep all)")
    a.add_argument("--ratio", type=float, default=2.0, help="log-bin ratio for --from-run")
    a.add_argument("--min-count", type=int, default=1, help="minimum events per bin for --from-run")
    a.add_argument("--out", default=".")
    a.add_argument("--no-banner", action="store_true")

    r = sub.add_parser("reproduce", help="refit the embedded Florida class means and compare")
    r.add_argument("--out", default=None, help="also write table CSVs here")
    r.add_argument("--no-banner", action="store_true")

    t = sub.add_parser("t-tail", help="Student t tail probability")
    t.add_argument("--t", type=float, required=True)
    t.add_argument("--df", type=float, required=True)
    t.add_argument("--two-sided", action="store_true")
    return p


# -- simulate -------------------------------------------------------------------

def _run_one(config):
    from .sandpile import run_simulation

    return run_simulation(config)


def cmd_simulate(args) -> int:
    from dataclasses import replace

    from .pipeline import banner_line, digest
    from .sandpile import LatticeConfig, parse_intervention, parse_policy

    seed = args.seed if args.seed is not None else secrets.randbits(64)
    print(f"seed: {seed}")
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    base = LatticeConfig(
        width=args.width,
        height=args.height,
        threshold=args.threshold,
        seed=seed,
        warmup_deposits=args.warmup,
        measured_deposits=args.deposits,
        deposition_policy=parse_policy(args.policy),
        intervention=parse_intervention(args.intervention),
    )
    configs = [replace(base, seed=(seed + k) % 2**64) for k in range(args.runs)]
    if args.runs > 1 and args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            runs = list(pool.map(_run_one, configs))
    else:
        runs = [_run_one(c) for c in configs]

    os.makedirs(args.out, exist_ok=True)
    for run in runs:
        stem = "" if args.runs == 1 else f"_seed{run.config.seed}"
        header = run.header()
        cfg_digest = digest(json.dumps(header["config"], sort_keys=True))
        if not args.no_banner:
            header["version"] = __version__
        csv_path = os.path.join(args.out, f"events{stem}.csv")
        json_path = os.path.join(args.out, f"run{stem}.json")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            if not args.no_banner:
                fh.write(banner_line(cfg_digest))
            fh.write(run.events_csv())
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, indent=2, sort_keys=True) + "\n")
        print(f"wrote {csv_path} ({len(run.events)} events, checksum {run.final_checksum[:16]})")
    return EXIT_OK


# -- analyze --------------------------------------------------------------------

def _parse_groups(text: str):
    text = text.strip().lower()
    if text == "all":
        return ("all", None)
    if text == "quintile":
        return ("quantile", 5)
    if text.startswith("quantile:"):
        return ("quantile", int(text.split(":", 1)[1]))
    if text.startswith("periods:"):
        periods = []
        for part in text.split(":", 1)[1].split(","):
            a, b = part.split("-")
            periods.append((int(a), int(b)))
        return ("periods", periods)
    raise ConfigError(f"unknown --groups {text!r}")


def _analyze_run(args) -> int:
    from .pipeline import fmt_num, analyze_simulation, banner_line, digest
    from .sandpile import read_events_csv

    path = args.from_run
    if os.path.isdir(path):
        path = os.path.join(path, "events.csv")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    events = read_events_csv(text)
    fit = analyze_simulation(events, ratio=args.ratio, min_count=args.min_count)
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "sim_fit.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        if not args.no_banner:
            fh.write(banner_line(digest(text)))
        fh.write("n_bins,slope,se_slope,intercept,r_squared,p_two_sided\n")
        fh.write(",".join([str(fit.n), fmt_num(fit.slope), fmt_num(fit.se_slope), fmt_num(fit.intercept),
                           fmt_num(fit.r_squared), fmt_num(fit.p_two_sided)]) + "\n")
    print(f"slope {fit.slope:.4f} +/- {fit.se_slope:.4f}  r2 {fit.r_squared:.4f}  ({fit.n} bins)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.from_run:
        return _analyze_run(args)

    from .fire_records import all_years, assign_quantiles, average_counts, explicit_periods, parse_dataset
    from .pipeline import (
        burn_medians_millions,
        digest,
        fit_table,
        period_comparison,
        slopes_vs_burn,
        write_period_report,
        write_report,
    )

    with open(args.data, encoding="utf-8", newline="") as fh:
        text = fh.read()
    dataset = parse_dataset(text, os.path.basename(args.data))
    kind, param = _parse_groups(args.groups)
    if kind == "all":
        grouping = all_years(dataset)
    elif kind == "quantile":
        grouping = assign_quantiles(dataset, param)
    else:
        grouping = explicit_periods(dataset, param)

    table = average_counts(dataset, grouping)
    report = fit_table(table, {c: grouping.label(c) for c in table})

    if args.exclude is None:
        exclude = [2] if (kind == "quantile" and param == 5) else []
    elif args.exclude.strip().lower() in ("", "none"):
        exclude = []
    else:
        exclude = [int(v) for v in args.exclude.split(",")]
    medians = burn_medians_millions(grouping.category_medians)
    if len([c for c in medians if c not in exclude]) >= 3:
        slopes_vs_burn(report, medians, exclude)

    digest_ = digest(text)
    paths = write_report(args.out, table, report, digest_, banner=not args.no_banner)
    if kind == "periods":
        paths.append(write_period_report(args.out, period_comparison(dataset, param), digest_,
                                         banner=not args.no_banner))

    for c in report.categories:
        f = report.fits[c]
        print(f"{report.label(c):>14}: slope {f.slope:.4f}  se {f.se_slope:.4f}  "
              f"p {f.p_two_sided:.5f}  r2 {f.r_squared:.4f}")
    if report.slopes_vs_burn is not None:
        f = report.slopes_vs_burn
        print(f"slope vs median prescribed acres (millions): {f.slope:.4f} (p {f.p_two_sided:.4f}), "
              f"excluded {report.excluded_categories}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


# -- reproduce / t-tail ------------------------------------------------------------

def cmd_reproduce(args) -> int:
    from .pipeline import digest, reproduce_published, write_report
    from .published import FLORIDA_QUINTILE_MEANS

    report, checks = reproduce_published()
    print(f"{'quantity':<22}{'computed':>12}{'published':>12}{'tol':>8}  result")
    for c in checks:
        print(f"{c.name:<22}{c.computed:>12.4f}{c.published:>12.4f}{c.tolerance:>8.3f}  "
              f"{'PASS' if c.passed else 'FAIL'}")
    n_pass = sum(c.passed for c in checks)
    print(f"{n_pass}/{len(checks)} checks passed")
    if args.out:
        fixture = json.dumps(FLORIDA_QUINTILE_MEANS, sort_keys=True)
        for p in write_report(args.out, FLORIDA_QUINTILE_MEANS, report, digest(fixture),
                              banner=not args.no_banner):
            print(f"wrote {p}")
    return EXIT_OK if n_pass == len(checks) else 1


def cmd_t_tail(args) -> int:
    from .stats import student_t_tail, student_t_two_sided

    if args.df <= 0:
        raise ConfigError("--df must be >= 1")
    p = student_t_two_sided(args.t, args.df) if args.two_sided else student_t_tail(args.t, args.df)
    print(f"{p:.10g}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze,
            "reproduce": cmd_reproduce, "t-tail": cmd_t_tail}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientDataError, DegenerateInputError) as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
