"""Log-log class-size fits, slope comparisons and the burn-vs-slope regression.

The same line-fitting machinery is applied to simulated avalanche histograms
so that sandpile output and fire records can be read side by side.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import InsufficientDataError
from .fire_records import (
    FIT_CLASSES,
    LABELS,
    CategoryGrouping,
    ClassAverageTable,
    FireDataset,
    average_counts,
    explicit_periods,
)
from .sandpile import AvalancheEvent, SimulationRun, SizeHistogram, size_distribution
from .stats import (
    AnovaResult,
    RegressionFit,
    SlopeComparison,
    TTestResult,
    compare_slopes,
    ols_fit,
    one_way_anova,
    two_sample_t,
)

SLOPE_ALPHA = 0.1  # small samples, so the looser level is used for slope tests


@dataclass(frozen=True)
class LogLogPoints:
    category: int
    classes: tuple[str, ...]
    x: np.ndarray  # log10 representative acres
    y: np.ndarray  # log10 mean yearly count
    excluded: tuple[str, ...] = ()  # classes dropped for a zero mean


def build_log_points(table: ClassAverageTable, category: int) -> LogLogPoints:
    """log10(class size) vs log10(mean count) for classes B-G of one category."""
    if category not in table:
        raise KeyError(f"no category {category} in table")
    means = table[category]
    used, excluded, xs, ys = [], [], [], []
    for cls in FIT_CLASSES:
        m = means.get(cls.label, 0.0)
        if m > 0:
            used.append(cls.label)
            xs.append(math.log10(cls.representative_acres))
            ys.append(math.log10(m))
        else:
            excluded.append(cls.label)
    if len(used) < 3:
        raise InsufficientDataError(
            f"category {category}: only {len(used)} classes with nonzero mean count"
        )
    return LogLogPoints(category, tuple(used), np.array(xs), np.array(ys), tuple(excluded))


@dataclass
class SlopeRiskReport:
    fits: dict[int, RegressionFit]
    points: dict[int, LogLogPoints]
    comparisons: dict[tuple[int, int], SlopeComparison]
    labels: dict[int, str] = field(default_factory=dict)
    slopes_vs_burn: RegressionFit | None = None
    burn_medians: dict[int, float] = field(default_factory=dict)
    excluded_categories: list[int] = field(default_factory=list)

    @property
    def categories(self) -> list[int]:
        return sorted(self.fits)

    def label(self, cat: int) -> str:
        return self.labels.get(cat, f"Category {cat}")

    def comparison(self, a: int, b: int) -> SlopeComparison:
        if (a, b) in self.comparisons:
            return self.comparisons[(a, b)]
        c = self.comparisons[(b, a)]
        return SlopeComparison(-c.t, c.df, c.p_one_sided, c.p_two_sided)


def fit_table(table: ClassAverageTable, labels: Mapping[int, str] | None = None) -> SlopeRiskReport:
    """One line fit per category plus every pairwise slope comparison."""
    points = {cat: build_log_points(table, cat) for cat in sorted(table)}
    fits = {cat: ols_fit(p.x, p.y) for cat, p in points.items()}
    comps = {(a, b): compare_slopes(fits[a], fits[b]) for a, b in combinations(sorted(fits), 2)}
    return SlopeRiskReport(fits, points, comps, dict(labels or {}))


def fit_all_categories(dataset: FireDataset, grouping: CategoryGrouping) -> SlopeRiskReport:
    table = average_counts(dataset, grouping)
    return fit_table(table, {c: grouping.label(c) for c in table})


# slope-vs-burn regressions use median prescribed acreage in millions of acres
BURN_ACRES_UNIT = 1e6


def burn_medians_millions(medians: Mapping[int, float | None]) -> dict[int, float]:
    return {c: m / BURN_ACRES_UNIT for c, m in medians.items() if m is not None}


def slopes_vs_burn(report: SlopeRiskReport, category_medians: Mapping[int, float | None],
                   exclude: Iterable[int] = ()) -> RegressionFit:
    """Regress category slopes on the categories' median prescribed acreage.

    Also stores the fit, medians and exclusions on ``report``.
    """
    exclude = sorted(set(exclude))
    cats = [c for c in report.categories
            if c not in exclude and category_medians.get(c) is not None]
    if len(cats) < 3:
        raise InsufficientDataError(
            f"slope-vs-burn regression needs >= 3 categories with medians, got {len(cats)}"
        )
    fit = ols_fit([category_medians[c] for c in cats], [report.fits[c].slope for c in cats])
    report.slopes_vs_burn = fit
    report.burn_medians = {c: float(v) for c, v in category_medians.items() if v is not None}
    report.excluded_categories = exclude
    return fit


# -- period comparison --------------------------------------------------------

@dataclass
class PeriodComparison:
    labels: dict[int, str]
    prescribed_tests: dict[tuple[int, int], TTestResult]
    burned_tests: dict[tuple[int, int], TTestResult]
    burned_anova: AnovaResult | None


def period_comparison(dataset: FireDataset, periods: Sequence[tuple[int, int]],
                      variant: str = "pooled") -> PeriodComparison:
    """t tests on prescribed acreage between periods, and ANOVA on total burned acreage.

    Periods without prescribed-burn records are skipped for the acreage tests;
    every period must have at least two years with total burned acreage.
    """
    grouping = explicit_periods(dataset, periods)
    recs = dataset.by_year()
    prescribed: dict[int, list[float]] = {}
    burned: dict[int, list[float]] = {}
    for cat in grouping.categories:
        years = grouping.years_in(cat)
        prescribed[cat] = [recs[y].prescribed_acres for y in years if recs[y].prescribed_acres is not None]
        burned[cat] = [recs[y].total_burned_acres for y in years if recs[y].total_burned_acres is not None]
        if len(burned[cat]) < 2:
            raise InsufficientDataError(
                f"period {grouping.label(cat)} has {len(burned[cat])} years with total burned acreage"
            )
    with_rx = [c for c in grouping.categories if len(prescribed[c]) >= 2]
    rx_tests = {(a, b): two_sample_t(prescribed[a], prescribed[b], variant)
                for a, b in combinations(with_rx, 2)}
    burn_tests = {(a, b): two_sample_t(burned[a], burned[b], variant)
                  for a, b in combinations(grouping.categories, 2)}
    anova = one_way_anova([burned[c] for c in grouping.categories]) if len(burned) >= 2 else None
    return PeriodComparison(dict(grouping.labels), rx_tests, burn_tests, anova)


# -- simulated avalanches -----------------------------------------------------------

def fit_histogram(hist: SizeHistogram, min_count: int = 1) -> RegressionFit:
    """log10(size density) against log10(bin representative) over bins with >= min_count events."""
    keep = hist.counts >= max(1, min_count)
    if keep.sum() < 3:
        raise InsufficientDataError(f"only {int(keep.sum())} histogram bins with >= {min_count} events")
    return ols_fit(np.log10(hist.representative[keep]), np.log10(hist.density[keep]))


def analyze_simulation(run: SimulationRun | Sequence[AvalancheEvent], ratio: float = 2.0,
                       edges=None, min_count: int = 1, size_field: str = "topplings") -> RegressionFit:
    """Power-law line fit to the log-binned avalanche size distribution of a run."""
    if isinstance(run, SimulationRun):
        sizes = run.sizes(size_field)
    else:
        sizes = np.array([getattr(e, size_field) for e in run], dtype=np.int64)
    nonzero = int(np.count_nonzero(sizes))
    if nonzero < 100:
        raise InsufficientDataError(f"run has only {nonzero} nonzero avalanches (need >= 100)")
    return fit_histogram(size_distribution(sizes, ratio=ratio, edges=edges), min_count)


@dataclass
class PolicyReport:
    mean_size: dict[str, float]
    kruskal_statistic: float
    kruskal_p: float
    pairwise_p: dict[tuple[str, str], float]  # two-sided Mann-Whitney U
    expected_direction: str = (
        "MaxIntent mean size below UniformRandom; MinIntent more prone to very large avalanches"
    )

    def observed_direction(self) -> str:
        order = sorted(self.mean_size, key=self.mean_size.get)
        return " < ".join(f"{k} ({self.mean_size[k]:.2f})" for k in order)


def compare_policies(runs: Mapping[str, SimulationRun]) -> PolicyReport:
    """Rank-based comparison of avalanche-size distributions across deposition policies."""
    from scipy import stats as sps

    sizes = {name: run.sizes() for name, run in runs.items()}
    if len(sizes) < 2:
        raise InsufficientDataError("need at least two runs to compare")
    kw = sps.kruskal(*sizes.values())
    pairwise = {
        (a, b): float(sps.mannwhitneyu(sizes[a], sizes[b], alternative="two-sided").pvalue)
        for a, b in combinations(sizes, 2)
    }
    return PolicyReport(
        mean_size={k: float(v.mean()) for k, v in sizes.items()},
        kruskal_statistic=float(kw.statistic),
        kruskal_p=float(kw.pvalue),
        pairwise_p=pairwise,
    )


# -- output files -------------------------------------------------------------------

def fmt_num(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.10g}"


def digest(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()[:16]


def banner_line(input_digest: str) -> str:
    return f"# soc_fire {__version__} input={input_digest}\n"


def _write(path: str, rows: list[list[str]], banner: str | None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if banner:
            fh.write(banner)
        for row in rows:
            fh.write(",".join(row) + "\n")


def table1_rows(table: ClassAverageTable, labels: Mapping[int, str]) -> list[list[str]]:
    cats = sorted(table)
    rows = [["class", *(labels.get(c, f"Category {c}") for c in cats)]]
    for lab in LABELS:
        rows.append([lab, *(fmt_num(table[c][lab]) for c in cats)])
    return rows


def table2_rows(report: SlopeRiskReport) -> list[list[str]]:
    rows = [["category", "label", "n", "slope", "se_slope", "intercept", "se_intercept",
             "t_stat", "p_two_sided", "r_squared"]]
    for c in report.categories:
        f = report.fits[c]
        rows.append([str(c), report.label(c), str(f.n), fmt_num(f.slope), fmt_num(f.se_slope),
                     fmt_num(f.intercept), fmt_num(f.se_intercept), fmt_num(f.t_stat),
                     fmt_num(f.p_two_sided), fmt_num(f.r_squared)])
    return rows


def table3_rows(report: SlopeRiskReport, alpha: float = SLOPE_ALPHA) -> list[list[str]]:
    """Diagonal: slopes; upper triangle: one-sided p; lower triangle: '*' if p < alpha else '-'."""
    cats = report.categories
    rows = [["category", *(report.label(c) for c in cats)]]
    for i in cats:
        row = [report.label(i)]
        for j in cats:
            if i == j:
                row.append(fmt_num(report.fits[i].slope))
            elif i < j:
                row.append(fmt_num(report.comparison(i, j).p_one_sided))
            else:
                row.append("*" if report.comparison(j, i).p_one_sided < alpha else "-")
        rows.append(row)
    return rows


def points_rows(points: LogLogPoints, fit: RegressionFit, samples: int = 20) -> list[list[str]]:
    rows = [["kind", "class", "x", "y"]]
    for cls, x, y in zip(points.classes, points.x, points.y):
        rows.append(["point", cls, fmt_num(x), fmt_num(y)])
    for x in np.linspace(points.x.min(), points.x.max(), samples):
        rows.append(["line", "", fmt_num(x), fmt_num(float(fit.predict(x)))])
    return rows


def fig2f_rows(report: SlopeRiskReport, samples: int = 20) -> list[list[str]]:
    fit = report.slopes_vs_burn
    rows = [["kind", "category", "x", "y"]]
    for c in report.categories:
        if c not in report.burn_medians:
            continue
        kind = "excluded" if c in report.excluded_categories else "point"
        rows.append([kind, str(c), fmt_num(report.burn_medians[c]), fmt_num(report.fits[c].slope)])
    if fit is not None and report.burn_medians:
        xs = [report.burn_medians[c] for c in report.burn_medians]
        for x in np.linspace(min(xs), max(xs), samples):
            rows.append(["line", "", fmt_num(x), fmt_num(float(fit.predict(x)))])
    return rows


def write_report(out_dir: str, table: ClassAverageTable, report: SlopeRiskReport,
                 input_digest: str, banner: bool = True) -> list[str]:
    """Write table1/2/3, per-category point files and (if fitted) fig2f. Returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    head = banner_line(input_digest) if banner else None
    written = []

    def emit(name, rows):
        path = os.path.join(out_dir, name)
        _write(path, rows, head)
        written.append(path)

    emit("table1.csv", table1_rows(table, report.labels))
    emit("table2.csv", table2_rows(report))
    emit("table3.csv", table3_rows(report))
    for c in report.categories:
        emit(f"fig_points_{c}.csv", points_rows(report.points[c], report.fits[c]))
    if report.slopes_vs_burn is not None:
        emit("fig2f.csv", fig2f_rows(report))
    return written


def write_period_report(out_dir: str, result: PeriodComparison, input_digest: str,
                        banner: bool = True) -> str:
    rows = [["measure", "test", "group_a", "group_b", "statistic", "df", "p_two_sided", "p_one_sided"]]
    for (a, b), t in result.prescribed_tests.items():
        rows.append(["prescribed_acres", "t", result.labels[a], result.labels[b],
                     fmt_num(t.statistic), fmt_num(t.df), fmt_num(t.p_two_sided), fmt_num(t.p_one_sided)])
    for (a, b), t in result.burned_tests.items():
        rows.append(["total_burned_acres", "t", result.labels[a], result.labels[b],
                     fmt_num(t.statistic), fmt_num(t.df), fmt_num(t.p_two_sided), fmt_num(t.p_one_sided)])
    if result.burned_anova is not None:
        an = result.burned_anova
        rows.append(["total_burned_acres", "anova", "all", "", fmt_num(an.f),
                     f"{an.df_between};{an.df_within}", fmt_num(an.p_value), ""])
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "periods.csv")
    _write(path, rows, banner_line(input_digest) if banner else None)
    return path


# -- reproduction of the published Florida tables ----------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    computed: float
    published: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.published) <= self.tolerance


def reproduce_published() -> tuple[SlopeRiskReport, list[Check]]:
    """Refit the embedded Florida class means and compare against the published fits."""
    from .published import (
        FLORIDA_FITS,
        FLORIDA_PAIRWISE_P,
        FLORIDA_QUINTILE_MEANS,
        QUINTILE_LABELS,
        TOLERANCES,
    )

    report = fit_table(FLORIDA_QUINTILE_MEANS, QUINTILE_LABELS)
    checks = []
    for c, pub in FLORIDA_FITS.items():
        f = report.fits[c]
        checks.append(Check(f"Q{c} slope", f.slope, pub["slope"], TOLERANCES["slope"]))
        checks.append(Check(f"Q{c} se_slope", f.se_slope, pub["se_slope"], TOLERANCES["se_slope"]))
        checks.append(Check(f"Q{c} r_squared", f.r_squared, pub["r_squared"], TOLERANCES["r_squared"]))
    for (a, b), p in FLORIDA_PAIRWISE_P.items():
        checks.append(Check(f"Q{a}-Q{b} p_one_sided", report.comparison(a, b).p_one_sided, p,
                            TOLERANCES["pairwise_p"]))
    return report, checks
