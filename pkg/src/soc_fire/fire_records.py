"""Per-year wildfire class counts, size classes, and year groupings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, InsufficientDataError, ParseError


@dataclass(frozen=True)
class FireClass:
    label: str
    representative_acres: float
    excluded_from_fits: bool = False


# Each class is represented by its maximum size; G is open-ended and pinned at 10,000.
FIRE_CLASSES = (
    FireClass("A", 0.24, excluded_from_fits=True),  # heavily under-reported
    FireClass("B", 9.9),
    FireClass("C", 99.0),
    FireClass("D", 299.0),
    FireClass("E", 999.0),
    FireClass("F", 4999.0),
    FireClass("G", 10000.0),
)
CLASS_BY_LABEL = {c.label: c for c in FIRE_CLASSES}
LABELS = tuple(c.label for c in FIRE_CLASSES)
FIT_CLASSES = tuple(c for c in FIRE_CLASSES if not c.excluded_from_fits)

CSV_HEADER = (
    "year,class_a,class_b,class_c,class_d,class_e,class_f,class_g,"
    "total_burned_acres,prescribed_acres"
)
_COLUMNS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class YearRecord:
    year: int
    counts: Mapping[str, int]
    prescribed_acres: float | None = None
    total_burned_acres: float | None = None

    def __post_init__(self):
        missing = set(LABELS) - set(self.counts)
        if missing:
            raise ValueError(f"year {self.year}: missing class counts {sorted(missing)}")
        if any(v < 0 for v in self.counts.values()):
            raise ValueError(f"year {self.year}: negative class count")


@dataclass(frozen=True)
class FireDataset:
    state_label: str
    records: tuple[YearRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError("a fire dataset needs at least one year")
        years = [r.year for r in self.records]
        if len(set(years)) != len(years):
            raise ValueError("duplicate year in dataset")
        if years != sorted(years):
            object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.year)))

    def __len__(self):
        return len(self.records)

    @property
    def years(self) -> list[int]:
        return [r.year for r in self.records]

    def by_year(self) -> dict[int, YearRecord]:
        return {r.year: r for r in self.records}


def _parse_float(text: str, row: int, col: str, optional: bool) -> float | None:
    text = text.strip()
    if text == "":
        if optional:
            return None
        raise ParseError(f"row {row}, column {col}: empty value")
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col}: malformed number {text!r}") from None
    if not math.isfinite(v) or v < 0:
        raise ParseError(f"row {row}, column {col}: value must be finite and non-negative, got {text!r}")
    return v


def _parse_int(text: str, row: int, col: str) -> int:
    text = text.strip()
    try:
        v = int(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col}: malformed integer {text!r}") from None
    if v < 0:
        raise ParseError(f"row {row}, column {col}: negative count {v}")
    return v


def parse_dataset(content: str, state_label: str = "") -> FireDataset:
    """Parse CSV text in the fixed ``year,class_a..class_g,total_burned_acres,prescribed_acres`` layout.

    Empty trailing cells mean "not recorded" and come back as ``None``.
    Row numbers in error messages are 1-based file lines (header is line 1).
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input") from None
    if [h.strip() for h in header] != _COLUMNS:
        raise ParseError(f"row 1: header must be exactly {CSV_HEADER!r}")
    records = []
    seen: dict[int, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(_COLUMNS):
            raise ParseError(f"row {lineno}: expected {len(_COLUMNS)} columns, got {len(row)}")
        year = _parse_int(row[0], lineno, "year")
        if year in seen:
            raise ParseError(f"row {lineno}, column year: duplicate year {year} (first seen on row {seen[year]})")
        seen[year] = lineno
        counts = {lab: _parse_int(row[i + 1], lineno, _COLUMNS[i + 1]) for i, lab in enumerate(LABELS)}
        records.append(
            YearRecord(
                year=year,
                counts=counts,
                total_burned_acres=_parse_float(row[8], lineno, _COLUMNS[8], optional=True),
                prescribed_acres=_parse_float(row[9], lineno, _COLUMNS[9], optional=True),
            )
        )
    if not records:
        raise ParseError("no data rows")
    return FireDataset(state_label, tuple(sorted(records, key=lambda r: r.year)))


def load_dataset(path, state_label: str | None = None) -> FireDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_dataset(text, state_label if state_label is not None else str(path))


def _fmt(v: float | None) -> str:
    if v is None:
        return ""
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_dataset(dataset: FireDataset) -> str:
    lines = [CSV_HEADER]
    for r in dataset.records:
        cells = [str(r.year), *(str(r.counts[lab]) for lab in LABELS),
                 _fmt(r.total_burned_acres), _fmt(r.prescribed_acres)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- groupings ----------------------------------------------------------------

@dataclass(frozen=True)
class CategoryGrouping:
    """Assignment of years to 1-based categories."""

    method: str
    assignments: Mapping[int, int]
    category_medians: Mapping[int, float | None] = field(default_factory=dict)
    labels: Mapping[int, str] = field(default_factory=dict)

    @property
    def categories(self) -> list[int]:
        return sorted(set(self.assignments.values()) | set(self.labels))

    def years_in(self, category: int) -> list[int]:
        return sorted(y for y, c in self.assignments.items() if c == category)

    def sizes(self) -> list[int]:
        return [len(self.years_in(c)) for c in self.categories]

    def label(self, category: int) -> str:
        return self.labels.get(category, f"Category {category}")


def quantile_group_sizes(n: int, g: int) -> list[int]:
    """Split n items into g groups; the n mod g leftovers go to the outermost groups first.

    Allocation order is 1, g, 2, g-1, ... so n=27, g=5 gives [6, 5, 5, 5, 6].
    """
    q, r = divmod(n, g)
    sizes = [q] * g
    lo, hi, take_lo = 0, g - 1, True
    for _ in range(r):
        if take_lo:
            sizes[lo] += 1
            lo += 1
        else:
            sizes[hi] += 1
            hi -= 1
        take_lo = not take_lo
    return sizes


def _medians(dataset: FireDataset, assignments: Mapping[int, int]) -> dict[int, float | None]:
    recs = dataset.by_year()
    out: dict[int, float | None] = {}
    for cat in sorted(set(assignments.values())):
        vals = [recs[y].prescribed_acres for y, c in assignments.items() if c == cat]
        vals = [v for v in vals if v is not None]
        out[cat] = float(np.median(vals)) if vals else None
    return out


def assign_quantiles(dataset: FireDataset, g: int = 5) -> CategoryGrouping:
    """Group years into g categories by ascending prescribed-burn acreage."""
    if g < 2:
        raise ValueError("need at least 2 quantile groups")
    missing = [r.year for r in dataset.records if r.prescribed_acres is None]
    if missing:
        raise ConfigError(
            f"prescribed_acres missing for years {', '.join(map(str, missing))}"
        )
    n = len(dataset)
    if n < g:
        raise InsufficientDataError(f"{n} records cannot fill {g} quantile groups")
    ordered = sorted(dataset.records, key=lambda r: (r.prescribed_acres, r.year))
    assignments = {}
    pos = 0
    for cat, size in enumerate(quantile_group_sizes(n, g), start=1):
        for rec in ordered[pos:pos + size]:
            assignments[rec.year] = cat
        pos += size
    name = {5: "Quintile", 4: "Quartile"}.get(g, "Quantile")
    return CategoryGrouping(
        method=f"quantile:{g}",
        assignments=assignments,
        category_medians=_medians(dataset, assignments),
        labels={c: f"{name} {c}" for c in range(1, g + 1)},
    )


def explicit_periods(dataset: FireDataset, periods: Iterable[tuple[int, int]]) -> CategoryGrouping:
    """One category per inclusive ``(first_year, last_year)`` range."""
    periods = list(periods)
    if not periods:
        raise ValueError("no periods given")
    assignments = {}
    labels = {}
    for cat, (a, b) in enumerate(periods, start=1):
        if a > b:
            raise ValueError(f"period {a}-{b} is reversed")
        labels[cat] = f"{a}-{b}"
        for y in dataset.years:
            if a <= y <= b:
                if y in assignments:
                    raise ValueError(f"year {y} falls in more than one period")
                assignments[y] = cat
    return CategoryGrouping("periods", assignments, _medians(dataset, assignments), labels)


def all_years(dataset: FireDataset) -> CategoryGrouping:
    assignments = {y: 1 for y in dataset.years}
    return CategoryGrouping("all", assignments, _medians(dataset, assignments), {1: "All years"})


ClassAverageTable = dict  # category -> class label -> mean count per year


def average_counts(dataset: FireDataset, grouping: CategoryGrouping) -> ClassAverageTable:
    """Mean yearly fire count per class within each category (class A included)."""
    recs = dataset.by_year()
    table: ClassAverageTable = {}
    for cat in grouping.categories:
        years = grouping.years_in(cat)
        if not years:
            raise InsufficientDataError(f"{grouping.label(cat)} contains no years")
        unknown = [y for y in years if y not in recs]
        if unknown:
            raise ValueError(f"grouping refers to years not in the dataset: {unknown}")
        table[cat] = {
            lab: float(np.mean([recs[y].counts[lab] for y in years])) for lab in LABELS
        }
    return table
