import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from soc_fire.fire_records import LABELS, FireDataset, YearRecord  # noqa: E402


def make_dataset(rows, label="synthetic"):
    """rows: iterable of (year, [7 counts], prescribed, total_burned)."""
    recs = []
    for year, counts, rx, burned in rows:
        recs.append(YearRecord(year, dict(zip(LABELS, counts)), rx, burned))
    return FireDataset(label, tuple(recs))


@pytest.fixture
def ten_year_dataset():
    rows = []
    for i in range(10):
        base = 1000 + 37 * i
        counts = [base // 2, base, base // 3, base // 25, base // 60, base // 150, 1 + i % 3]
        rows.append((2000 + i, counts, 1.0e6 + 5.0e4 * ((i * 7) % 10), 2.0e5 + 1.0e4 * i))
    return make_dataset(rows)
