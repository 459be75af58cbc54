#!/usr/bin/env python3
"""Regenerate the committed test fixture panel (tests/data/fixture_panel.csv).

Three synthetic countries with AR(1) quarter-on-quarter inflation around
country-specific means; 'bbb' has a deliberate one-quarter gap so the
longest-contiguous-block rule is exercised (its 37-quarter head is dropped,
the 92-quarter tail is kept).
"""

import csv
import pathlib

import numpy as np

from splitenc.dgp import RngStream

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "fixture_panel.csv"

COUNTRIES = {
    # name: (start quarter, quarters, mean qoq inflation, AR coeff, innovation sd)
    "aaa": ("1970Q1", 120, 3.0, 0.5, 1.0),
    "bbb": ("1971Q1", 130, 5.0, 0.6, 1.5),
    "ccc": ("1972Q1", 100, 2.0, 0.4, 0.8),
}
GAP = ("bbb", "1980Q2")  # dropped quarter


def quarter_range(start: str, count: int):
    year, q = int(start[:4]), int(start[5])
    idx = year * 4 + (q - 1)
    return [f"{i // 4}Q{i % 4 + 1}" for i in range(idx, idx + count)]


def main() -> None:
    rows = []
    for j, (name, (start, count, mean, phi, sd)) in enumerate(COUNTRIES.items()):
        g = RngStream(424242, j).generator()
        pi = np.empty(count)
        eps = sd * g.standard_normal(count)
        pi[0] = mean + eps[0]
        for t in range(1, count):
            pi[t] = mean * (1 - phi) + phi * pi[t - 1] + eps[t]
        prices = 100.0 * np.exp(np.cumsum(pi) / 400.0)
        for date, price in zip(quarter_range(start, count), prices):
            if (name, date) == GAP:
                continue
            rows.append((name, date, f"{price:.6f}"))
    with open(OUT, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "date", "hcpi"])
        writer.writerows(rows)
    print(f"wrote {OUT} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
