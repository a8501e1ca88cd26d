"""CSV and plain-text table output for analysis reports."""

from __future__ import annotations

import csv

from .signal import format_float

BUDGET_FIELDS = ["cutoff", "exponent", "exact", "integral_approx", "regime"]
SLOPE_FIELDS = ["exponent", "cutoff", "heuristic_rms", "empirical_rms",
                "fitted_exponent", "predicted_exponent"]


def _cell(v):
    if isinstance(v, float):
        return format_float(v)
    return "" if v is None else str(v)


def budget_rows(reports):
    return [[r.cutoff, r.exponent, r.exact, r.integral_approx, str(r.regime)] for r in reports]


def slope_rows(report):
    emp = report.empirical_rms or [None] * len(report.cutoffs)
    return [
        [report.exponent, c, h, e, report.fitted_exponent, report.predicted_exponent]
        for c, h, e in zip(report.cutoffs, report.heuristic_rms, emp)
    ]


def write_rows(path, fields, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def format_table(fields, rows, digits=6):
    """Left-aligned text table; floats shown to ``digits`` significant digits."""
    def show(v):
        if isinstance(v, float):
            return f"{v:.{digits}g}"
        return "-" if v is None else str(v)

    body = [[show(v) for v in row] for row in rows]
    widths = [max(len(f), *(len(r[i]) for r in body)) if body else len(f)
              for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body)
    return "\n".join(lines)
