"""Scripted experiments: progressive superposition, weight-exponent comparison
and the budget / slope scaling study.  Each writes CSV and SVG files into
``config.output_dir`` and returns the written paths.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import report
from .analysis import (
    amplitude_budget,
    detect_crossings,
    detect_wells,
    fit_scaling_exponent,
    rms_window,
)
from .errors import DomainError, ParseError
from .primes import build_ensemble, sieve_primes
from .signal import (
    PhaseReference,
    SampleGrid,
    eval_grid,
    eval_phase_referenced,
    progressive_partial_sums,
    write_csv,
)
from .svg import PALETTE, Figure, padded_limits

log = logging.getLogger(__name__)

EXPERIMENTS = ("progressive", "weight_comparison", "scaling_study")
DEFAULT_GRID = SampleGrid(140.0, 160.0, 3000)
# slack for the triangle-inequality check on computed samples
_BOUND_SLACK = 1e-12

DEFAULTS = {
    "progressive": {"exponents": [0.5], "cutoffs": [97]},
    "weight_comparison": {"exponents": [0.25, 0.5, 0.75], "cutoffs": [100, 10**6]},
    "scaling_study": {"exponents": [0.25, 0.5, 0.75], "cutoffs": [10**3, 10**4, 10**5, 10**6]},
}


def bundled_ordinates_path():
    return resources.files("prime_lab") / "data" / "zeta_ordinates_140_160.txt"


@dataclass
class ExperimentConfig:
    experiment: str
    exponents: list = field(default_factory=list)
    cutoffs: list = field(default_factory=list)
    grid: SampleGrid = DEFAULT_GRID
    theta: PhaseReference = field(default_factory=PhaseReference)
    reference_ordinates_path: Optional[Path] = None
    output_dir: Path = Path(".")
    depth_threshold: float = 1.0
    seed: int = 0
    threads: Optional[int] = None
    rms_window: tuple = (1000.0, 2000.0)
    rms_samples: int = 1000
    cache_path: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        self.output_dir = Path(self.output_dir)
        self.validate()

    @classmethod
    def with_defaults(cls, experiment, **kw):
        base = dict(DEFAULTS.get(experiment, {}))
        base.update({k: v for k, v in kw.items() if v is not None})
        return cls(experiment, **base)

    def validate(self):
        if not self.exponents:
            raise DomainError("at least one exponent is required")
        if not self.cutoffs:
            raise DomainError("at least one cutoff is required")
        for x in self.exponents:
            if not (x > 0 and math.isfinite(x)):
                raise DomainError(f"exponents must be > 0, got {x}")
        for c in self.cutoffs:
            if int(c) != c or c < 2:
                raise DomainError(f"cutoffs must be integers >= 2, got {c}")
        if not self.depth_threshold > 0:
            raise DomainError("depth threshold must be > 0")


@dataclass(frozen=True)
class ReferenceOrdinates:
    ordinates: tuple
    source: str = ""

    def __len__(self):
        return len(self.ordinates)


def load_reference_ordinates(path):
    """Read external reference t-values: one decimal per line, ``#`` comments."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                v = float(line)
            except ValueError:
                raise ParseError(f"not a number: {line!r}", lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"not a finite number: {line!r}", lineno)
            if values and v <= values[-1]:
                raise ParseError(f"ordinates must be strictly ascending ({v} after {values[-1]})",
                                 lineno)
            values.append(v)
    return ReferenceOrdinates(tuple(values), str(path))


def _maybe_refs(config):
    if config.reference_ordinates_path is None:
        return None
    return load_reference_ordinates(config.reference_ordinates_path)


def _check_bound(values, bound, what):
    peak = float(np.max(np.abs(values)))
    if peak > bound * (1 + _BOUND_SLACK):
        raise ArithmeticError(f"{what}: max |value| {peak} exceeds triangle bound {bound}")


def _prepare(config):
    config.output_dir.mkdir(parents=True, exist_ok=True)


# -- progressive superposition -----------------------------------------------

def run_progressive(config):
    """Partial sums of the phase-referenced signal over growing prime sets.

    Writes ``progressive.csv`` (t plus one column per prefix),
    ``progressive_wells.csv`` (well count, deepest well and its half-width per
    prefix) and ``progressive.svg`` (stacked prefix curves; full curve with
    wells marked).
    """
    if len(config.cutoffs) != 1 or len(config.exponents) != 1:
        raise DomainError("the progressive experiment takes one cutoff and one exponent")
    _prepare(config)
    cutoff, x = int(config.cutoffs[0]), config.exponents[0]
    ens = build_ensemble(sieve_primes(cutoff, cache_path=config.cache_path), x)
    grid = config.grid
    sums = progressive_partial_sums(ens, grid, config.theta)
    bound = 2 * ens.weight_sum
    for s in sums:
        _check_bound(s.values, bound, "progressive")

    t = grid.samples()
    cols = {"t": t}
    for p, s in zip(ens.primes.tolist(), sums):
        cols[f"p{p}"] = s.values
    out = config.output_dir
    csv_path = out / "progressive.csv"
    write_csv(csv_path, cols)

    rows = []
    for p, s in zip(ens.primes.tolist(), sums):
        wells = detect_wells(s, config.depth_threshold)
        deepest = max(wells, key=lambda w: w.depth) if wells else None
        rows.append([p, len(rows) + 1, len(wells),
                     deepest.depth if deepest else None,
                     deepest.t_center if deepest else None,
                     deepest.half_width if deepest else None])
    wells_path = out / "progressive_wells.csv"
    report.write_rows(wells_path, ["prime", "n_primes", "well_count", "max_depth",
                                   "max_depth_t", "max_depth_half_width"], rows)

    svg_path = out / "progressive.svg"
    _progressive_svg(svg_path, t, ens, sums, detect_wells(sums[-1], config.depth_threshold),
                     config, _maybe_refs(config))
    return [csv_path, wells_path, svg_path]


def _progressive_svg(path, t, ens, sums, wells, config, refs):
    fig = Figure(900, 640, f"Progressive superposition, x = {ens.exponent:g}, "
                           f"theta = {config.theta}")
    lo = min(float(s.values.min()) for s in sums)
    hi = max(float(s.values.max()) for s in sums)
    xlim = (float(t[0]), float(t[-1]))
    a = fig.panel(70, 50, 800, 250, xlim, padded_limits(lo, hi),
                  title=f"(a) partial sums over primes 2..{int(ens.primes[-1])}")
    n = len(sums)
    for j, s in enumerate(sums):
        a.line(t, s.values, color=PALETTE[j % len(PALETTE)], width=0.6,
               opacity=0.35 + 0.65 * (j + 1) / n)
    a.hline(0.0)
    full = sums[-1].values
    b = fig.panel(70, 350, 800, 250, xlim, padded_limits(float(full.min()), float(full.max())),
                  title=f"(b) full ensemble ({n} primes) with wells deeper than "
                        f"{config.depth_threshold:g}")
    b.line(t, full, color="#000000", width=1.0)
    b.hline(0.0)
    b.hline(-config.depth_threshold, color="#d62728")
    for w in wells:
        b.marker(w.t_center, -w.depth)
    if refs is not None:
        for o in refs.ordinates:
            a.vline(o)
            b.vline(o)
    fig.save(path)


# -- weight-exponent comparison ----------------------------------------------

SUMMARY_FIELDS = ["exponent", "cutoff", "n_primes", "weight_sum", "budget", "budget_gap",
                  "max_abs", "crossing_count", "well_count", "deepest_well"]


def _cell_name(x, cutoff):
    return f"cell_x{x:g}_P{int(cutoff)}"


def run_weight_comparison(config):
    """Raw signal S for every (exponent, cutoff) cell on a common grid.

    Per cell: ``cell_x<x>_P<P>.csv``.  Also ``weight_comparison_summary.csv``
    (max |S|, crossing and well counts, budget and its gap to the smallest
    cutoff for the same exponent) and ``weight_comparison.svg`` with one row
    per exponent and one column per cutoff, reference ordinates dashed.
    """
    _prepare(config)
    refs = _maybe_refs(config)
    cutoffs = sorted(int(c) for c in config.cutoffs)
    full = sieve_primes(cutoffs[-1], cache_path=config.cache_path)
    cells = [(x, c) for x in config.exponents for c in cutoffs]
    out = config.output_dir

    def run_cell(cell):
        x, c = cell
        ens = build_ensemble(full.prefix(c), x)
        sig = eval_grid(ens, config.grid, threads=1)
        _check_bound(sig.values, ens.weight_sum, f"cell x={x:g} P={c}")
        path = out / f"{_cell_name(x, c)}.csv"
        sig.to_csv(path)
        crossings = detect_crossings(sig, ens)
        wells = detect_wells(sig, config.depth_threshold)
        budget = amplitude_budget(ens.table, x)
        return {"path": path, "signal": sig, "ens": ens, "crossings": crossings,
                "wells": wells, "budget": budget}

    workers = config.threads or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]

    base_budget = {}
    for (x, c), r in zip(cells, results):
        base_budget.setdefault(x, r["budget"].exact)
    rows = []
    for (x, c), r in zip(cells, results):
        deepest = max((w.depth for w in r["wells"]), default=None)
        rows.append([x, c, len(r["ens"]), r["ens"].weight_sum, r["budget"].exact,
                     r["budget"].exact - base_budget[x], float(np.max(np.abs(r["signal"].values))),
                     len(r["crossings"]), len(r["wells"]), deepest])
    summary_path = out / "weight_comparison_summary.csv"
    report.write_rows(summary_path, SUMMARY_FIELDS, rows)

    svg_path = out / "weight_comparison.svg"
    _comparison_svg(svg_path, config, cells, results, refs)
    return [r["path"] for r in results] + [summary_path, svg_path]


def _comparison_svg(path, config, cells, results, refs):
    xs = list(dict.fromkeys(x for x, _ in cells))
    cs = list(dict.fromkeys(c for _, c in cells))
    pw, ph, gap = 520, 200, 60
    fig = Figure(90 + len(cs) * (pw + gap), 60 + len(xs) * (ph + gap),
                 "Raw prime cosine signal by weight exponent")
    t = config.grid.samples()
    xlim = (float(t[0]), float(t[-1]))
    for (x, c), r in zip(cells, results):
        i, j = xs.index(x), cs.index(c)
        v = r["signal"].values
        panel = fig.panel(70 + j * (pw + gap), 60 + i * (ph + gap), pw, ph, xlim,
                          padded_limits(float(v.min()), float(v.max())),
                          title=f"x = {x:g}, P = {c} ({len(r['ens'])} primes)")
        panel.hline(0.0)
        panel.line(t, v, color="#1f4e9c", width=0.7)
        if refs is not None:
            for o in refs.ordinates:
                panel.vline(o)
    fig.save(path)


# -- scaling study -----------------------------------------------------------

def run_scaling_study(config):
    """Budget and RMS-slope tables across cutoffs for each exponent.

    Writes ``scaling_budget.csv``, ``scaling_slope.csv`` and a log-log
    ``scaling.svg`` of heuristic RMS slope against P with the predicted power
    law drawn through the first point.
    """
    cutoffs = sorted(int(c) for c in config.cutoffs)
    if len(cutoffs) < 3:
        raise DomainError("the scaling study needs at least 3 cutoffs")
    _prepare(config)
    full = sieve_primes(cutoffs[-1], cache_path=config.cache_path)
    window = rms_window(*config.rms_window)

    budgets, slopes = [], []
    for x in config.exponents:
        budgets.extend(amplitude_budget(full.prefix(c), x) for c in cutoffs)
        slopes.append(fit_scaling_exponent(x, cutoffs, window=window,
                                           n_samples=config.rms_samples, seed=config.seed,
                                           cache_path=config.cache_path))
    out = config.output_dir
    budget_path = out / "scaling_budget.csv"
    report.write_rows(budget_path, report.BUDGET_FIELDS, report.budget_rows(budgets))
    slope_path = out / "scaling_slope.csv"
    report.write_rows(slope_path, report.SLOPE_FIELDS,
                      [row for s in slopes for row in report.slope_rows(s)])
    svg_path = out / "scaling.svg"
    _scaling_svg(svg_path, cutoffs, slopes)
    return [budget_path, slope_path, svg_path]


def _scaling_svg(path, cutoffs, slopes):
    fig = Figure(760, 520, "Heuristic RMS slope against prime cutoff (log-log)")
    lo = min(min(s.heuristic_rms) for s in slopes)
    hi = max(max(s.heuristic_rms) for s in slopes)
    panel = fig.panel(80, 50, 620, 400, (cutoffs[0], cutoffs[-1]), (lo / 1.5, hi * 1.5),
                      title="solid: heuristic RMS slope; dashed: predicted power law",
                      xlog=True, ylog=True)
    for k, s in enumerate(slopes):
        color = PALETTE[k % len(PALETTE)]
        panel.line(s.cutoffs, s.heuristic_rms, color=color, width=1.5)
        for c, h in zip(s.cutoffs, s.heuristic_rms):
            panel.marker(c, h, color=color, r=2.5)
        guide = [s.heuristic_rms[0] * (c / s.cutoffs[0]) ** s.predicted_exponent for c in s.cutoffs]
        panel.line(s.cutoffs, guide, color=color, width=1.0, dash="5,4")
    fig.save(path)


RUNNERS = {
    "progressive": run_progressive,
    "weight_comparison": run_weight_comparison,
    "scaling_study": run_scaling_study,
}


def run(config):
    return RUNNERS[config.experiment](config)


# -- flat key-value configuration ---------------------------------------------

def read_config_file(path):
    """Parse ``key = value`` lines (``#`` comments) into a dict of strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key = value, got {line!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out

