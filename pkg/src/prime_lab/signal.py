"""Evaluation of prime-frequency cosine sums.

The raw signal is ``S(t) = sum_p w_p cos(t ln p)`` and its derivative
``S'(t) = -sum_p w_p ln p sin(t ln p)``.  The phase-referenced signal is
``W(t) = 2 sum_p w_p cos(theta(t) - t ln p)``.

Pointwise evaluation uses exactly rounded summation (:func:`math.fsum`).
Grid evaluation advances each prime's phase along the grid by complex
rotation and resynchronises with direct sin/cos every ``RESYNC`` steps; see
:func:`oscillatory_sums`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, DomainError
from .summation import NeumaierAccumulator, compensated_sum_rows

RESYNC = 256
PRIME_BLOCK = 4096
PREFIX_CEILING = 1000
# upper bound on elements of a (points x primes) scratch matrix
_BATCH_ELEMENTS = 1 << 22


def default_threads():
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True, eq=False)
class ToneSet:
    """Arbitrary frequencies and amplitudes summed like a prime ensemble.

    Test harnesses use this for single-tone signals such as ``cos(t)``.
    """

    logs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        logs = np.array(self.logs, dtype=np.float64, ndmin=1)
        weights = np.array(self.weights, dtype=np.float64, ndmin=1)
        if logs.shape != weights.shape:
            raise ValueError("logs and weights differ in length")
        logs.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "logs", logs)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.logs)

    @property
    def weight_sum(self):
        return math.fsum(np.abs(self.weights))

    def negated(self):
        return ToneSet(self.logs, -self.weights)


@dataclass(frozen=True)
class SampleGrid:
    t_start: float
    t_end: float
    n_samples: int

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise DomainError(f"a grid needs at least 2 samples, got {self.n_samples}")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise DomainError("grid bounds must be finite")
        if not self.t_start < self.t_end:
            raise DomainError(f"grid needs t_start < t_end, got [{self.t_start}, {self.t_end}]")
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n_samples", int(self.n_samples))

    @property
    def spacing(self):
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    def samples(self):
        # linspace computes start + k*step and pins the last point to t_end
        return np.linspace(self.t_start, self.t_end, self.n_samples)


@dataclass(eq=False)
class SampledSignal:
    grid: SampleGrid
    values: np.ndarray
    derivatives: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_samples,):
            raise ValueError("values do not match the grid")
        if self.derivatives is not None:
            self.derivatives = np.asarray(self.derivatives, dtype=np.float64)
            if self.derivatives.shape != self.values.shape:
                raise ValueError("derivatives do not match the grid")

    @property
    def t(self):
        return self.grid.samples()

    def __neg__(self):
        d = None if self.derivatives is None else -self.derivatives
        return SampledSignal(self.grid, -self.values, d)

    def to_csv(self, path):
        cols = {"t": self.t, "value": self.values}
        if self.derivatives is not None:
            cols["derivative"] = self.derivatives
        write_csv(path, cols)

    @classmethod
    def from_csv(cls, path):
        header, data = read_csv(path)
        if header[:2] != ["t", "value"]:
            raise ValueError(f"{path}: expected header t,value[,derivative]")
        t = data[:, 0]
        grid = SampleGrid(float(t[0]), float(t[-1]), len(t))
        deriv = data[:, 2] if len(header) > 2 and header[2] == "derivative" else None
        return cls(grid, data[:, 1].copy(), None if deriv is None else deriv.copy())


def format_float(v):
    return format(float(v), ".17g")


def write_csv(path, columns):
    """Write equal-length columns (name -> array) with 17 significant digits."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=np.float64) for n in names]
    lines = [",".join(names)]
    for row in zip(*(a.tolist() for a in arrays)):
        lines.append(",".join(format(v, ".17g") for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


@dataclass(frozen=True)
class PhaseReference:
    """theta(t) for the phase-referenced signal.

    ``zero``: 0; ``linear``: ``rate * t``; ``rs``: the Riemann-Siegel
    approximation ``(t/2) ln(t/2pi) - t/2 - pi/8`` (requires t > 0).
    """

    kind: str = "zero"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "linear", "rs"):
            raise DomainError(f"unknown phase reference {self.kind!r}")

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text == "zero":
            return cls("zero")
        if text in ("rs", "riemann-siegel"):
            return cls("rs")
        if text.startswith("linear:"):
            try:
                rate = float(text.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"bad linear rate in {text!r}") from None
            return cls("linear", rate)
        raise DomainError(f"phase reference must be zero, linear:<rate> or rs, got {text!r}")

    def __str__(self):
        return f"linear:{self.rate:g}" if self.kind == "linear" else self.kind

    def check(self, t_min):
        if self.kind == "rs" and not t_min > 0:
            raise DomainError("the Riemann-Siegel phase reference needs t > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "linear":
            return self.rate * t
        self.check(np.min(t))
        return 0.5 * t * np.log(t / (2 * np.pi)) - 0.5 * t - np.pi / 8


def eval_point(ensemble, t):
    t = float(t)
    return math.fsum(ensemble.weights * np.cos(t * ensemble.logs))


def eval_derivative_point(ensemble, t):
    t = float(t)
    return -math.fsum(ensemble.weights * ensemble.logs * np.sin(t * ensemble.logs))


def eval_points(ensemble, ts, derivative=False):
    """Vectorised pointwise evaluation at arbitrary ``ts`` (pairwise row sums)."""
    ts = np.asarray(ts, dtype=np.float64).ravel()
    logs = ensemble.logs
    amps = ensemble.weights * logs if derivative else ensemble.weights
    out = np.empty(len(ts))
    rows = max(1, _BATCH_ELEMENTS // max(1, len(logs)))
    for i in range(0, len(ts), rows):
        ph = np.multiply.outer(ts[i : i + rows], logs)
        if derivative:
            out[i : i + rows] = -(np.sin(ph) * amps).sum(axis=1)
        else:
            out[i : i + rows] = (np.cos(ph) * amps).sum(axis=1)
    return out


def eval_points_phase_referenced(ensemble, ts, theta=None):
    """W at arbitrary ``ts`` by direct term-by-term summation."""
    theta = theta or PhaseReference()
    ts = np.asarray(ts, dtype=np.float64).ravel()
    th = theta(ts)
    out = np.empty(len(ts))
    for i, (tk, thk) in enumerate(zip(ts.tolist(), th.tolist())):
        out[i] = 2.0 * math.fsum(ensemble.weights * np.cos(thk - tk * ensemble.logs))
    return out


def _rotation_table(logs, delta, m):
    """Rows j = 0..m-1 of exp(i j delta ln p) built by repeated rotation."""
    zr = np.cos(delta * logs)
    zi = np.sin(delta * logs)
    rr = np.empty((m, len(logs)))
    ri = np.empty((m, len(logs)))
    rr[0] = 1.0
    ri[0] = 0.0
    for j in range(1, m):
        rr[j] = rr[j - 1] * zr - ri[j - 1] * zi
        ri[j] = rr[j - 1] * zi + ri[j - 1] * zr
    return rr, ri


def _block_unit(logs, cos_amp, sin_amp, t, delta, seg_starts, out_c, out_s):
    n = len(t)
    rr, ri = _rotation_table(logs, delta, min(RESYNC, n))
    for s in seg_starts:
        m = min(RESYNC, n - s)
        ph = t[s] * logs
        c = np.cos(ph)
        sn = np.sin(ph)
        # cos(ph + j d) = c R_re - sn R_im ; sin(ph + j d) = sn R_re + c R_im
        if cos_amp is not None:
            acc = rr[:m] * (cos_amp * c)
            acc -= ri[:m] * (cos_amp * sn)
            out_c[s : s + m] = acc.sum(axis=1)
        if sin_amp is not None:
            acc = rr[:m] * (sin_amp * sn)
            acc += ri[:m] * (sin_amp * c)
            out_s[s : s + m] = acc.sum(axis=1)


def oscillatory_sums(logs, grid, cos_amp=None, sin_amp=None, threads=None):
    """Grid sums ``sum_p a_p cos(t ln p)`` and ``sum_p b_p sin(t ln p)``.

    Primes are split into fixed blocks of ``PRIME_BLOCK``; the grid into fixed
    segments of ``RESYNC`` points.  Within a block each prime's phase is
    rotated by ``delta * ln p`` per step and recomputed directly at every
    segment start.  Row sums are pairwise, and block partials are combined in
    block order with compensation.  The partition never depends on
    ``threads``, so the output is bit-identical for any worker count.
    """
    logs = np.asarray(logs, dtype=np.float64)
    t = grid.samples()
    n = len(t)
    delta = grid.spacing
    threads = default_threads() if threads is None else max(1, int(threads))
    blocks = [slice(i, i + PRIME_BLOCK) for i in range(0, len(logs), PRIME_BLOCK)]
    segs = list(range(0, n, RESYNC))
    part_c = np.zeros((len(blocks), n)) if cos_amp is not None else None
    part_s = np.zeros((len(blocks), n)) if sin_amp is not None else None

    # spread segments over workers when blocks alone cannot keep them busy
    n_groups = max(1, min(len(segs), threads // len(blocks))) if blocks else 1
    groups = [segs[g::n_groups] for g in range(n_groups)]
    units = []
    for bi, sl in enumerate(blocks):
        for g in groups:
            units.append((
                logs[sl],
                None if cos_amp is None else cos_amp[sl],
                None if sin_amp is None else sin_amp[sl],
                t, delta, g,
                None if part_c is None else part_c[bi],
                None if part_s is None else part_s[bi],
            ))

    if threads == 1 or len(units) == 1:
        for u in units:
            _block_unit(*u)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda u: _block_unit(*u), units))

    cos_sum = None if part_c is None else compensated_sum_rows(part_c)
    sin_sum = None if part_s is None else compensated_sum_rows(part_s)
    return cos_sum, sin_sum


def eval_grid(ensemble, grid, with_derivative=False, threads=None):
    deriv_amp = ensemble.weights * ensemble.logs if with_derivative else None
    values, neg_deriv = oscillatory_sums(ensemble.logs, grid, ensemble.weights, deriv_amp, threads)
    derivatives = None if neg_deriv is None else -neg_deriv
    return SampledSignal(grid, values, derivatives)


def eval_phase_referenced(ensemble, grid, theta=None, threads=None):
    """W(t) = 2 sum_p w_p cos(theta(t) - t ln p) on a grid.

    Expanded as ``2 (cos(theta) C(t) + sin(theta) S(t))`` with
    ``C = sum w cos(t ln p)`` and ``S = sum w sin(t ln p)`` from the grid kernel.
    """
    theta = theta or PhaseReference()
    theta.check(grid.t_start)
    c, s = oscillatory_sums(ensemble.logs, grid, ensemble.weights, ensemble.weights, threads)
    th = theta(grid.samples())
    return SampledSignal(grid, 2.0 * (np.cos(th) * c + np.sin(th) * s))


def prime_contribution(logs_p, weight_p, t, th):
    """One prime's term 2 w cos(theta - t ln p) of the phase-referenced signal."""
    return 2.0 * weight_p * np.cos(th - t * logs_p)


def progressive_partial_sums(ensemble, grid, theta=None, prefix_ceiling=PREFIX_CEILING):
    """Phase-referenced signals using the first 1, 2, ..., N primes."""
    theta = theta or PhaseReference()
    cutoff = getattr(ensemble, "cutoff", None)
    if cutoff is not None and cutoff > prefix_ceiling:
        raise CapacityError(
            f"progressive sums emit one signal per prime; cutoff {cutoff} exceeds {prefix_ceiling}"
        )
    theta.check(grid.t_start)
    t = grid.samples()
    th = theta(t)
    acc = NeumaierAccumulator(t.shape)
    out = []
    for lp, wp in zip(ensemble.logs, ensemble.weights):
        acc.add(prime_contribution(lp, wp, t, th))
        out.append(SampledSignal(grid, acc.total))
    return out
