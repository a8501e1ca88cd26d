"""Crossings, interference wells, amplitude budgets and slope scaling."""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DegenerateSignalWarning, DomainError
from .primes import build_ensemble, sieve_primes
from .signal import SampleGrid, eval_derivative_point, eval_point, eval_points

log = logging.getLogger(__name__)

BALANCE_TOL = 1e-12
MAX_BISECTIONS = 80
SLOPE_FLOOR_FACTOR = 1e-6


class Regime(str, enum.Enum):
    HIGH_ENERGY = "HighEnergy"
    BALANCE = "Balance"
    OVER_DAMPED = "OverDamped"

    def __str__(self):
        return self.value


def classify_regime(x):
    if abs(x - 0.5) <= BALANCE_TOL:
        return Regime.BALANCE
    return Regime.HIGH_ENERGY if x < 0.5 else Regime.OVER_DAMPED


def _check_exponent(x):
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"weight exponent must be > 0, got {x}")
    return x


@dataclass(frozen=True)
class Crossing:
    t0: float
    slope: float
    residual: float


@dataclass(frozen=True)
class Well:
    t_center: float
    depth: float
    half_width: float


@dataclass(frozen=True)
class BudgetReport:
    cutoff: int
    exponent: float
    exact: float
    integral_approx: float
    regime: Regime


@dataclass
class SlopeScalingReport:
    exponent: float
    cutoffs: list
    heuristic_rms: list
    fitted_exponent: float
    predicted_exponent: float
    empirical_rms: Optional[list] = field(default=None)


def _weight_powers(table, x):
    return np.power(table.primes.astype(np.float64), -2.0 * x)


# -- crossings ---------------------------------------------------------------

def residual_bound(ensemble):
    return 1e-10 * (1.0 + ensemble.weight_sum)


def default_slope_floor(ensemble):
    return SLOPE_FLOOR_FACTOR * _rms_of_slope_terms(ensemble.weights, ensemble.logs)


def _rms_of_slope_terms(weights, logs):
    return math.sqrt(0.5 * math.fsum((weights * logs) ** 2))


def _bisect_batch(ensemble, lo, hi, tol):
    """Bisect every bracket [lo_i, hi_i] together until |f(mid)| < tol."""
    f_lo = eval_points(ensemble, lo)
    f_hi = eval_points(ensemble, hi)
    ok = np.sign(f_lo) * np.sign(f_hi) < 0
    roots = np.full(len(lo), np.nan)
    active = ok.copy()
    lo, hi, f_lo = lo.copy(), hi.copy(), f_lo.copy()
    for _ in range(MAX_BISECTIONS):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        fm = eval_points(ensemble, mid)
        done = np.abs(fm) < tol
        roots[idx[done]] = mid[done]
        active[idx[done]] = False
        left = ~done & (np.sign(fm) == np.sign(f_lo[idx]))
        # root lies in [mid, hi] when f(mid) has the sign of f(lo)
        lo[idx[left]] = mid[left]
        f_lo[idx[left]] = fm[left]
        right = ~done & ~left
        hi[idx[right]] = mid[right]
    # brackets exhausted at ulp width: keep the midpoint and let the residual check decide
    rest = np.flatnonzero(active)
    roots[rest] = 0.5 * (lo[rest] + hi[rest])
    return roots


def detect_crossings(signal, ensemble, slope_floor=None):
    """Zero-like crossings: sign changes refined to a root with nonzero slope.

    Each strict sign change between adjacent samples is bisected on the
    pointwise signal until ``|S| < 1e-10 (1 + sum|w|)``; the slope at the root
    must exceed ``slope_floor`` (default ``1e-6`` times the heuristic RMS
    slope) in magnitude, otherwise the point is treated as a tangency.
    """
    v = signal.values
    if not np.any(v):
        warnings.warn("signal is identically zero; no crossings can be located",
                      DegenerateSignalWarning, stacklevel=2)
        return []
    t = signal.t
    tol = residual_bound(ensemble)
    floor = default_slope_floor(ensemble) if slope_floor is None else slope_floor

    k = np.flatnonzero(v[:-1] * v[1:] < 0)
    candidates = list(_bisect_batch(ensemble, t[k], t[k + 1], tol)) if len(k) else []
    # a sample that is exactly zero between opposite signs is itself a root
    z = np.flatnonzero((v[1:-1] == 0) & (v[:-2] * v[2:] < 0)) + 1
    candidates.extend(t[z])

    found = []
    for t0 in sorted(c for c in candidates if not math.isnan(c)):
        residual = abs(eval_point(ensemble, t0))
        if residual >= tol:
            log.debug("dropping unconverged root near %r (residual %g)", t0, residual)
            continue
        slope = eval_derivative_point(ensemble, t0)
        if abs(slope) <= floor:
            continue
        found.append(Crossing(float(t0), slope, residual))

    half = 0.5 * signal.grid.spacing
    out = []
    for c in found:
        if out and c.t0 - out[-1].t0 < half:
            continue
        out.append(c)
    return out


# -- wells -------------------------------------------------------------------

def _enclosing_edge(t, v, k, step):
    """Where the signal last rises to >= 0 walking from k by ``step``."""
    j = k
    while 0 <= j + step < len(v):
        if v[j + step] >= 0:
            a, b = v[j], v[j + step]
            # linear interpolation of the sign change
            return t[j] + (t[j + step] - t[j]) * (a / (a - b)) if a != b else t[j + step]
        j += step
    return t[j]


def detect_wells(signal, depth_threshold):
    """Local minima deeper than ``-depth_threshold``.

    The discrete minimum is refined by a parabola through three samples.
    ``half_width`` is half the distance between the enclosing zero
    crossings, or the grid boundary when the signal stays negative.
    """
    if not depth_threshold > 0:
        raise DomainError(f"depth threshold must be > 0, got {depth_threshold}")
    v = signal.values
    t = signal.t
    h = signal.grid.spacing
    if len(v) < 3:
        return []
    inner = np.arange(1, len(v) - 1)
    is_min = (v[inner] < v[inner - 1]) & (v[inner] <= v[inner + 1]) & (v[inner] < -depth_threshold)
    wells = []
    for k in inner[is_min]:
        a, b, c = v[k - 1], v[k], v[k + 1]
        curv = a - 2 * b + c
        if curv > 0:
            off = 0.5 * (a - c) / curv
            value = b - 0.125 * (a - c) ** 2 / curv
        else:
            off, value = 0.0, b
        left = _enclosing_edge(t, v, k, -1)
        right = _enclosing_edge(t, v, k, +1)
        wells.append(Well(float(t[k] + off * h), float(-value), float(0.5 * (right - left))))
    return wells


# -- coincidence of cosine minima ------------------------------------------

def coincidence_fraction(table, t, delta):
    """Fraction of primes whose phase ``t ln p`` lies within ``delta`` of pi mod 2pi."""
    if not 0 < delta < math.pi:
        raise DomainError(f"delta must lie in (0, pi), got {delta}")
    if len(table.logs) == 0:
        return 0.0
    # |t ln p|: the band is symmetric about pi, so t and -t must agree exactly
    phase = np.mod(np.abs(float(t) * table.logs), 2 * math.pi)
    return float(np.count_nonzero(np.abs(phase - math.pi) < delta)) / len(table.logs)


# -- amplitude budget --------------------------------------------------------

def budget_integral_approx(P, x):
    """Prime-number-theorem estimate ``int_2^P u^(-2x) / ln u du``.

    Integrated in ``v = ln u`` as ``int exp((1 - 2x) v) / v dv`` with adaptive
    Gauss-Kronrod quadrature.  At the balance exponent the result is checked
    against the closed form ``ln ln P - ln ln 2``.
    """
    x = _check_exponent(x)
    P = float(P)
    if not P > 2:
        raise DomainError(f"integral needs P > 2, got {P}")
    a = 1.0 - 2.0 * x
    value, _ = integrate.quad(lambda v: math.exp(a * v) / v, math.log(2.0), math.log(P),
                              epsabs=0.0, epsrel=1e-12, limit=200)
    if classify_regime(x) is Regime.BALANCE:
        exact = math.log(math.log(P)) - math.log(math.log(2.0))
        if abs(value - exact) > 1e-8 * abs(exact):
            raise ArithmeticError(f"quadrature {value} disagrees with ln ln P form {exact}")
    return value


def amplitude_budget(table, x):
    x = _check_exponent(x)
    exact = math.fsum(_weight_powers(table, x))
    approx = budget_integral_approx(table.cutoff, x) if table.cutoff > 2 else 0.0
    return BudgetReport(int(table.cutoff), x, exact, approx, classify_regime(x))


# -- slope scaling -----------------------------------------------------------

def heuristic_rms_slope(table, x):
    """sqrt(1/2 sum_p p^(-2x) (ln p)^2), the quasi-random-phase RMS of S'."""
    x = _check_exponent(x)
    return math.sqrt(0.5 * math.fsum(_weight_powers(table, x) * table.logs**2))


def _uniform_times(window, n_samples, seed):
    if n_samples < 100:
        raise DomainError(f"need at least 100 samples, got {n_samples}")
    lo, hi = window.t_start, window.t_end
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError("degenerate sampling window")
    return np.random.default_rng(seed).uniform(lo, hi, int(n_samples))


def empirical_rms_slope(ensemble, window, n_samples, seed):
    """RMS of S' at seeded uniform random points of ``window``."""
    d = eval_points(ensemble, _uniform_times(window, n_samples, seed), derivative=True)
    return math.sqrt(math.fsum(d * d) / len(d))


def empirical_rms_signal(ensemble, window, n_samples, seed):
    """RMS of S itself under the same sampling contract as the slope."""
    s = eval_points(ensemble, _uniform_times(window, n_samples, seed))
    return math.sqrt(math.fsum(s * s) / len(s))


def predicted_slope_exponent(x):
    return (1.0 - 2.0 * x) / 2.0 if classify_regime(x) is Regime.HIGH_ENERGY else 0.0


def fit_scaling_exponent(x, cutoffs, *, window=None, n_samples=1000, seed=0, cache_path=None):
    """Least-squares slope of ln(heuristic RMS slope) against ln P.

    With ``window`` set, the empirical RMS slope is sampled at each cutoff as
    well (``n_samples`` seeded uniform points).
    """
    x = _check_exponent(x)
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) < 3:
        raise DomainError("need at least 3 cutoffs to fit a scaling exponent")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise DomainError("cutoffs must be strictly increasing")
    if cutoffs[0] < 1000:
        raise DomainError("smallest cutoff must be >= 1000")

    full = sieve_primes(cutoffs[-1], cache_path=cache_path)
    tables = [full.prefix(c) for c in cutoffs]
    heur = [heuristic_rms_slope(tb, x) for tb in tables]
    slope, _ = np.polyfit(np.log(cutoffs), np.log(heur), 1)
    emp = None
    if window is not None:
        emp = [empirical_rms_slope(build_ensemble(tb, x), window, n_samples, seed) for tb in tables]
    return SlopeScalingReport(x, cutoffs, heur, float(slope), predicted_slope_exponent(x), emp)


def rms_window(t_start=1000.0, t_end=2000.0):
    return SampleGrid(t_start, t_end, 2)
