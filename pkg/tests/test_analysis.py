import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from oracles import budget_hp
from prime_lab import (
    DomainError,
    Regime,
    SampledSignal,
    SampleGrid,
    ToneSet,
    amplitude_budget,
    budget_integral_approx,
    build_ensemble,
    classify_regime,
    coincidence_fraction,
    detect_crossings,
    detect_wells,
    empirical_rms_signal,
    empirical_rms_slope,
    eval_grid,
    eval_point,
    fit_scaling_exponent,
    heuristic_rms_slope,
    sieve_primes,
)
from prime_lab.analysis import default_slope_floor, residual_bound, rms_window
from prime_lab.errors import DegenerateSignalWarning

# frozen from 30-digit mpmath sums over a bytearray sieve (tests/oracles.py)
BUDGET = {
    0.25: {100: 5.5364818525985161, 10**4: 29.143693058716959, 10**6: 176.35170090268177},
    0.5: {100: 1.8028172010488709, 10**3: 2.1980801271750875, 10**4: 2.4830599472335606,
          10**5: 2.7052721790472641, 10**6: 2.8873280995676727},
    0.75: {100: 0.817672252416145, 10**4: 0.84774063849495364, 10**6: 0.84943453639605339},
}
HEURISTIC_RMS = {
    0.25: {10**4: 26.653402478472298, 10**5: 54.689652210709828, 10**6: 108.56583262122944},
    0.5: {10**4: 4.4722781723588359, 10**5: 5.6467159748156071, 10**6: 6.8150643589120555},
    0.75: {10**4: 1.2592821703487757, 10**5: 1.2864017580009628, 10**6: 1.2968048611255562},
}
LNLN_100_MINUS_LNLN_2 = 1.8936925463895654


def lnln(p):
    return math.log(math.log(p))


def cos_signal(t_start=0.0, t_end=10.0, n=1001):
    grid = SampleGrid(t_start, t_end, n)
    return SampledSignal(grid, np.cos(grid.samples()))


class TestCrossings:
    def test_cosine_roots(self, cosine_tone):
        crossings = detect_crossings(cos_signal(), cosine_tone)
        assert [c.t0 for c in crossings] == pytest.approx(
            [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2], abs=1e-9)
        assert [c.slope for c in crossings] == pytest.approx([-1, 1, -1], abs=1e-6)

    def test_p10_self_consistent(self, ens10):
        grid = SampleGrid(0.0, 30.0, 3001)
        sig = eval_grid(ens10, grid)
        crossings = detect_crossings(sig, ens10)
        assert crossings
        h = grid.spacing
        for c in crossings:
            assert abs(eval_point(ens10, c.t0)) < 1e-9
            assert np.sign(eval_point(ens10, c.t0 - h)) * np.sign(eval_point(ens10, c.t0 + h)) == -1

    def test_definition_holds_literally(self):
        e = build_ensemble(sieve_primes(1000), 0.5)
        sig = eval_grid(e, SampleGrid(140.0, 160.0, 3000))
        crossings = detect_crossings(sig, e)
        assert crossings
        floor = default_slope_floor(e)
        ts = [c.t0 for c in crossings]
        assert ts == sorted(ts)
        assert np.all(np.diff(ts) >= sig.grid.spacing / 2)
        for c in crossings:
            assert abs(eval_point(e, c.t0)) == c.residual < residual_bound(e)
            assert abs(c.slope) > floor

    def test_no_sign_change(self, cosine_tone):
        grid = SampleGrid(0.0, 5.0, 50)
        assert detect_crossings(SampledSignal(grid, np.full(50, 0.5)), cosine_tone) == []

    def test_zero_signal_warns(self, cosine_tone):
        grid = SampleGrid(0.0, 5.0, 50)
        with pytest.warns(DegenerateSignalWarning):
            assert detect_crossings(SampledSignal(grid, np.zeros(50)), cosine_tone) == []

    def test_odd_symmetry(self):
        e = build_ensemble(sieve_primes(100), 0.5)
        tones = ToneSet(e.logs, e.weights)
        sig = eval_grid(tones, SampleGrid(140.0, 160.0, 3000))
        pos = detect_crossings(sig, tones)
        neg = detect_crossings(-sig, tones.negated())
        assert [c.t0 for c in pos] == [c.t0 for c in neg]
        assert [c.slope for c in pos] == [-c.slope for c in neg]

    def test_tangency_dropped(self):
        # cos(t) - 1 + eps crosses near +-sqrt(2 eps) with slopes -+sqrt(2 eps):
        # nearly a tangency, kept or dropped by the slope floor
        eps = 1e-4
        tones = ToneSet([0.0, 1.0], [-1.0 + eps, 1.0])
        sig = eval_grid(tones, SampleGrid(-1.0, 1.0, 201))
        kept = detect_crossings(sig, tones, slope_floor=0.0)
        assert [c.t0 for c in kept] == pytest.approx([-math.sqrt(2 * eps), math.sqrt(2 * eps)],
                                                     rel=1e-4)
        assert detect_crossings(sig, tones, slope_floor=0.1) == []


class TestWells:
    def test_cosine_wells(self):
        wells = detect_wells(cos_signal(), 0.5)
        assert [w.t_center for w in wells] == pytest.approx([math.pi, 3 * math.pi], abs=1e-5)
        assert [w.depth for w in wells] == pytest.approx([1.0, 1.0], abs=1e-8)
        # enclosing zero crossings at pi/2..3pi/2 and 5pi/2..7pi/2 (the latter beyond t=10)
        assert wells[0].half_width == pytest.approx(math.pi / 2, abs=1e-4)
        assert wells[1].half_width == pytest.approx(0.5 * (10.0 - 2.5 * math.pi), abs=1e-4)

    def test_threshold_above_weight_sum(self):
        e = build_ensemble(sieve_primes(100), 0.5)
        sig = eval_grid(e, SampleGrid(140.0, 160.0, 3000))
        assert detect_wells(sig, e.weight_sum * 1.0001) == []

    def test_p100_wells_confirmed_directly(self):
        e = build_ensemble(sieve_primes(100), 0.5)
        sig = eval_grid(e, SampleGrid(140.0, 160.0, 3000))
        wells = detect_wells(sig, 1.0)
        assert wells
        for w in wells:
            assert w.half_width > 0
            assert eval_point(e, w.t_center) < -1.0

    def test_threshold_domain(self):
        with pytest.raises(DomainError):
            detect_wells(cos_signal(), 0.0)


class TestCoincidence:
    def test_t0_is_constructive(self):
        assert coincidence_fraction(sieve_primes(1000), 0.0, 0.1) == 0.0

    def test_single_prime_at_pi(self):
        assert coincidence_fraction(sieve_primes(10), math.pi / math.log(2), 0.01) == 0.25

    @pytest.mark.parametrize("delta", [0.0, -0.1, math.pi, 4.0])
    def test_delta_domain(self, delta):
        with pytest.raises(DomainError):
            coincidence_fraction(sieve_primes(10), 1.0, delta)

    def test_deepest_minimum_beats_random_t(self):
        table = sieve_primes(100)
        e = build_ensemble(table, 0.5)
        sig = eval_grid(e, SampleGrid(140.0, 160.0, 3000))
        t_min = sig.t[np.argmin(sig.values)]
        rng = np.random.default_rng(11)
        background = np.mean([coincidence_fraction(table, t, math.pi / 2)
                              for t in rng.uniform(140, 160, 100)])
        assert coincidence_fraction(table, t_min, math.pi / 2) > background

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-1e4, 1e4), st.floats(0.01, 3.0), st.floats(0.01, 3.0))
    def test_symmetry_and_monotone(self, t, d1, d2):
        table = sieve_primes(1000)
        lo, hi = sorted((d1, d2))
        f = coincidence_fraction(table, t, lo)
        assert 0.0 <= f <= 1.0
        assert coincidence_fraction(table, t, hi) >= f
        assert coincidence_fraction(table, -t, lo) == f


class TestBudget:
    def test_p10(self):
        r = amplitude_budget(sieve_primes(10), 0.5)
        assert r.exact == pytest.approx(1 / 2 + 1 / 3 + 1 / 5 + 1 / 7, rel=1e-15)
        assert r.regime is Regime.BALANCE

    def test_single_prime(self):
        for x in (0.1, 0.5, 2.0):
            r = amplitude_budget(sieve_primes(2), x)
            assert r.exact == pytest.approx(2 ** (-2 * x), rel=1e-15)
            assert r.integral_approx == 0.0

    @pytest.mark.parametrize("x", [0.25, 0.5, 0.75])
    def test_frozen_values(self, x):
        full = sieve_primes(10**6)
        for cutoff, value in BUDGET[x].items():
            assert amplitude_budget(full.prefix(cutoff), x).exact == pytest.approx(value, rel=1e-13)

    def test_oracle_behind_frozen_values(self):
        primes = sieve_primes(10**4).primes.tolist()
        assert budget_hp(primes[:25], 0.5) == pytest.approx(BUDGET[0.5][100], rel=1e-15)
        assert budget_hp(primes, 0.25) == pytest.approx(BUDGET[0.25][10**4], rel=1e-15)

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            amplitude_budget(sieve_primes(10), x)

    @pytest.mark.parametrize("x,regime", [(0.25, Regime.HIGH_ENERGY), (0.5, Regime.BALANCE),
                                          (0.5 + 1e-13, Regime.BALANCE),
                                          (0.5 + 1e-9, Regime.OVER_DAMPED),
                                          (0.75, Regime.OVER_DAMPED)])
    def test_regime(self, x, regime):
        assert classify_regime(x) is regime

    def test_trichotomy(self):
        # thresholds pre-verified against the frozen oracle values
        b = BUDGET
        assert b[0.25][10**6] / b[0.25][10**4] > 5
        ratio = b[0.5][10**6] / b[0.5][10**4]
        assert 1.0 < ratio < 1.35
        diff = b[0.5][10**6] - b[0.5][10**4]
        target = lnln(1e6) - lnln(1e4)
        assert abs(diff - target) / target < 0.15
        assert b[0.75][10**6] - b[0.75][10**4] < 0.02


class TestIntegral:
    def test_balance_closed_form(self):
        assert budget_integral_approx(100, 0.5) == pytest.approx(LNLN_100_MINUS_LNLN_2, rel=1e-12)
        assert budget_integral_approx(100, 0.5) == pytest.approx(1.89369, abs=1e-5)

    @pytest.mark.parametrize("P", [3.0, 100.0, 1e4, 1e6, 1e9])
    @pytest.mark.parametrize("x", [0.1, 0.25, 0.4, 0.75, 1.0, 2.0])
    def test_against_exponential_integral(self, P, x):
        a = 1 - 2 * x
        exact = special.expi(a * math.log(P)) - special.expi(a * math.log(2))
        assert budget_integral_approx(P, x) == pytest.approx(exact, rel=1e-8)

    def test_empty_limit(self):
        assert budget_integral_approx(2 + 1e-12, 0.3) == pytest.approx(0.0, abs=1e-11)

    @pytest.mark.parametrize("P", [2, 1.5, 0])
    def test_domain(self, P):
        with pytest.raises(DomainError):
            budget_integral_approx(P, 0.5)


class TestSlope:
    def test_p10(self):
        rms = heuristic_rms_slope(sieve_primes(10), 0.5)
        # 0.5 * sum (ln p)^2 / p over 2,3,5,7 at 30 digits
        assert rms**2 == pytest.approx(0.85076947502703787, rel=1e-14)
        assert rms == pytest.approx(0.92237165775355320, rel=1e-14)

    def test_single_prime(self):
        assert heuristic_rms_slope(sieve_primes(2), 0.5) == pytest.approx(math.log(2) / 2, rel=1e-15)

    @pytest.mark.parametrize("x", [0.25, 0.5, 0.75])
    def test_frozen_values(self, x):
        full = sieve_primes(10**6)
        for c, v in HEURISTIC_RMS[x].items():
            assert heuristic_rms_slope(full.prefix(c), x) == pytest.approx(v, rel=1e-13)

    def test_bounded_regime(self):
        full = sieve_primes(10**6)
        a = heuristic_rms_slope(full.prefix(10**4), 0.75)
        b = heuristic_rms_slope(full.prefix(10**6), 0.75)
        assert abs(b - a) / a < 0.05

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5000), st.integers(2, 5000), st.floats(0.05, 2.0))
    def test_nondecreasing_in_cutoff(self, c1, c2, x):
        full = sieve_primes(5000)
        lo, hi = sorted((c1, c2))
        assert heuristic_rms_slope(full.prefix(lo), x) <= heuristic_rms_slope(full.prefix(hi), x)

    def test_strictly_increasing_for_small_x(self):
        full = sieve_primes(10**5)
        for x in (0.3, 0.5):
            vals = [heuristic_rms_slope(full.prefix(c), x) for c in (10, 100, 1000, 10**4, 10**5)]
            assert np.all(np.diff(vals) > 0)

    def test_empirical_single_tone(self):
        a, w = 2.5, 3.0
        tone = ToneSet([w], [a])
        got = empirical_rms_slope(tone, rms_window(0.0, 1000.0), 5000, seed=1)
        assert got == pytest.approx(a * w / math.sqrt(2), rel=0.02)

    def test_empirical_deterministic(self):
        e = build_ensemble(sieve_primes(1000), 0.5)
        w = rms_window()
        assert empirical_rms_slope(e, w, 500, 42) == empirical_rms_slope(e, w, 500, 42)
        assert empirical_rms_slope(e, w, 500, 42) != empirical_rms_slope(e, w, 500, 43)

    def test_empirical_domain(self):
        e = build_ensemble(sieve_primes(100), 0.5)
        with pytest.raises(DomainError):
            empirical_rms_slope(e, rms_window(), 99, 0)

    def test_empirical_near_heuristic_p1e4(self):
        table = sieve_primes(10**4)
        e = build_ensemble(table, 0.5)
        emp = empirical_rms_slope(e, rms_window(1000.0, 2000.0), 5000, seed=0)
        assert abs(emp - heuristic_rms_slope(table, 0.5)) / heuristic_rms_slope(table, 0.5) < 0.25

    @pytest.mark.parametrize("cutoff", [1000, 10**4])
    def test_signal_rms_near_budget(self, cutoff):
        table = sieve_primes(cutoff)
        e = build_ensemble(table, 0.5)
        emp = empirical_rms_signal(e, rms_window(1000.0, 2000.0), 5000, seed=0)
        target = math.sqrt(amplitude_budget(table, 0.5).exact / 2)
        assert abs(emp - target) / target < 0.25


class TestFit:
    CUTS = [10**4, 10**5, 10**6]

    def test_fits(self):
        r25 = fit_scaling_exponent(0.25, self.CUTS)
        r50 = fit_scaling_exponent(0.5, self.CUTS)
        r75 = fit_scaling_exponent(0.75, self.CUTS)
        assert abs(r25.fitted_exponent - 0.25) < 0.06
        assert abs(r75.fitted_exponent) < 0.02
        assert r75.fitted_exponent < r50.fitted_exponent < r25.fitted_exponent
        assert (r25.predicted_exponent, r50.predicted_exponent, r75.predicted_exponent) == (0.25, 0, 0)

    def test_fit_matches_frozen_sums(self):
        for x, vals in HEURISTIC_RMS.items():
            slope = np.polyfit(np.log(self.CUTS), np.log([vals[c] for c in self.CUTS]), 1)[0]
            assert fit_scaling_exponent(x, self.CUTS).fitted_exponent == pytest.approx(slope, abs=1e-12)

    def test_with_empirical(self):
        r = fit_scaling_exponent(0.75, [1000, 2000, 4000], window=rms_window(), n_samples=200)
        assert len(r.empirical_rms) == 3
        for h, emp in zip(r.heuristic_rms, r.empirical_rms):
            assert abs(emp - h) / h < 0.25

    @pytest.mark.parametrize("cutoffs", [[10**4, 10**5], [10**5, 10**4, 10**6], [100, 10**4, 10**5]])
    def test_domain(self, cutoffs):
        with pytest.raises(DomainError):
            fit_scaling_exponent(0.5, cutoffs)
