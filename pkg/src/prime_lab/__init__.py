"""Numerical laboratory for finite prime-weighted oscillatory signals."""

from .analysis import (
    BudgetReport,
    Crossing,
    Regime,
    SlopeScalingReport,
    Well,
    amplitude_budget,
    budget_integral_approx,
    classify_regime,
    coincidence_fraction,
    detect_crossings,
    detect_wells,
    empirical_rms_signal,
    empirical_rms_slope,
    fit_scaling_exponent,
    heuristic_rms_slope,
    rms_window,
)
from .errors import CapacityError, DomainError, EmptyRangeError, ParseError, PrimeLabError
from .experiments import (
    ExperimentConfig,
    ReferenceOrdinates,
    load_reference_ordinates,
    run_progressive,
    run_scaling_study,
    run_weight_comparison,
)
from .primes import PrimeTable, WeightedEnsemble, build_ensemble, sieve_primes
from .signal import (
    PhaseReference,
    SampledSignal,
    SampleGrid,
    ToneSet,
    eval_derivative_point,
    eval_grid,
    eval_phase_referenced,
    eval_point,
    eval_points,
    eval_points_phase_referenced,
    progressive_partial_sums,
)

__version__ = "0.1.0"
