"""Simulator and analysis toolkit for multi-ensemble cascade atomic clocks.

Cascades of atomic ensembles with reduced evolution frequencies or reduced
probe periods digitize the oscillator phase, extending the invertible phase
range exponentially in the number of ensembles.  This package provides the
exact measurement-outcome models, the wrap-count reconstruction, exact
wrap-error probability enumeration with ensemble-size and state-width
optimization, the decoupling-pulse algebra, a closed-loop clock simulator
with Allan statistics, and a CLI that emits the headline tables and curves
as CSV plus rendered figures.
"""

from .cascade import (
    REDUCED_FREQUENCY,
    REDUCED_PERIOD,
    CascadeConfig,
    CascadeReading,
    UnwrappedPhase,
    max_probe_period,
    max_unambiguous_phase,
    unwrap_chain,
    unwrap_period_chain,
    unwrap_step,
)
from .clock_sim import (
    ClockConfig,
    ClockRun,
    StabilityPoint,
    allan_deviation,
    cascade_stability,
    simulate_clock,
    standard_ramsey_stability,
    variance_ratio,
)
from .error_analysis import (
    GAUSSIAN,
    RAMSEY,
    ErrorCurvePoint,
    ExponentialFit,
    SchemeSpec,
    error_curve,
    fit_exponential,
    min_ensemble_size,
    min_ensemble_size_with_optimal_width,
    optimize_gaussian_width,
    step_error_probability,
    total_error_probability,
)
from .errors import (
    ConfigError,
    DegeneratePhaseError,
    InsufficientDataError,
    NonpositiveProbabilityError,
    SearchBoundExceededError,
)
from .measurement import (
    GaussianStateSpec,
    OutcomeDistribution,
    PhaseEstimate,
    RamseyEnsembleSpec,
    gaussian_amplitudes,
    phase_from_k,
    phase_from_quadratures,
    phase_state_distribution,
    ramsey_expectations,
    ramsey_outcome_distribution,
    sample_outcome,
)
from .oscillator import (
    PER_INTERVAL_GAUSSIAN,
    WHITE_FREQUENCY,
    LinearRamp,
    NoiseModel,
    PulseSequence,
    dd_accumulated_phase,
    dd_pulse_times,
    sample_phase_deviation,
)
from .util import wrap_angle

__version__ = "0.1.0"
