"""Oscillator phase-noise abstraction and decoupling-pulse generation.

The oscillator's phase deviation over a probe interval is modeled as a
zero-mean Gaussian whose standard deviation is the noise coefficient times
the interval.  Two-pulse decoupling sequences scale the net phase evolution
of an ensemble by D**-j under any linear frequency ramp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PER_INTERVAL_GAUSSIAN = "per-interval-gaussian"
WHITE_FREQUENCY = "white-frequency"
NOISE_KINDS = (PER_INTERVAL_GAUSSIAN, WHITE_FREQUENCY)


@dataclass(frozen=True)
class NoiseModel:
    """Oscillator noise level and cross-interval interpretation.

    Both kinds draw a single interval's deviation as N(0, (alpha*T)**2).
    The kind matters only when one interval is split into sub-draws:
    per-interval-gaussian scales each sub-interval's deviation linearly with
    its length (the abstraction used throughout the analysis), while
    white-frequency scales it with the square root, making sub-deviations
    add up to the full-interval law.
    """

    alpha: float
    kind: str = PER_INTERVAL_GAUSSIAN

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class LinearRamp:
    """Linear detuning ramp: (atom - oscillator) frequency = omega0 + omega1*t."""

    omega0: float
    omega1: float


@dataclass(frozen=True)
class PulseSequence:
    """Sign-flip pulse times within one decoupling cycle.

    Pulses may coincide (a coincident pair cancels); an even count is not
    required for validity.
    """

    pulse_times: tuple[float, ...]
    cycle_length: float

    def __post_init__(self):
        if not self.cycle_length > 0:
            raise ValueError("cycle_length must be positive")
        times = self.pulse_times
        if any(t < 0 or t > self.cycle_length for t in times):
            raise ValueError("pulse times must lie within the cycle")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("pulse times must be nondecreasing")


def sample_phase_deviation(
    noise: NoiseModel,
    period: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw the phase deviation accumulated over one probe interval.

    One independent N(0, (alpha*period)**2) draw per interval for either
    noise kind; see NoiseModel for how sub-interval draws differ.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    return rng.normal(0.0, noise.alpha * period, size)


def dd_pulse_times(cycle_length: float, ratio: float, level: int) -> PulseSequence:
    """Two-pulse sequence scaling net phase evolution by ratio**-level.

    The first pulse sits at (T/4)*(1 + D**-j); the second is placed
    symmetrically so the two times always sum to the cycle length exactly.
    """
    if not cycle_length > 0:
        raise ValueError("cycle_length must be positive")
    if not ratio > 1:
        raise ValueError("ratio must exceed 1")
    if level < 0:
        raise ValueError("level must be >= 0")
    first = 0.25 * cycle_length * (1.0 + ratio ** (-level))
    second = cycle_length - first
    # second lies in [cycle/2, 3*cycle/4], so this subtraction is exact and
    # the pair sums to the cycle length bit-for-bit
    first = cycle_length - second
    return PulseSequence((first, second), cycle_length)


def dd_accumulated_phase(ramp: LinearRamp, seq: PulseSequence) -> float:
    """Net phase under the sequence: piecewise integral with sign toggles.

    Integrates omega0 + omega1*t in closed form over each segment, flipping
    the sign at every pulse.  Quadratic and higher drift terms are not
    rephased by a two-pulse sequence; their residual is the caller's to
    assess.
    """
    edges = (0.0,) + seq.pulse_times + (seq.cycle_length,)
    total = 0.0
    sign = 1.0
    for a, b in zip(edges, edges[1:]):
        total += sign * (ramp.omega0 * (b - a) + 0.5 * ramp.omega1 * (b * b - a * a))
        sign = -sign
    return total
