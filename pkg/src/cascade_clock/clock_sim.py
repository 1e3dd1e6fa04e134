"""Closed-loop clock simulation and stability statistics.

Each cycle draws the oscillator's phase deviation, measures every ensemble,
reconstructs the extended-range phase through the cascade, and steers the
oscillator with a proportional frequency correction.  The recorded
fractional-frequency series is the per-cycle estimate error (the correction
error at unit gain), whose Allan deviation realizes the projection-noise
stability limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cascade import (
    REDUCED_FREQUENCY,
    REDUCED_PERIOD,
    CascadeConfig,
    CascadeReading,
    max_probe_period,
    max_unambiguous_phase,
    unwrap_chain,
    unwrap_period_chain,
)
from .errors import ConfigError, InsufficientDataError
from .measurement import GaussianStateSpec, gaussian_amplitudes
from .oscillator import PER_INTERVAL_GAUSSIAN, NoiseModel
from .util import TWO_PI, wrap_angle

RAMSEY = "ramsey"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class StabilityPoint:
    """Allan deviation at one averaging time."""

    tau: float
    sigma_y: float


@dataclass(frozen=True)
class ClockConfig:
    """Full configuration of a closed-loop run.

    `servo_gain` scales the once-per-cycle proportional frequency correction.
    Unit gain is the simplest loop, but it feeds each cycle's phase noise
    back into the next cycle, inflating the steady-state deviation by sqrt(2)
    and with it the odds of range excursions; validation runs use a small
    gain so the six-sigma probe budget holds in closed loop.
    """

    atomic_frequency: float
    noise: NoiseModel
    cascade: CascadeConfig
    model: str = RAMSEY
    gaussian_width: float | None = None
    cycles: int = 100_000
    seed: int = 0
    servo_gain: float = 1.0

    def __post_init__(self):
        if not self.atomic_frequency > 0:
            raise ConfigError("atomic_frequency must be positive")
        if self.model not in (RAMSEY, GAUSSIAN):
            raise ConfigError("model must be 'ramsey' or 'gaussian'")
        if self.model == GAUSSIAN and self.gaussian_width is None:
            raise ConfigError("gaussian model requires gaussian_width")
        if self.model == RAMSEY and self.cascade.atoms_per_ensemble % 2 != 0:
            raise ConfigError("ramsey model requires even atoms per ensemble")
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")
        if not 0 < self.servo_gain <= 1:
            raise ConfigError("servo_gain must lie in (0, 1]")
        if self.noise.alpha > 0:
            theta = max_unambiguous_phase(self.cascade.ensembles, self.cascade.ratio)
            limit = max_probe_period(self.noise.alpha, theta)
            if self.cascade.base_period > limit * (1.0 + 1e-9):
                raise ConfigError(
                    f"probe period {self.cascade.base_period} exceeds "
                    f"max_probe_period {limit}"
                )


@dataclass(eq=False)
class ClockRun:
    """Per-cycle record of a closed-loop run.

    `fractional_frequency[i]` is the cycle's phase-estimate error divided by
    (atomic frequency * probe period): the error of the applied correction at
    unit servo gain, and the series whose Allan deviation the closed-form
    stability limits describe.
    """

    config: ClockConfig
    true_phase: np.ndarray
    estimated_phase: np.ndarray
    correction: np.ndarray
    wrap_error: np.ndarray
    fractional_frequency: np.ndarray

    @property
    def cycle_period(self) -> float:
        return self.config.cascade.base_period


def standard_ramsey_stability(
    omega: float, alpha: float, atoms: int, ensembles: int, tau: float
) -> float:
    """Projection-noise floor of a single-range clock using all M*N atoms."""
    _require_positive(omega=omega, alpha=alpha, atoms=atoms, ensembles=ensembles, tau=tau)
    return math.sqrt(12.0 * alpha) / (omega * math.sqrt(ensembles * atoms * math.pi * tau))


def cascade_stability(
    omega: float, alpha: float, atoms: int, ensembles: int, ratio: float, tau: float
) -> float:
    """Projection-noise floor of the cascade clock at its maximum probe period."""
    _require_positive(omega=omega, alpha=alpha, atoms=atoms, ensembles=ensembles, tau=tau)
    if not ratio > 1:
        raise ValueError("ratio must exceed 1")
    return math.sqrt(6.0 * alpha) / (
        omega * math.sqrt(ratio ** (ensembles - 1) * atoms * math.pi * tau)
    )


def variance_ratio(ensembles: int, ratio: float) -> float:
    """Cascade frequency variance over the equal-atom single-range variance.

    Equals cascade_stability**2 / standard_ramsey_stability**2 at the same
    (atoms, ensembles) arguments: M * D**(1-M) / 2.
    """
    if ensembles < 1:
        raise ValueError("ensembles must be >= 1")
    if not ratio > 1:
        raise ValueError("ratio must exceed 1")
    return ensembles * ratio ** (1 - ensembles) / 2.0


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive")


def allan_deviation(
    y: np.ndarray, cycle_period: float, multiples
) -> list[StabilityPoint]:
    """Non-overlapping two-sample deviation at tau = m * cycle_period.

    Adjacent block averages of length m are differenced; their half mean
    square is the Allan variance.
    """
    y = np.asarray(y, dtype=float)
    points = []
    for m in multiples:
        m = int(m)
        if m < 1 or len(y) < 2 * m:
            raise InsufficientDataError(
                f"series of length {len(y)} cannot support tau multiple {m}"
            )
        blocks = len(y) // m
        means = y[: blocks * m].reshape(blocks, m).mean(axis=1)
        diffs = np.diff(means)
        points.append(
            StabilityPoint(m * cycle_period, float(np.sqrt(0.5 * np.mean(diffs**2))))
        )
    return points


def _make_measurer(config: ClockConfig, rng: np.random.Generator):
    """Per-ensemble measurement closure: true phase -> wrapped estimate."""
    if config.model == RAMSEY:
        nh = config.cascade.atoms_per_ensemble // 2

        def measure(phi: float) -> float:
            kx = rng.binomial(nh, 0.5 * (1.0 + math.cos(phi)))
            ky = rng.binomial(nh, 0.5 * (1.0 + math.sin(phi)))
            dx = kx / nh - 0.5
            dy = ky / nh - 0.5
            if dx == 0.0 and dy == 0.0:
                return 0.0
            return math.atan2(dy, dx)

    else:
        n = config.cascade.atoms_per_ensemble
        amps = gaussian_amplitudes(GaussianStateSpec(n, config.gaussian_width))
        m = np.arange(n + 1)
        scale = 1.0 / math.sqrt(n + 1)

        def measure(phi: float) -> float:
            coeffs = np.fft.fft(amps * np.exp(-1j * m * phi)) * scale
            probs = coeffs.real**2 + coeffs.imag**2
            cdf = np.cumsum(probs)
            k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            k = min(k, n)
            return wrap_angle(math.pi - TWO_PI * k / (n + 1))

    return measure


def simulate_clock(config: ClockConfig) -> ClockRun:
    """Run the feedback loop and record the per-cycle series.

    Reduced-frequency levels see the cycle phase divided exactly by D**j
    (the divided oscillators track the master); reduced-period levels see
    block sums of independently drawn finest sub-interval deviations.  A
    cycle is flagged as a wrap error when the reconstructed phase differs
    from the true deviation by at least pi.
    """
    rng = np.random.default_rng(config.seed)
    cas = config.cascade
    period = cas.base_period
    levels = cas.ensembles
    ratio = cas.ratio
    omega = config.atomic_frequency
    gain = config.servo_gain
    alpha = config.noise.alpha
    measure = _make_measurer(config, rng)

    true_phase = np.empty(config.cycles)
    est_phase = np.empty(config.cycles)
    correction = np.empty(config.cycles)
    wrap_flag = np.zeros(config.cycles, dtype=bool)

    offset = 0.0  # steered frequency offset, rad/s

    if cas.scheme == REDUCED_FREQUENCY:
        inv_ratios = [ratio**-j for j in range(levels)]
        for i in range(config.cycles):
            phi0 = offset * period + rng.normal(0.0, alpha * period)
            reading = CascadeReading(
                [np.array([measure(phi0 * r)]) for r in inv_ratios]
            )
            est = unwrap_chain(reading, cas).total_phase
            _record(i, phi0, est, true_phase, est_phase, wrap_flag)
            corr = -gain * est / period
            correction[i] = corr
            offset += corr
    else:
        d = int(ratio)
        finest_count = d ** (levels - 1)
        finest_period = period / finest_count
        if config.noise.kind == PER_INTERVAL_GAUSSIAN:
            finest_std = alpha * finest_period
        else:
            finest_std = alpha * math.sqrt(period * finest_period)
        for i in range(config.cycles):
            finest = offset * finest_period + rng.normal(
                0.0, finest_std, finest_count
            )
            phi0 = float(finest.sum())
            sub_phases = [
                finest.reshape(d**j, -1).sum(axis=1) if j else np.array([phi0])
                for j in range(levels)
            ]
            measured = CascadeReading(
                [np.array([measure(p) for p in lv]) for lv in sub_phases]
            )
            est = unwrap_period_chain(measured, cas).total_phase
            _record(i, phi0, est, true_phase, est_phase, wrap_flag)
            corr = -gain * est / period
            correction[i] = corr
            offset += corr

    y = (est_phase - true_phase) / (omega * period)
    return ClockRun(config, true_phase, est_phase, correction, wrap_flag, y)


def _record(i, phi0, est, true_phase, est_phase, wrap_flag):
    true_phase[i] = phi0
    est_phase[i] = est
    if abs(est - phi0) >= math.pi:
        wrap_flag[i] = True
