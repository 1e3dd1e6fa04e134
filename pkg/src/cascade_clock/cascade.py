"""Wrap-count reconstruction for cascaded ensemble measurements.

A cascade of M ensembles extends the unambiguous phase range from pi to
D**(M-1)*pi.  Each combination step recovers the integer wrap count of a
faster (or longer-probed) ensemble from the one below it:

* reduced-frequency scheme: ensemble j evolves D**-j times slower; one
  estimate per level, combined by the rounding recursion
  P[j-1] = round(D*P[j] + (D*beta[j] - beta[j-1]) / (2*pi));
* reduced-period scheme: ensemble j is measured D**j times with probe
  period D**-j * T; each level-(j-1) measurement's wrap count is the
  rounded difference between the summed unwrapped level-j estimates and
  its own wrapped estimate.

Rounding uses round-half-to-even so enumeration and simulation agree
bit-for-bit; ties occur with probability zero under continuous phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .util import TWO_PI

REDUCED_FREQUENCY = "reduced-frequency"
REDUCED_PERIOD = "reduced-period"
SCHEMES = (REDUCED_FREQUENCY, REDUCED_PERIOD)


@dataclass(frozen=True)
class CascadeConfig:
    """Geometry of a measurement cascade.

    `ratio` may be any real > 1 for the reduced-frequency scheme (covering
    natural transition-frequency ratios); the reduced-period scheme requires
    an integer ratio >= 2.
    """

    ensembles: int
    ratio: float
    scheme: str
    atoms_per_ensemble: int
    base_period: float

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.ensembles < 1:
            raise ValueError("ensembles must be >= 1")
        if self.scheme == REDUCED_PERIOD:
            if self.ratio != int(self.ratio) or self.ratio < 2:
                raise ValueError("reduced-period requires integer ratio >= 2")
        elif not self.ratio > 1:
            raise ValueError("reduced-frequency requires ratio > 1")
        if self.atoms_per_ensemble < 1:
            raise ValueError("atoms_per_ensemble must be >= 1")
        if not self.base_period > 0:
            raise ValueError("base_period must be positive")


@dataclass
class CascadeReading:
    """Per-level wrapped phase estimates for one cascade combination.

    `levels[j]` holds the estimates of level j: one value for the
    reduced-frequency scheme, D**j values (time-ordered) for the
    reduced-period scheme.  Every estimate must lie in (-pi, pi].
    """

    levels: list[np.ndarray]

    def __post_init__(self):
        self.levels = [np.atleast_1d(np.asarray(lv, dtype=float)) for lv in self.levels]
        for lv in self.levels:
            if np.any(lv <= -np.pi) or np.any(lv > np.pi):
                raise ValueError("estimates must lie in (-pi, pi]")


@dataclass(frozen=True)
class UnwrappedPhase:
    """Extended-range phase estimate: total = wrapped estimate + 2*pi*wraps."""

    total_phase: float
    wrap_count: int


def unwrap_step(
    wrap_count: int, beta: float, beta_prev: float, ratio: float
) -> int:
    """One rounding step of the wrap-count recursion (half-to-even ties)."""
    return int(
        round(ratio * wrap_count + (ratio * beta - beta_prev) / TWO_PI)
    )


def unwrap_chain(reading: CascadeReading, config: CascadeConfig) -> UnwrappedPhase:
    """Reduced-frequency reconstruction from the slowest level down.

    The deepest level's wrap count is zero by construction (the probe period
    is chosen so its phase cannot wrap); each step then determines the next
    level's integer exactly unless the error condition |D*G_j - G_{j-1}| >= pi
    is met.
    """
    if config.scheme != REDUCED_FREQUENCY:
        raise ValueError("unwrap_chain requires the reduced-frequency scheme")
    levels = reading.levels
    if len(levels) != config.ensembles:
        raise ValueError("reading level count must equal config.ensembles")
    betas = [float(lv[0]) for lv in levels]
    wraps = 0
    for j in range(config.ensembles - 1, 0, -1):
        wraps = unwrap_step(wraps, betas[j], betas[j - 1], config.ratio)
    return UnwrappedPhase(betas[0] + TWO_PI * wraps, wraps)


def unwrap_period_chain(
    reading: CascadeReading, config: CascadeConfig
) -> UnwrappedPhase:
    """Reduced-period reconstruction by nested block summation.

    Level j's D**j unwrapped estimates are summed in blocks of D; each block
    sum fixes the wrap count of the level-(j-1) measurement it spans.  The
    deepest level is wrap-free per measurement by construction.
    """
    if config.scheme != REDUCED_PERIOD:
        raise ValueError("unwrap_period_chain requires the reduced-period scheme")
    levels = reading.levels
    if len(levels) != config.ensembles:
        raise ValueError("reading level count must equal config.ensembles")
    d = int(config.ratio)
    for j, lv in enumerate(levels):
        if len(lv) != d**j:
            raise ValueError(f"level {j} must carry {d**j} estimates")
    unwrapped = levels[-1].astype(float).copy()
    wraps = np.zeros(1)
    for j in range(config.ensembles - 1, 0, -1):
        block_sums = unwrapped.reshape(-1, d).sum(axis=1)
        wraps = np.round((block_sums - levels[j - 1]) / TWO_PI)
        unwrapped = levels[j - 1] + TWO_PI * wraps
    return UnwrappedPhase(float(unwrapped[0]), int(wraps[0]))


def max_unambiguous_phase(ensembles: int, ratio: float) -> float:
    """Largest phase magnitude the cascade can invert: D**(M-1) * pi."""
    if ensembles < 1:
        raise ValueError("ensembles must be >= 1")
    if not ratio > 1:
        raise ValueError("ratio must exceed 1")
    return ratio ** (ensembles - 1) * math.pi


def max_probe_period(alpha: float, theta: float) -> float:
    """Longest probe period keeping wrap errors six-sigma events: theta/(6*alpha)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    return theta / (6.0 * alpha)
