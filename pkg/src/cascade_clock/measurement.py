"""Phase-measurement models for atomic ensembles.

Two readout schemes are modeled as exact discrete outcome distributions and
as seeded samplers:

* split-ensemble Ramsey readout, where half the atoms are measured along the
  cosine quadrature and half along the sine quadrature of the accumulated
  phase, and the phase estimate is the argument of the centred quadrature
  vector;
* collective readout of a Gaussian-envelope symmetric-subspace state in the
  phase-state basis, where the outcome index maps linearly onto a coarse
  phase estimate.

All probabilities are exact up to floating-point rounding.  Operations are
pure; samplers take an explicit random generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegeneratePhaseError
from .util import TWO_PI, wrap_angle

# Probabilities below this are clamped to zero: far beneath every tolerance
# used downstream, and it keeps denormals out of tail sums.
PROBABILITY_FLOOR = 1e-300


@dataclass(frozen=True)
class RamseyEnsembleSpec:
    """Atom budget for a split-ensemble quadrature measurement.

    The ensemble is divided into two halves; one measures the cosine
    quadrature, the other the sine quadrature.
    """

    atoms_total: int

    def __post_init__(self):
        if self.atoms_total < 2 or self.atoms_total % 2 != 0:
            raise ValueError("atoms_total must be an even integer >= 2")

    @property
    def sub_ensemble(self) -> int:
        return self.atoms_total // 2


@dataclass(frozen=True)
class GaussianStateSpec:
    """Parameters of the collective Gaussian-envelope initial state."""

    atoms: int
    width: float

    def __post_init__(self):
        if self.atoms < 1:
            raise ValueError("atoms must be >= 1")
        if not self.width > 0:
            raise ValueError("width must be positive")


@dataclass(frozen=True)
class PhaseEstimate:
    """A single wrapped phase estimate in (-pi, pi]."""

    beta: float

    def __post_init__(self):
        if not (-math.pi < self.beta <= math.pi):
            raise ValueError("beta must lie in (-pi, pi]")


@dataclass(eq=False)
class OutcomeDistribution:
    """Discrete measurement-outcome distribution at a fixed true phase.

    `labels` identifies outcomes (excited-atom count pairs for the quadrature
    model, basis index for the phase-state model), `probabilities` their exact
    weights, and `implied_phases` the wrapped phase estimate each outcome
    implies.
    """

    labels: np.ndarray
    probabilities: np.ndarray
    implied_phases: np.ndarray
    true_phase: float

    def __post_init__(self):
        probs = self.probabilities
        if probs.ndim != 1 or len(probs) != len(self.implied_phases):
            raise ValueError("probabilities and implied_phases must align")
        if len(self.labels) != len(probs):
            raise ValueError("labels must align with probabilities")
        if np.any(probs < 0.0) or np.any(probs > 1.0 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        if np.any(self.implied_phases <= -np.pi) or np.any(
            self.implied_phases > np.pi
        ):
            raise ValueError("implied phases must lie in (-pi, pi]")

    def wrap_errors(self) -> np.ndarray:
        """Wrapped estimator error of each outcome: wrap(beta - true phase)."""
        return wrap_angle(self.implied_phases - self.true_phase)


def ramsey_expectations(phi: float) -> tuple[float, float]:
    """Excited-state fractions expected from the two quadrature halves."""
    if not math.isfinite(phi):
        raise ValueError("phi must be finite")
    return 0.5 * (1.0 + math.cos(phi)), 0.5 * (1.0 + math.sin(phi))


def phase_from_quadratures(x: float, y: float) -> PhaseEstimate:
    """Phase estimate from measured quadrature fractions.

    Raises DegeneratePhaseError when both fractions are exactly 1/2 (zero
    vector); the caller decides the policy for that outcome.
    """
    dx = x - 0.5
    dy = y - 0.5
    if dx == 0.0 and dy == 0.0:
        raise DegeneratePhaseError("quadrature vector has zero length")
    beta = math.atan2(dy, dx)
    if beta <= -math.pi:  # atan2(-0.0, negative) corner
        beta = math.pi
    return PhaseEstimate(beta)


def ramsey_outcome_distribution(
    spec: RamseyEnsembleSpec, phi: float
) -> OutcomeDistribution:
    """Exact joint outcome distribution of the split-ensemble measurement.

    Enumerates every pair of excited-atom counts for the two binomial halves.
    The degenerate pair with both fractions exactly 1/2 is assigned implied
    phase 0 by convention (its weight is exponentially small).
    """
    nh = spec.sub_ensemble
    ex, ey = ramsey_expectations(phi)
    counts = np.arange(nh + 1)
    px = stats.binom.pmf(counts, nh, ex)
    py = stats.binom.pmf(counts, nh, ey)
    probs = np.outer(px, py).ravel()
    probs[probs < PROBABILITY_FLOOR] = 0.0

    frac = counts / nh - 0.5
    dx = np.repeat(frac, nh + 1)
    dy = np.tile(frac, nh + 1)
    betas = np.arctan2(dy, dx)
    betas[(dx == 0.0) & (dy == 0.0)] = 0.0

    labels = np.stack(
        [np.repeat(counts, nh + 1), np.tile(counts, nh + 1)], axis=1
    )
    return OutcomeDistribution(labels, probs, betas, float(phi))


def gaussian_amplitudes(spec: GaussianStateSpec) -> np.ndarray:
    """Real amplitudes of the alternating-sign Gaussian-envelope state.

    The envelope is evaluated for excitation numbers 0..N and normalized
    after that truncation.
    """
    n = spec.atoms
    m = np.arange(n + 1, dtype=float)
    amps = (-1.0) ** np.arange(n + 1) * np.exp(
        -((m - n / 2.0) ** 2) / (n * spec.width)
    )
    return amps / np.linalg.norm(amps)


def phase_from_k(k: int, atoms: int) -> PhaseEstimate:
    """Phase estimate implied by phase-state outcome index k.

    The map beta = wrap(pi - 2*pi*k/(N+1)) absorbs the alternating signs of
    the initial state so that zero true phase yields estimates concentrated
    around zero (at +-half a bin).
    """
    if not 0 <= k <= atoms:
        raise ValueError("k must lie in 0..atoms")
    return PhaseEstimate(wrap_angle(math.pi - TWO_PI * k / (atoms + 1)))


def phase_state_distribution(
    amplitudes: np.ndarray, phi: float
) -> OutcomeDistribution:
    """Exact outcome distribution of the phase-state-basis measurement.

    Phase evolution multiplies amplitude m by exp(-i*m*phi); the outcome
    probabilities are the squared magnitudes of the discrete Fourier
    transform of the evolved amplitudes.  With these sign conventions a
    phase step of 2*pi/(N+1) translates the distribution by exactly one
    outcome index (cyclically).
    """
    amps = np.asarray(amplitudes, dtype=float)
    if abs(np.dot(amps, amps) - 1.0) > 1e-9:
        raise ValueError("amplitudes must be normalized")
    n = len(amps) - 1
    m = np.arange(n + 1)
    evolved = amps * np.exp(-1j * m * phi)
    coeffs = np.fft.fft(evolved) / math.sqrt(n + 1)
    probs = coeffs.real**2 + coeffs.imag**2
    probs[probs < PROBABILITY_FLOOR] = 0.0
    betas = wrap_angle(np.pi - TWO_PI * m / (n + 1))
    return OutcomeDistribution(m.copy(), probs, betas, float(phi))


def sample_outcome(
    dist: OutcomeDistribution,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw outcome indices from the distribution (deterministic per seed).

    Returns positions into `dist.labels`; for the phase-state model the
    position equals the outcome index itself.
    """
    cdf = np.cumsum(dist.probabilities)
    u = rng.random(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    if size is None:
        return int(idx)
    return idx
