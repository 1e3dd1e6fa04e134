"""Exact wrap-error probabilities and ensemble-size/width optimization.

The cascade's combination step mis-assigns a wrap count exactly when the
weighted difference of the two levels' estimator errors reaches pi:

* reduced-frequency: |D*G_j - G_{j-1}| >= pi, with the lower level probed at
  D times the upper level's phase;
* reduced-period: |sum_s G_{j,s} - G_{j-1}| >= pi over the D sub-measurement
  errors that span one lower-level measurement.

Probabilities are computed by exact enumeration of the discrete outcome
distributions (tail accumulation over sorted atom values, no sampling and no
Gaussian approximation), then averaged over the true phase: a uniform
midpoint grid for the single free phase of the reduced-frequency step, and a
deterministic low-discrepancy grid of independent uniform sub-phases for the
reduced-period step.  Tail sums accumulate from their own end of the sorted
support, so probabilities are trustworthy down to ~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cascade import REDUCED_FREQUENCY, REDUCED_PERIOD, SCHEMES
from .errors import NonpositiveProbabilityError, SearchBoundExceededError
from .measurement import (
    GaussianStateSpec,
    RamseyEnsembleSpec,
    gaussian_amplitudes,
    phase_state_distribution,
    ramsey_outcome_distribution,
)
from .util import (
    golden_section_minimize,
    parallel_map,
    quasirandom_phase_tuples,
    uniform_phase_grid,
    wrap_angle,
)

RAMSEY = "ramsey"
GAUSSIAN = "gaussian"
MODELS = (RAMSEY, GAUSSIAN)

# Hard cap for the ensemble-size search; far above every regime of interest,
# so hitting it signals a misconfigured spec rather than a real answer.
SEARCH_CAP = 512

# Largest enumerated support for the reduced-period error sum.  The split
# below needs ceil((D+1)/2) convolved distributions per side; beyond this the
# exact enumeration would not fit in memory.
_MAX_SUM_ATOMS = 20_000_000

# Band around +-pi treated as an exact rounding tie.  Lattice-valued
# phase-state estimates put outcome combinations exactly on the boundary
# (float noise scatters them within ~1e-13), while genuine interior mass sits
# at least one lattice spacing (>= 2*pi/513) away.
_TIE_TOLERANCE = 1e-9

# Weight given to exact boundary ties per step kind.  A tie means the
# rounding argument is exactly half-integer, where round-half-to-even errs
# for half of the integer parities.  The ratio-scaled step evaluates the
# strict "exceeds 1/2" event (ties excluded); the sum step charges ties the
# parity-averaged weight 1/2.  Quadrature estimates make ties (nearly)
# measure-zero, so the choice only matters for the phase-state model; these
# weights reproduce the published minimum ensemble sizes for both schemes.
_TIE_WEIGHT = {REDUCED_FREQUENCY: 0.0, REDUCED_PERIOD: 0.5}


@dataclass(frozen=True)
class SchemeSpec:
    """Which combination step to analyze: scheme, readout model, ratio, width."""

    scheme: str
    model: str
    ratio: float
    gaussian_width: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.scheme == REDUCED_PERIOD:
            if self.ratio != int(self.ratio) or self.ratio < 2:
                raise ValueError("reduced-period requires integer ratio >= 2")
        elif not self.ratio > 1:
            raise ValueError("reduced-frequency requires ratio > 1")
        if (self.model == GAUSSIAN) != (self.gaussian_width is not None):
            raise ValueError("gaussian_width must be given iff model is gaussian")
        if self.gaussian_width is not None and not self.gaussian_width > 0:
            raise ValueError("gaussian_width must be positive")


@dataclass(frozen=True)
class ErrorCurvePoint:
    atoms: int
    probability: float


@dataclass(frozen=True)
class ExponentialFit:
    """Least-squares fit p = prefactor * exp(-rate * N) in log space."""

    prefactor: float
    rate: float
    residual: float


@lru_cache(maxsize=64)
def _cached_amplitudes(atoms: int, width: float) -> np.ndarray:
    return gaussian_amplitudes(GaussianStateSpec(atoms, width))


def _g_distribution(atoms: int, spec: SchemeSpec, phi: float):
    """(values, probabilities) of the wrapped estimator error at true phase phi."""
    if spec.model == RAMSEY:
        dist = ramsey_outcome_distribution(RamseyEnsembleSpec(atoms), phi)
    else:
        amps = _cached_amplitudes(atoms, spec.gaussian_width)
        dist = phase_state_distribution(amps, phi)
    return dist.wrap_errors(), dist.probabilities


def _tail_pair_probability(
    u_vals, u_probs, v_vals, v_probs, tie_weight: float
) -> float:
    """Probability that |U - V| reaches pi, for independent discrete U, V.

    Mass strictly beyond the boundary counts fully; mass within
    _TIE_TOLERANCE of +-pi (an exact rounding tie up to float noise) counts
    with `tie_weight`.  V's support is sorted once and each tail accumulates
    from its own end, so tiny tail masses keep full relative accuracy.
    """
    order = np.argsort(v_vals, kind="stable")
    vs = v_vals[order]
    vp = v_probs[order]
    below = np.cumsum(vp)
    above = np.cumsum(vp[::-1])[::-1]
    n = len(vs)

    def mass_at_most(thresholds):
        idx = np.searchsorted(vs, thresholds, side="right")
        return np.where(idx > 0, below[np.maximum(idx - 1, 0)], 0.0)

    def mass_at_least(thresholds):
        idx = np.searchsorted(vs, thresholds, side="left")
        return np.where(idx < n, above[np.minimum(idx, n - 1)], 0.0)

    tol = _TIE_TOLERANCE
    interior = mass_at_most(u_vals - np.pi - tol) + mass_at_least(
        u_vals + np.pi + tol
    )
    per_u = interior
    if tie_weight > 0.0:
        ties = (
            mass_at_most(u_vals - np.pi + tol)
            - mass_at_most(u_vals - np.pi - tol)
            + mass_at_least(u_vals + np.pi - tol)
            - mass_at_least(u_vals + np.pi + tol)
        )
        per_u = interior + tie_weight * ties
    return float(np.dot(u_probs, per_u))


def _outer_sum(vals_a, probs_a, vals_b, probs_b):
    vals = (vals_a[:, None] + vals_b[None, :]).ravel()
    probs = np.outer(probs_a, probs_b).ravel()
    return vals, probs


def _sum_tail_probability(upper_dists, lower_dist) -> float:
    """Probability that |sum_s G_s - G_lower| reaches pi, by exact enumeration.

    The D+1 independent terms are split into two halves, each convolved by
    outer sums, and the halves are paired through the sorted-tail routine.
    """
    terms = list(upper_dists) + [(-lower_dist[0], lower_dist[1])]
    half = (len(terms) + 1) // 2
    left_atoms = math.prod(len(v) for v, _ in terms[:half])
    right_atoms = math.prod(len(v) for v, _ in terms[half:])
    if max(left_atoms, right_atoms) > _MAX_SUM_ATOMS:
        raise ValueError(
            "reduced-period enumeration too large "
            f"({max(left_atoms, right_atoms)} outcome combinations per side); "
            "lower D or N"
        )
    left_v, left_p = terms[0]
    for v, p in terms[1:half]:
        left_v, left_p = _outer_sum(left_v, left_p, v, p)
    right_v, right_p = terms[half]
    for v, p in terms[half + 1 :]:
        right_v, right_p = _outer_sum(right_v, right_p, v, p)
    # event |L + R| reaches pi  <=>  |L - (-R)| reaches pi
    return _tail_pair_probability(
        left_v, left_p, -right_v, right_p, _TIE_WEIGHT[REDUCED_PERIOD]
    )


def _validate_atoms(atoms: int, spec: SchemeSpec):
    if spec.model == RAMSEY:
        if atoms < 2 or atoms % 2 != 0:
            raise ValueError("ramsey model requires even atoms >= 2")
    elif atoms < 1:
        raise ValueError("gaussian model requires atoms >= 1")


def step_error_probability(
    atoms: int, spec: SchemeSpec, phase_grid_size: int = 256
) -> float:
    """Exact phase-averaged probability that one combination step mis-rounds."""
    _validate_atoms(atoms, spec)
    if phase_grid_size < 64:
        raise ValueError("phase_grid_size must be >= 64")

    if spec.scheme == REDUCED_FREQUENCY:
        total = 0.0
        for phi in uniform_phase_grid(phase_grid_size):
            g_hi, p_hi = _g_distribution(atoms, spec, phi)
            g_lo, p_lo = _g_distribution(
                atoms, spec, wrap_angle(spec.ratio * phi)
            )
            total += _tail_pair_probability(
                spec.ratio * g_hi,
                p_hi,
                g_lo,
                p_lo,
                _TIE_WEIGHT[REDUCED_FREQUENCY],
            )
        return total / phase_grid_size

    d = int(spec.ratio)
    total = 0.0
    for sub_phis in quasirandom_phase_tuples(d, phase_grid_size):
        upper = [_g_distribution(atoms, spec, phi) for phi in sub_phis]
        lower = _g_distribution(atoms, spec, wrap_angle(sub_phis.sum()))
        total += _sum_tail_probability(upper, lower)
    return total / phase_grid_size


def min_ensemble_size(
    target_p: float, spec: SchemeSpec, phase_grid_size: int = 256
) -> int:
    """Smallest ensemble size whose step error probability is <= target_p.

    Ascends in steps of 2 (quadrature model needs even atoms) or 1; raises
    SearchBoundExceededError past the cap.
    """
    if not 0 < target_p <= 1:
        raise ValueError("target_p must lie in (0, 1]")
    start = 2 if spec.model == RAMSEY else 1
    step = 2 if spec.model == RAMSEY else 1
    for atoms in range(start, SEARCH_CAP + 1, step):
        if step_error_probability(atoms, spec, phase_grid_size) <= target_p:
            return atoms
    raise SearchBoundExceededError(
        f"no ensemble size <= {SEARCH_CAP} reaches p <= {target_p}"
    )


def optimize_gaussian_width(
    atoms: int,
    scheme: str,
    ratio: float,
    phase_grid_size: int = 256,
    bracket: tuple[float, float] = (0.1, 3.0),
    tol: float = 1e-3,
) -> tuple[float, float]:
    """Width minimizing the Gaussian-model step error at fixed ensemble size.

    Golden-section search on the bracket; returns (width, probability).
    """

    def objective(width: float) -> float:
        spec = SchemeSpec(scheme, GAUSSIAN, ratio, width)
        return step_error_probability(atoms, spec, phase_grid_size)

    return golden_section_minimize(objective, *bracket, tol=tol)


def min_ensemble_size_with_optimal_width(
    target_p: float, scheme: str, ratio: float, phase_grid_size: int = 256
) -> tuple[int, float, float]:
    """Joint search: smallest Gaussian ensemble whose best width meets target_p.

    Returns (atoms, width, probability) at the optimum.
    """
    if not 0 < target_p <= 1:
        raise ValueError("target_p must lie in (0, 1]")
    for atoms in range(1, SEARCH_CAP + 1):
        width, prob = optimize_gaussian_width(
            atoms, scheme, ratio, phase_grid_size
        )
        if prob <= target_p:
            return atoms, width, prob
    raise SearchBoundExceededError(
        f"no ensemble size <= {SEARCH_CAP} reaches p <= {target_p}"
    )


def fit_exponential(points: list[ErrorCurvePoint]) -> ExponentialFit:
    """Least squares on (N, ln p); residual is the RMS log-space misfit."""
    if len(points) < 3:
        raise ValueError("fit requires at least 3 points")
    if any(pt.probability <= 0 for pt in points):
        raise NonpositiveProbabilityError(
            "all probabilities must be positive for a log-space fit"
        )
    x = np.array([pt.atoms for pt in points], dtype=float)
    y = np.log([pt.probability for pt in points])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    return ExponentialFit(float(np.exp(intercept)), float(-slope), resid)


def total_error_probability(step_p: float, ensembles: int, spec: SchemeSpec) -> float:
    """Per-period wrap-error probability of the whole cascade.

    The rounding step runs once per level link in the reduced-frequency
    scheme (M-1 applications) and once per lower-level measurement in the
    reduced-period scheme ((D**(M-1)-1)/(D-1) applications).
    """
    if ensembles < 1:
        raise ValueError("ensembles must be >= 1")
    if spec.scheme == REDUCED_FREQUENCY:
        applications = ensembles - 1
    else:
        d = int(spec.ratio)
        applications = (d ** (ensembles - 1) - 1) // (d - 1)
    return applications * step_p


def _curve_point(args) -> ErrorCurvePoint:
    scheme, model, ratio, width, atoms, grid = args
    spec = SchemeSpec(scheme, model, ratio, width)
    return ErrorCurvePoint(atoms, step_error_probability(atoms, spec, grid))


def error_curve(
    spec: SchemeSpec,
    atom_counts,
    phase_grid_size: int = 256,
    workers: int | None = None,
) -> list[ErrorCurvePoint]:
    """Step error probability over a sweep of ensemble sizes.

    The sweep may fan out over processes; results are order-stable and
    independent of the worker count.
    """
    jobs = [
        (spec.scheme, spec.model, spec.ratio, spec.gaussian_width, int(n), phase_grid_size)
        for n in atom_counts
    ]
    return parallel_map(_curve_point, jobs, workers=workers)
