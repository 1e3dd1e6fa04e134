"""Shared numerics: angle wrapping, golden-section search, phase grids."""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap an angle (or array of angles) to the half-open interval (-pi, pi].

    The boundary convention keeps +pi and maps -pi to +pi, matching the range
    of the argument function used by the quadrature estimator.
    """
    wrapped = np.pi - np.remainder(np.pi - np.asarray(x, dtype=float), TWO_PI)
    if np.ndim(x) == 0:
        return float(wrapped)
    return wrapped


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_minimize(func, lo, hi, tol=1e-3):
    """Minimize a unimodal scalar function on [lo, hi] by golden section.

    Returns (x, func(x)) where x is the midpoint of the final bracket.
    """
    a, b = float(lo), float(hi)
    if not b > a:
        raise ValueError("golden section requires hi > lo")
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = func(c)
    fd = func(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def uniform_phase_grid(size: int) -> np.ndarray:
    """Midpoint grid of `size` phases covering [-pi, pi) uniformly."""
    if size < 1:
        raise ValueError("grid size must be positive")
    return -np.pi + (np.arange(size) + 0.5) * TWO_PI / size


@lru_cache(maxsize=32)
def quasirandom_phase_tuples(dim: int, size: int) -> np.ndarray:
    """Deterministic low-discrepancy grid of `size` phase tuples in [-pi, pi)^dim.

    Unscrambled Sobol points; the same (dim, size) always yields the same grid.
    """
    if dim < 1 or size < 1:
        raise ValueError("dim and size must be positive")
    sampler = qmc.Sobol(d=dim, scramble=False)
    if size & (size - 1) == 0:
        points = sampler.random_base2(int(np.log2(size)))
    else:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            points = sampler.random(size)
    phases = TWO_PI * points - np.pi
    phases.setflags(write=False)
    return phases


def worker_count() -> int:
    """Worker cap for internal sweeps; CASCADE_CLOCK_THREADS overrides."""
    env = os.environ.get("CASCADE_CLOCK_THREADS")
    if env is not None:
        n = int(env)
        if n < 1:
            raise ValueError("CASCADE_CLOCK_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def parallel_map(func, items, workers: int | None = None) -> list:
    """Order-preserving map, optionally fanned out over processes.

    Results are identical to the serial map regardless of worker count.
    """
    items = list(items)
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(items) < 2:
        return [func(item) for item in items]
    import concurrent.futures as cf

    with cf.ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
