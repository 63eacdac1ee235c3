"""Small helpers shared by every module that works on uniform time grids."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def grid_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Finite-difference time derivative on a uniform grid.

    Central differences on interior points, first-order one-sided at the
    two ends. A single-point series has zero derivative.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 1:
        raise ValueError("grid_derivative expects a 1-D array")
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = np.zeros_like(f)
    if f.size < 2:
        return d
    d[1:-1] = (f[2:] - f[:-2]) / (2.0 * dt)
    d[0] = (f[1] - f[0]) / dt
    d[-1] = (f[-1] - f[-2]) / dt
    return d


def support_interval(values: np.ndarray) -> tuple[int, int]:
    """Index range [lo, hi] of the single contiguous block where values > 0.

    Raises DataError if the positive set is empty or not contiguous
    (the clear-sky bound must be positive on exactly one daylight window).
    """
    pos = np.asarray(values) > 0
    idx = np.flatnonzero(pos)
    if idx.size == 0:
        raise DataError("series has no positive support")
    lo, hi = int(idx[0]), int(idx[-1])
    if not pos[lo : hi + 1].all():
        raise DataError("positive support is not contiguous")
    return lo, hi
