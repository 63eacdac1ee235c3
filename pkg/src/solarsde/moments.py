"""Conditional-moment ODE systems integrated across one grid transition.

Two linear systems are solved with a fixed-step classical RK4 scheme whose
coefficients are interpolated linearly in time between the grid knots:

  error process:  m1' = -tp m1
                  m2' = -2 (tp + a) m2 + 2 a (1 - 2r) m1 + 2 a (r - r^2)
  gaussian aux.:  m1' = -tp m1
                  m2' = -2 tp m2 + sigma^2

with tp = theta + h_dot/h and a = alpha * theta0. Both take the previous
observation as initial condition (m1 = v, m2 = v^2). The functions are
vectorized: scalars or equal-length arrays integrate many transitions at
once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

VARIANCE_FLOOR = 1e-12
DEFAULT_SUBSTEPS = 10


@dataclass
class MomentPair:
    """First two conditional moments, with derived mean/variance."""

    m1: np.ndarray | float
    m2: np.ndarray | float

    @property
    def mu(self):
        return self.m1

    @property
    def sigma2_raw(self):
        """Variance before flooring; may be slightly negative from roundoff."""
        return self.m2 - np.square(self.m1)

    @property
    def sigma2(self):
        """Variance floored at 1e-12 for use in surrogate-parameter formulas."""
        return np.maximum(self.sigma2_raw, VARIANCE_FLOOR)

    @classmethod
    def from_observation(cls, v_prev) -> "MomentPair":
        v = np.asarray(v_prev, dtype=float)
        return cls(m1=v, m2=np.square(v))


@dataclass
class StepCoefficients:
    """Interval coefficients: knot values of tp and r, plus a, dt, substeps."""

    theta_plus_left: np.ndarray | float
    theta_plus_right: np.ndarray | float
    r_left: np.ndarray | float
    r_right: np.ndarray | float
    alpha_theta0: float
    dt: float
    n_sub: int = DEFAULT_SUBSTEPS

    @classmethod
    def constant(cls, theta_plus, r, alpha_theta0, dt, n_sub: int = DEFAULT_SUBSTEPS):
        """Coefficients frozen over the whole interval (tests, closed forms)."""
        return cls(theta_plus, theta_plus, r, r, alpha_theta0, dt, n_sub)

    def at(self, frac):
        """Linear interpolants (tp, r) at a fraction of the interval."""
        tp = self.theta_plus_left + frac * (
            np.asarray(self.theta_plus_right) - self.theta_plus_left
        )
        r = self.r_left + frac * (np.asarray(self.r_right) - self.r_left)
        return tp, r


def _rk4(rhs, m1, m2, dt: float, n_sub: int):
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    if dt == 0.0:
        return m1, m2
    if dt < 0 or n_sub < 1:
        raise ValueError("dt must be >= 0 and n_sub >= 1")
    h = 1.0 / n_sub  # fractions of the interval; rhs carries the dt scale
    s = 0.0
    for _ in range(n_sub):
        k1a, k1b = rhs(s, m1, m2)
        k2a, k2b = rhs(s + h / 2, m1 + h / 2 * k1a, m2 + h / 2 * k1b)
        k3a, k3b = rhs(s + h / 2, m1 + h / 2 * k2a, m2 + h / 2 * k2b)
        k4a, k4b = rhs(s + h, m1 + h * k3a, m2 + h * k3b)
        m1 = m1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        m2 = m2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        s += h
    return m1, m2


def error_moment_step(start: MomentPair, coeffs: StepCoefficients) -> MomentPair:
    """Propagate the error process moments across one transition."""
    a = coeffs.alpha_theta0
    dt = coeffs.dt

    def rhs(s, m1, m2):
        tp, r = coeffs.at(s)
        d1 = -tp * m1
        d2 = -2.0 * (tp + a) * m2 + 2.0 * a * (1.0 - 2.0 * r) * m1 + 2.0 * a * (r - r * r)
        return dt * d1, dt * d2

    m1, m2 = _rk4(rhs, start.m1, start.m2, dt, coeffs.n_sub)
    if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
        raise FloatingPointError("moment integration produced nonfinite values")
    return MomentPair(m1=m1, m2=m2)


def match_diffusion_level(v_prev, r, alpha_theta0: float):
    """Diffusion level for the Gaussian companion process.

    sigma^2 = 2 a (v + r)(1 - v - r): the error-process diffusion squared at
    the conditioning point, which equates the two m2 right-hand sides at the
    start of the step. A negative radicand (observation outside [−r, 1−r])
    is clamped to zero with a warning.
    """
    y = np.asarray(v_prev, dtype=float) + np.asarray(r, dtype=float)
    rad = 2.0 * alpha_theta0 * y * (1.0 - y)
    if np.any(rad < 0):
        warnings.warn("negative diffusion radicand clamped to zero", RuntimeWarning)
        rad = np.maximum(rad, 0.0)
    out = np.sqrt(rad)
    return float(out) if np.ndim(v_prev) == 0 and np.ndim(r) == 0 else out


def gaussian_moment_step(
    start: MomentPair, coeffs: StepCoefficients, sigma
) -> MomentPair:
    """Propagate the Gaussian companion moments across one transition."""
    sig2 = np.square(np.asarray(sigma, dtype=float))
    dt = coeffs.dt

    def rhs(s, m1, m2):
        tp, _ = coeffs.at(s)
        return dt * (-tp * m1), dt * (-2.0 * tp * m2 + sig2)

    m1, m2 = _rk4(rhs, start.m1, start.m2, dt, coeffs.n_sub)
    if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
        raise FloatingPointError("moment integration produced nonfinite values")
    return MomentPair(m1=m1, m2=m2)
