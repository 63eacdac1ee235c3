"""Thresholded forecast, time-varying reversion rate, and error observations.

Everything downstream (likelihoods, simulation, density estimation) consumes
transitions: consecutive grid pairs carrying the error observations and the
interval coefficients. `TransitionSet` stores them as flat arrays so a whole
data set can be re-prepared and evaluated at a new parameter point with a
handful of vectorized operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridops import grid_derivative
from .ingest import DaySeries

PENALTY_NEG_LOGLIK = 1.0e6


@dataclass(frozen=True)
class ModelParams:
    """Model parameter triple: baseline reversion rate, variability, threshold."""

    theta0: float
    alpha: float
    epsilon: float

    def __post_init__(self):
        if self.theta0 <= 0:
            raise ValueError("theta0 must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")

    @property
    def alpha_theta0(self) -> float:
        return self.alpha * self.theta0


def threshold_forecast(ratio, epsilon: float):
    """Clamp the normalized forecast ratio into [epsilon, 1 - epsilon]."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    return np.clip(ratio, epsilon, 1.0 - epsilon)


def mean_reversion_rate(params: ModelParams, r, r_dot, hdot_over_h):
    """Time-varying reversion rate keeping error paths off the boundaries.

    theta_t = max(theta0, (alpha*theta0 + |r_dot|) / min(r, 1-r) - h_dot/h),
    where r is the thresholded forecast ratio. Requires r in the thresholded
    band; raises otherwise since the rate would be unbounded.
    """
    r = np.asarray(r, dtype=float)
    eps = params.epsilon
    if np.any(r < eps - 1e-12) or np.any(r > 1.0 - eps + 1e-12):
        raise ValueError("ratio outside the thresholded band [eps, 1-eps]")
    needed = (params.alpha_theta0 + np.abs(r_dot)) / np.minimum(r, 1.0 - r)
    return np.maximum(params.theta0, needed - np.asarray(hdot_over_h, dtype=float))


@dataclass
class PreparedDay:
    """A DaySeries with the model-dependent series attached."""

    day: DaySeries
    params: ModelParams
    r: np.ndarray
    r_dot: np.ndarray
    theta: np.ndarray
    v: np.ndarray

    @property
    def theta_plus(self) -> np.ndarray:
        """Reversion rate of the rescaled process: theta + h_dot/h."""
        return self.theta + self.day.hdot_over_h


@dataclass(frozen=True)
class TransitionRecord:
    """One grid transition with its interval coefficients (left-frozen view)."""

    day_id: str
    day_key: int
    index: int
    dt: float
    v_prev: float
    v_next: float
    r_left: float
    r_right: float
    r_dot_left: float
    hdot_over_h_left: float
    theta_plus_left: float
    theta_plus_right: float
    ratio_left: float


class TransitionSet:
    """Struct-of-arrays collection of transitions; indexable to records."""

    _COLUMNS = (
        "day_index",
        "index",
        "v_prev",
        "v_next",
        "r_left",
        "r_right",
        "r_dot_left",
        "hdot_over_h_left",
        "theta_plus_left",
        "theta_plus_right",
        "ratio_left",
    )

    def __init__(self, day_ids, day_keys, dt, **columns):
        self.day_ids = list(day_ids)
        self.day_keys = list(day_keys)
        self.dt = float(dt)
        for name in self._COLUMNS:
            setattr(self, name, np.asarray(columns[name]))

    def __len__(self) -> int:
        return len(self.v_prev)

    def __getitem__(self, i: int) -> TransitionRecord:
        d = int(self.day_index[i])
        return TransitionRecord(
            day_id=self.day_ids[d],
            day_key=self.day_keys[d],
            index=int(self.index[i]),
            dt=self.dt,
            v_prev=float(self.v_prev[i]),
            v_next=float(self.v_next[i]),
            r_left=float(self.r_left[i]),
            r_right=float(self.r_right[i]),
            r_dot_left=float(self.r_dot_left[i]),
            hdot_over_h_left=float(self.hdot_over_h_left[i]),
            theta_plus_left=float(self.theta_plus_left[i]),
            theta_plus_right=float(self.theta_plus_right[i]),
            ratio_left=float(self.ratio_left[i]),
        )

    def select(self, mask: np.ndarray) -> "TransitionSet":
        cols = {name: getattr(self, name)[mask] for name in self._COLUMNS}
        return TransitionSet(self.day_ids, self.day_keys, self.dt, **cols)


def prepare_day(day: DaySeries, params: ModelParams) -> PreparedDay:
    """Forecast-error observations v = y/h - r plus the reversion-rate grid."""
    r = threshold_forecast(day.ratio, params.epsilon)
    r_dot = grid_derivative(r, day.dt)
    theta = mean_reversion_rate(params, r, r_dot, day.hdot_over_h)
    v = day.y_over_h - r
    return PreparedDay(day=day, params=params, r=r, r_dot=r_dot, theta=theta, v=v)


class StackedDays:
    """Concatenated day grids, built once and re-prepared cheaply per candidate.

    Calibration evaluates the objective at hundreds of (theta0, alpha, eps)
    points; this layout turns each evaluation into flat vector ops plus a
    fancy-indexed edge fix for the per-day finite differences.
    """

    def __init__(self, days: list[DaySeries]):
        if not days:
            raise ValueError("no days supplied")
        dts = {round(d.dt, 12) for d in days}
        if len(dts) != 1:
            raise ValueError("days have mixed grid spacings")
        self.days = list(days)
        self.dt = days[0].dt
        self.day_ids = [d.day_id for d in days]
        self.day_keys = [d.day_key for d in days]
        lengths = np.array([len(d.t) for d in days])
        self.starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        self.ends = self.starts + lengths - 1
        self.y_over_h = np.concatenate([d.y_over_h for d in days])
        self.ratio_raw = np.concatenate([d.ratio for d in days])
        self.hdot_over_h = np.concatenate([d.hdot_over_h for d in days])
        # transition endpoints: every index except each day's last
        keep = np.ones(int(lengths.sum()), dtype=bool)
        keep[self.ends] = False
        self.left = np.flatnonzero(keep)
        self.right = self.left + 1
        self.day_index = np.repeat(np.arange(len(days)), lengths - 1)
        self.grid_index = self.right - np.repeat(self.starts, lengths - 1)

    def _per_day_derivative(self, f: np.ndarray) -> np.ndarray:
        d = np.empty_like(f)
        d[1:-1] = (f[2:] - f[:-2]) / (2.0 * self.dt)
        d[self.starts] = (f[self.starts + 1] - f[self.starts]) / self.dt
        d[self.ends] = (f[self.ends] - f[self.ends - 1]) / self.dt
        return d

    def transitions(self, params: ModelParams) -> TransitionSet:
        """Prepare every day at the given parameters and emit all transitions."""
        eps = params.epsilon
        r = np.clip(self.ratio_raw, eps, 1.0 - eps)
        r_dot = self._per_day_derivative(r)
        needed = (params.alpha_theta0 + np.abs(r_dot)) / np.minimum(r, 1.0 - r)
        theta = np.maximum(params.theta0, needed - self.hdot_over_h)
        theta_plus = theta + self.hdot_over_h
        v = self.y_over_h - r
        li, ri = self.left, self.right
        return TransitionSet(
            self.day_ids,
            self.day_keys,
            self.dt,
            day_index=self.day_index,
            index=self.grid_index,
            v_prev=v[li],
            v_next=v[ri],
            r_left=r[li],
            r_right=r[ri],
            r_dot_left=r_dot[li],
            hdot_over_h_left=self.hdot_over_h[li],
            theta_plus_left=theta_plus[li],
            theta_plus_right=theta_plus[ri],
            ratio_left=self.ratio_raw[li],
        )


def build_transitions(prepared: list[PreparedDay]) -> TransitionSet:
    """TransitionSet from already-prepared days (all sharing one ModelParams)."""
    if not prepared:
        raise ValueError("no prepared days supplied")
    params = prepared[0].params
    stacked = StackedDays([p.day for p in prepared])
    return stacked.transitions(params)


def inner_mask(transitions: TransitionSet, epsilon: float) -> np.ndarray:
    """Inner membership: raw forecast ratio strictly inside (eps, 1-eps)
    at the transition's left endpoint."""
    ratio = transitions.ratio_left
    return (ratio > epsilon) & (ratio < 1.0 - epsilon)


def partition_inner_boundary(
    prepared: list[PreparedDay], epsilon: float
) -> tuple[TransitionSet, TransitionSet]:
    """Split all transitions into inner and boundary subsets."""
    transitions = build_transitions(prepared)
    mask = inner_mask(transitions, epsilon)
    return transitions.select(mask), transitions.select(~mask)


@dataclass
class BoundaryAvoidanceReport:
    """Pointwise check that the reversion rate keeps paths off the boundaries."""

    ok: bool
    violations: np.ndarray
    max_deficit: float


def check_boundary_avoidance(
    params: ModelParams, prepared: PreparedDay, rel_tol: float = 1e-9
) -> BoundaryAvoidanceReport:
    """Verify theta + h_dot/h >= max((a*t0 + r_dot)/(1-r), (a*t0 - r_dot)/r).

    The signed forecast-ratio derivative enters both branches; the rate built
    by mean_reversion_rate dominates them by construction, so violations
    indicate a hand-supplied theta that is too small.
    """
    at0 = params.alpha_theta0
    r, r_dot = prepared.r, prepared.r_dot
    lhs = prepared.theta_plus
    rhs = np.maximum((at0 + r_dot) / (1.0 - r), (at0 - r_dot) / r)
    slack = rel_tol * np.maximum(np.abs(rhs), 1.0)
    bad = np.flatnonzero(lhs < rhs - slack)
    deficit = float(np.max(rhs - lhs)) if len(lhs) else 0.0
    return BoundaryAvoidanceReport(ok=bad.size == 0, violations=bad, max_deficit=deficit)
