"""Pathwise confidence bands and descriptive error analytics.

Bands come from indirect inference: the conditional-moment ODEs are chained
across the whole day from a zero error at the window start, and at every
grid point the moment-matched surrogate supplies the level quantiles, mapped
to production units through the bound. The analytics side provides the MAE
summaries and banded kernel density estimates of the raw forecast errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InfeasibleMomentsError
from .ingest import DaySeries
from .moments import VARIANCE_FLOOR, MomentPair, StepCoefficients, error_moment_step
from .prep import ModelParams, prepare_day
from .surrogates import SurrogateKind, surrogate_quantile

POWER_BANDS = {
    "all": (0.0, 1.0 + 1e-12),
    "low": (0.0, 0.3),
    "mid": (0.3, 0.6),
    "high": (0.6, 1.0 + 1e-12),
}


@dataclass
class BandSeries:
    """Per-level confidence bands in error space and production space."""

    day_id: str
    t: np.ndarray
    levels: tuple[float, ...]
    lower_v: dict[float, np.ndarray]
    upper_v: dict[float, np.ndarray]
    lower_x: dict[float, np.ndarray]
    upper_x: dict[float, np.ndarray]
    center_x: np.ndarray
    infeasible_points: int = 0
    conditional: bool = False
    flags: list[int] = field(default_factory=list)


def confidence_bands(
    day: DaySeries,
    params: ModelParams,
    kind: SurrogateKind,
    levels: tuple[float, ...] = (0.5, 0.9, 0.99),
    conditional: bool = False,
) -> BandSeries:
    """Bands with the prescribed coverage around the forecast.

    Marginal mode chains the moment ODEs from a zero error at the window
    start with no data conditioning (the production path starts at the
    forecast). The conditional variant restarts each step from the observed
    error, giving one-step-ahead bands. Grid points whose moments leave the
    surrogate family are clipped to the support and flagged.
    """
    levels = tuple(sorted(levels))
    if any(lv <= 0.0 or lv >= 1.0 for lv in levels):
        raise ValueError("levels must lie strictly between 0 and 1")
    prep = prepare_day(day, params)
    n = len(day.t)
    mu = np.zeros(n)
    s2 = np.zeros(n)
    pair = MomentPair(m1=0.0, m2=0.0)
    for i in range(1, n):
        start = MomentPair.from_observation(prep.v[i - 1]) if conditional else pair
        coeffs = StepCoefficients(
            theta_plus_left=prep.theta_plus[i - 1],
            theta_plus_right=prep.theta_plus[i],
            r_left=prep.r[i - 1],
            r_right=prep.r[i],
            alpha_theta0=params.alpha_theta0,
            dt=day.dt,
        )
        pair = error_moment_step(start, coeffs)
        mu[i] = float(pair.mu)
        s2[i] = float(pair.sigma2_raw)
    half = 1.0 - params.epsilon
    lower_v = {lv: np.empty(n) for lv in levels}
    upper_v = {lv: np.empty(n) for lv in levels}
    flags: list[int] = []
    for i in range(n):
        degenerate = s2[i] <= VARIANCE_FLOOR
        for lv in levels:
            q = 0.5 * (1.0 - lv)
            if degenerate:
                lo = hi = float(np.clip(mu[i], -half, half))
            else:
                try:
                    lo = surrogate_quantile(q, kind, mu[i], s2[i], params.epsilon)
                    hi = surrogate_quantile(1.0 - q, kind, mu[i], s2[i], params.epsilon)
                except InfeasibleMomentsError:
                    lo, hi = -half, half
                    if i not in flags:
                        flags.append(i)
            lower_v[lv][i] = lo
            upper_v[lv][i] = hi
    lower_x = {lv: day.h * (lower_v[lv] + prep.r) for lv in levels}
    upper_x = {lv: day.h * (upper_v[lv] + prep.r) for lv in levels}
    return BandSeries(
        day_id=day.day_id,
        t=day.t.copy(),
        levels=levels,
        lower_v=lower_v,
        upper_v=upper_v,
        lower_x=lower_x,
        upper_x=upper_x,
        center_x=day.h * prep.r,
        infeasible_points=len(flags),
        conditional=conditional,
        flags=flags,
    )


def _raw_errors(day: DaySeries) -> np.ndarray:
    """Un-thresholded forecast error y/h - p/h (data summary convention)."""
    return day.y_over_h - day.ratio


def mae_10min(days: list[DaySeries]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean absolute error per time of day across days.

    Returns (t, mae, counts): t in days, averaged over the days whose
    daylight window covers each grid instant.
    """
    acc: dict[int, list[float]] = {}
    for day in days:
        minutes = np.rint(day.t * 1440.0).astype(int)
        for m_of_day, err in zip(minutes, np.abs(_raw_errors(day))):
            acc.setdefault(int(m_of_day), []).append(float(err))
    keys = sorted(acc)
    t = np.array(keys, dtype=float) / 1440.0
    mae = np.array([np.mean(acc[k]) for k in keys])
    counts = np.array([len(acc[k]) for k in keys])
    return t, mae, counts


def mae_daily(days: list[DaySeries]) -> list[tuple[str, float]]:
    """Mean absolute error over each day's daylight window."""
    return [(day.day_id, float(np.mean(np.abs(_raw_errors(day))))) for day in days]


def error_transition_kde(
    days: list[DaySeries], power_band: str = "all", grid_size: int = 512
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian KDE of the forecast-error transitions in one power band.

    Transitions are selected by the observed normalized production at their
    right endpoint (low [0, 0.3), mid [0.3, 0.6), high [0.6, 1]); bandwidth
    is Scott's n^(-1/5) sigma-hat. Returns (grid, density) on a grid wide
    enough that the density integrates to one.
    """
    if power_band not in POWER_BANDS:
        raise ValueError(f"unknown power band {power_band!r}; use {sorted(POWER_BANDS)}")
    lo, hi = POWER_BANDS[power_band]
    samples = []
    for day in days:
        v = _raw_errors(day)[1:]
        y = day.y[1:]
        samples.append(v[(y >= lo) & (y < hi)])
    x = np.concatenate(samples) if samples else np.array([])
    if len(x) < 2:
        raise DataError(f"power band {power_band!r} holds fewer than 2 transitions")
    sigma = float(np.std(x, ddof=1))
    h = sigma * len(x) ** (-0.2)
    if h <= 0.0:
        h = 1e-6  # all-equal sample: emit a narrow spike that still integrates to 1
    grid = np.linspace(float(np.min(x)) - 5.0 * h, float(np.max(x)) + 5.0 * h, grid_size)
    density = np.zeros(grid_size)
    for start in range(0, len(x), 4096):
        chunk = x[start : start + 4096]
        zs = (grid[:, None] - chunk[None, :]) / h
        density += np.exp(-0.5 * zs * zs).sum(axis=1)
    density /= len(x) * h * np.sqrt(2.0 * np.pi)
    return grid, density
