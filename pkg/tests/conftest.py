"""Shared synthetic fixtures.

Two families of synthetic days:

* clear-sky templates: realistic daylight windows from the irradiance bound
  with hourly-knot forecast profiles that visit both clamp regions, used for
  closed-loop calibration tests;
* flat-bound days: constant bound and smooth on-grid forecast, used where a
  test isolates scheme properties (unbiasedness, coverage) from the stiff
  sunrise/sunset ends of the real bound.
"""

import numpy as np
import pytest

import solarsde as s
from solarsde.gridops import grid_derivative
from solarsde.ingest import DaySeries

TRUE_PARAMS = s.ModelParams(theta0=20.0, alpha=0.15, epsilon=0.07)
SITE = s.SolarSite(
    latitude_deg=-34.9, longitude_deg=-56.2, gmt_offset_hours=-3.0, panel_area_m2=1.0
)


def make_clearsky_templates(n_days: int, seed: int) -> list[DaySeries]:
    """Daylight-window templates with mixed clear/overcast/variable forecasts."""
    rng = np.random.default_rng(seed)
    peak = max(np.max(s.upper_bound_series(SITE, d).h) for d in range(1, 366, 30))
    k_norm = 1.0 / peak
    day_numbers = np.sort(rng.choice(np.arange(20, 350), size=n_days, replace=False))
    base = np.datetime64("2019-01-01")
    days = []
    for d in day_numbers:
        bound = s.upper_bound_series(SITE, int(d))
        lo, hi = bound.support
        sel = slice(lo, hi + 1)
        hours = bound.times[sel]
        h = bound.h[sel] * k_norm
        h_dot = bound.h_dot[sel] * k_norm
        regime = rng.uniform()
        knots_h = np.arange(0.0, 25.0, 1.0)
        if regime < 0.3:
            level = rng.uniform(0.88, 0.97)  # clear: forecast hugs the bound
        elif regime < 0.6:
            level = rng.uniform(0.03, 0.15)  # overcast: low forecast ratio
        else:
            level = rng.uniform(0.25, 0.75)
        wiggle = rng.uniform(0.02, 0.12) * np.sin(
            2.0 * np.pi * (knots_h / 24.0) * rng.uniform(1.0, 3.0) + rng.uniform(0.0, 6.28)
        )
        ratio_knots = np.clip(level + wiggle + rng.normal(0.0, 0.03, len(knots_h)), 0.01, 0.99)
        p = np.interp(hours, knots_h, ratio_knots * np.interp(knots_h, hours, h))
        p = np.minimum(np.clip(p, 0.0, 1.0), h)
        dt_days = (hours[1] - hours[0]) / 24.0
        date = str(base + np.timedelta64(int(d) - 1, "D"))
        days.append(
            DaySeries(
                day_id=date,
                t=hours / 24.0,
                y=np.zeros_like(p),
                p=p,
                p_dot=grid_derivative(p, dt_days),
                h=h,
                h_dot=h_dot,
            )
        )
    return days


def make_flat_day(
    day_id: str = "2019-06-01",
    n: int = 97,
    bound: float = 0.95,
    level: float = 0.55,
    amplitude: float = 0.10,
    frequency: float = 1.0,
) -> DaySeries:
    """Constant-bound day with a smooth sinusoidal forecast built on-grid."""
    t = np.linspace(0.3, 0.7, n)
    h = np.full_like(t, bound)
    p = bound * (level + amplitude * np.sin(2.0 * np.pi * frequency * (t - t[0])))
    p = np.minimum(np.clip(p, 0.0, 1.0), h)
    return DaySeries(
        day_id=day_id,
        t=t,
        y=np.clip(p, 0.0, 1.0),
        p=p,
        p_dot=grid_derivative(p, t[1] - t[0]),
        h=h,
        h_dot=np.zeros_like(t),
    )


@pytest.fixture(scope="session")
def clearsky_templates() -> list[DaySeries]:
    return make_clearsky_templates(100, seed=21)


@pytest.fixture(scope="session")
def synthetic_days(clearsky_templates) -> list[DaySeries]:
    """100 synthetic days generated from the true parameters (fine Euler)."""
    return s.simulate_error_days(clearsky_templates, TRUE_PARAMS, seed=11, n_sub=4)


@pytest.fixture(scope="session")
def small_synthetic_days() -> list[DaySeries]:
    """A handful of flat-bound synthetic days for fast likelihood tests."""
    templates = [make_flat_day(f"2019-01-{d:02d}", n=80) for d in range(1, 7)]
    return s.simulate_error_days(templates, TRUE_PARAMS, seed=3)


@pytest.fixture(scope="session")
def flat_day() -> DaySeries:
    return make_flat_day()
