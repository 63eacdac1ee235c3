"""Generate a synthetic season of production days from the error SDE.

Builds clear-sky bounds for 60 days, invents hourly forecast profiles with
clear/overcast/variable regimes, drives the forecast-error SDE around them,
and writes the aligned CSV that every later pipeline stage consumes. Also
prints the descriptive summaries (intraday and daily MAE, banded error KDE).
"""

import numpy as np

import solarsde as s
from solarsde.gridops import grid_derivative
from solarsde.ingest import DaySeries, write_aligned_csv

rng = np.random.default_rng(2025)
site = s.SolarSite(-34.9, -56.2, -3.0, panel_area_m2=1.0)
peak = max(np.max(s.upper_bound_series(site, d).h) for d in range(1, 366, 30))

templates = []
base = np.datetime64("2019-01-01")
for d in sorted(rng.choice(np.arange(20, 350), size=60, replace=False)):
    bound = s.upper_bound_series(site, int(d))
    lo, hi = bound.support
    hours = bound.times[lo : hi + 1]
    h = bound.h[lo : hi + 1] / peak
    h_dot = bound.h_dot[lo : hi + 1] / peak
    regime = rng.uniform()
    level = (
        rng.uniform(0.88, 0.97)
        if regime < 0.3
        else rng.uniform(0.03, 0.15)
        if regime < 0.6
        else rng.uniform(0.25, 0.75)
    )
    knots = np.arange(0.0, 25.0)
    ratio = np.clip(level + rng.normal(0.0, 0.04, len(knots)), 0.01, 0.99)
    p = np.interp(hours, knots, ratio * np.interp(knots, hours, h))
    p = np.minimum(np.clip(p, 0.0, 1.0), h)
    templates.append(
        DaySeries(
            day_id=str(base + np.timedelta64(int(d) - 1, "D")),
            t=hours / 24.0,
            y=np.zeros_like(p),
            p=p,
            p_dot=grid_derivative(p, (hours[1] - hours[0]) / 24.0),
            h=h,
            h_dot=h_dot,
        )
    )

params = s.ModelParams(theta0=20.0, alpha=0.15, epsilon=0.07)
days = s.simulate_error_days(templates, params, seed=42, n_sub=4)
write_aligned_csv(days, "demo_aligned.csv", header_lines=["synthetic season, seed=42"])
print(f"wrote demo_aligned.csv: {len(days)} days, "
      f"{sum(d.n_transitions for d in days)} transitions")

split = s.split_alternating(days)
print(f"alternating split: {len(split.set1)} + {len(split.set2)} days")

t, mae, counts = s.mae_10min(days)
worst = int(np.argmax(mae))
print(f"\nintraday MAE peaks at {t[worst] * 24:.1f} h local: {mae[worst]:.3f}")
daily = s.mae_daily(days)
print(f"daily MAE ranges {min(v for _, v in daily):.3f} .. {max(v for _, v in daily):.3f}")

for band in ("all", "low", "mid", "high"):
    try:
        grid, density = s.error_transition_kde(days, band)
        mode = grid[int(np.argmax(density))]
        print(f"error KDE [{band:4s}]: mode at {mode:+.3f}, mass {np.trapezoid(density, grid):.3f}")
    except s.DataError as exc:
        print(f"error KDE [{band:4s}]: {exc}")
