"""Path simulation and pathwise confidence bands around the forecast.

Simulates projected-Euler production paths for one day, builds the 50/90/99%
moment-quantile bands, measures the empirical coverage of the 90% band, and
writes both artifacts as plot-ready CSV.

Run demos/02_synthetic_season.py first (needs demo_aligned.csv).
"""

import numpy as np

import solarsde as s
from solarsde.ingest import read_aligned_csv

days = read_aligned_csv("demo_aligned.csv")
day = max(days, key=lambda d: float(np.mean(d.ratio)))  # a clear day plots nicely
params = s.ModelParams(theta0=20.0, alpha=0.15, epsilon=0.07)

print(f"day {day.day_id}: {len(day.t)} grid points, "
      f"daylight {day.t[0] * 24:.1f}..{day.t[-1] * 24:.1f} h")

bundle = s.simulate_production_paths(day, params, n_paths=10_000, seed=3)
inside_bounds = bool(np.all(bundle.x >= 0.0) and np.all(bundle.x <= day.h[None, :]))
gap = np.abs(bundle.x.mean(axis=0) - day.p)
print(f"10^4 paths stay in [0, h]: {inside_bounds}; max |mean - forecast| = {gap.max():.4f}")

band = s.confidence_bands(day, params, s.SurrogateKind.BETA, levels=(0.5, 0.9, 0.99))
inside = np.mean(
    (bundle.x >= band.lower_x[0.9][None, :] - 1e-12)
    & (bundle.x <= band.upper_x[0.9][None, :] + 1e-12),
    axis=0,
)
print(f"90% band empirical coverage, averaged over the day: {inside.mean():.3f}")

with open("demo_paths.csv", "w") as fh:
    fh.write("t," + ",".join(f"path_{k + 1}" for k in range(5)) + ",p,h\n")
    for i in range(len(day.t)):
        cells = [f"{day.t[i]:.17g}"] + [f"{bundle.x[k, i]:.17g}" for k in range(5)]
        cells += [f"{day.p[i]:.17g}", f"{day.h[i]:.17g}"]
        fh.write(",".join(cells) + "\n")

with open("demo_bands.csv", "w") as fh:
    names = []
    for lv in band.levels:
        pct = int(round(lv * 100))
        names += [f"lower_{pct}", f"upper_{pct}"]
    fh.write("t,center," + ",".join(names) + ",p,h\n")
    for i in range(len(day.t)):
        cells = [f"{day.t[i]:.17g}", f"{band.center_x[i]:.17g}"]
        for lv in band.levels:
            cells += [f"{band.lower_x[lv][i]:.17g}", f"{band.upper_x[lv][i]:.17g}"]
        cells += [f"{day.p[i]:.17g}", f"{day.h[i]:.17g}"]
        fh.write(",".join(cells) + "\n")

print("wrote demo_paths.csv and demo_bands.csv")

conditional = s.confidence_bands(
    day, params, s.SurrogateKind.BETA, levels=(0.9,), conditional=True
)
w_marg = float(np.mean(band.upper_x[0.9] - band.lower_x[0.9]))
w_cond = float(np.mean(conditional.upper_x[0.9] - conditional.lower_x[0.9]))
print(f"mean 90% band width: marginal {w_marg:.4f} vs one-step-ahead {w_cond:.4f}")
