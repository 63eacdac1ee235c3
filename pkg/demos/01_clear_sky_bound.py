"""Clear-sky upper bound for a Montevideo-scale plant.

Walks through the geometry chain (declination, equation of time, hour angle,
elevation, air mass, irradiance) for a few instants, then builds the daily
production bound h(t) = k I_D(t) and its derivative for four days across the
seasons, writing a plot-ready CSV.
"""

import numpy as np

import solarsde as s

# k converts the scaled irradiance (1.353 at zero air mass) to plant MW;
# ~250 corresponds to a 228.8 MW installation
site = s.SolarSite(
    latitude_deg=-34.9,
    longitude_deg=-56.2,
    gmt_offset_hours=-3.0,
    panel_area_m2=250.0,
)

print("== solar geometry at a few instants (day 81, near the March equinox) ==")
for lt in (8.0, 12.0, 16.0):
    a = s.solar_angles(site, 81, lt)
    print(
        f"LT {lt:5.1f} h: declination {a.declination_deg:7.3f} deg, "
        f"EoT {a.eot_minutes:6.2f} min, hour angle {a.hour_angle_deg:8.3f} deg, "
        f"elevation {a.elevation_deg:7.3f} deg, air mass {a.air_mass:8.4f}"
    )

print("\n== daily bounds across the seasons ==")
rows = []
for day in (15, 105, 172, 285):
    bound = s.upper_bound_series(site, day)
    lo, hi = bound.support
    print(
        f"day {day:3d}: daylight {bound.times[lo]:5.2f}..{bound.times[hi]:5.2f} h, "
        f"peak {bound.h.max():7.1f} MW"
    )
    for t, h, hd in zip(bound.times, bound.h, bound.h_dot):
        rows.append((day, t, h, hd))

with open("demo_bound.csv", "w") as fh:
    fh.write("day,time_local,h_mw,h_dot_mw_per_day\n")
    for day, t, h, hd in rows:
        fh.write(f"{day},{t:.17g},{h:.17g},{hd:.17g}\n")
print("\nwrote demo_bound.csv")

print("\n== panel-area calibration rule on a short day list ==")
k = s.calibrate_panel_area(228.8, s.SolarSite(-34.9, -56.2, -3.0), [105, 172, 285])
print(f"max pointwise capacity/I_D ratio over those days: k = {k:.0f} m^2")
print("(the rule is grid-sensitive near sunrise; production deployments pin k)")
