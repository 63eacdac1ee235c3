"""Very-clear-sky irradiance model and the daily production upper bound.

The bound is h(t) = k * I_D(t), where I_D is the Meinel direct normal
irradiance driven by the Kasten relative air mass, and k (in m^2) converts
irradiance to plant power. All angle work is done in degrees; radians
appear only inside the trig calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .gridops import grid_derivative, support_interval

DEG = np.pi / 180.0

HOURS_PER_DAY = 24.0


@dataclass(frozen=True)
class SolarSite:
    """Geographic and plant constants needed by the clear-sky bound.

    latitude_deg, longitude_deg : site coordinates (deg, east positive)
    gmt_offset_hours : local-time offset from GMT, so LSTM = 15 deg/hour
    solar_constant_w_per_m2 : top-of-atmosphere flux estimate (default 1353)
    panel_area_m2 : the irradiance-to-power constant k
    """

    latitude_deg: float
    longitude_deg: float
    gmt_offset_hours: float
    solar_constant_w_per_m2: float = 1353.0
    panel_area_m2: float = 1.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude {self.latitude_deg} outside [-90, 90]")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ValueError(f"longitude {self.longitude_deg} outside [-180, 180]")
        if self.solar_constant_w_per_m2 <= 0:
            raise ValueError("solar constant must be positive")
        if self.panel_area_m2 <= 0:
            raise ValueError("panel area must be positive")

    @property
    def lstm_deg(self) -> float:
        """Local standard time meridian, 15 degrees per offset hour."""
        return 15.0 * self.gmt_offset_hours


@dataclass(frozen=True)
class SolarAngles:
    """Solar geometry at one local time instant."""

    day_number: int
    day_angle_deg: float
    declination_deg: float
    eot_minutes: float
    hour_angle_deg: float
    elevation_deg: float
    air_mass: float


@dataclass
class BoundSeries:
    """Upper bound h on a full-day grid of local clock hours.

    h is in MW (or normalized units if k was scaled); h_dot is the
    finite-difference time derivative with time measured in days.
    support is the index pair (lo, hi) of the daylight window where h > 0.
    """

    times: np.ndarray
    h: np.ndarray
    h_dot: np.ndarray
    support: tuple[int, int] = field(default=(0, 0))

    @property
    def support_times(self) -> tuple[float, float]:
        lo, hi = self.support
        return float(self.times[lo]), float(self.times[hi])


def _check_day_number(day_number) -> np.ndarray:
    d = np.asarray(day_number)
    if np.any(d < 1) or np.any(d > 365):
        raise ValueError(f"day number {day_number} outside [1, 365]")
    return d


def fold_day_of_year(day_of_year: int) -> int:
    """Map a calendar day-of-year to the model's 1..365 range (leap day capped)."""
    return min(int(day_of_year), 365)


def declination(day_number) -> float | np.ndarray:
    """Sun declination (deg): -23.45 * cos(360 * (10.25 + d) / 365)."""
    d = _check_day_number(day_number)
    return -23.45 * np.cos(DEG * 360.0 * (10.25 + d) / 365.0)


def day_angle(day_number) -> float | np.ndarray:
    """Day angle B (deg) used by the equation of time: 360 * (d - 81) / 365."""
    d = _check_day_number(day_number)
    return 360.0 * (d - 81.0) / 365.0


def equation_of_time(day_number) -> float | np.ndarray:
    """Clock-vs-solar-time correction (minutes).

    EoT = 9.87 sin(2B) - 7.53 cos(B) - 1.5 sin(B), B the day angle.
    """
    b = DEG * day_angle(day_number)
    return 9.87 * np.sin(2.0 * b) - 7.53 * np.cos(b) - 1.5 * np.sin(b)


def hour_angle(local_time_hours, site: SolarSite, day_number) -> float | np.ndarray:
    """Hour angle (deg): 15 deg per hour of corrected local solar time past noon.

    omega = 15 * (LT + (4/60) * (LSTM - L_s) + EoT/60 - 12)
    """
    lt = np.asarray(local_time_hours, dtype=float)
    if np.any(lt < 0) or np.any(lt >= 24.0):
        raise ValueError("local time must lie in [0, 24)")
    eot = equation_of_time(day_number)
    correction = (4.0 / 60.0) * (site.lstm_deg - site.longitude_deg) + eot / 60.0
    return 15.0 * (lt + correction - 12.0)


def elevation(latitude_deg, declination_deg, hour_angle_deg) -> float | np.ndarray:
    """Sun elevation above the horizon (deg).

    alpha = arcsin(sin(phi) sin(delta) + cos(phi) cos(delta) cos(omega))
    """
    phi = DEG * np.asarray(latitude_deg, dtype=float)
    dec = DEG * np.asarray(declination_deg, dtype=float)
    omega = DEG * np.asarray(hour_angle_deg, dtype=float)
    s = np.sin(phi) * np.sin(dec) + np.cos(phi) * np.cos(dec) * np.cos(omega)
    return np.arcsin(np.clip(s, -1.0, 1.0)) / DEG


def air_mass(elevation_deg) -> float | np.ndarray:
    """Kasten relative optical air mass, with refraction correction.

    AM = [sin(alpha) + 0.15 (alpha + 3.885)^(-1.253)]^(-1), alpha in degrees.
    Returns +inf where the bracket is not positive (deep night), keeping the
    function total over all elevations.
    """
    alpha = np.asarray(elevation_deg, dtype=float)
    shifted = alpha + 3.885
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(shifted > 0, 0.15 * np.power(np.abs(shifted), -1.253), np.inf)
        bracket = np.sin(DEG * alpha) + corr
        am = np.where((bracket > 0) & np.isfinite(bracket), 1.0 / bracket, np.inf)
    if np.ndim(elevation_deg) == 0:
        return float(am)
    return am


def irradiance(air_mass_value, solar_constant_w_per_m2: float = 1353.0) -> float | np.ndarray:
    """Direct normal irradiance I_D (MW/m^2 in the model's scaled units).

    I_D = I_0 * 0.7^(AM^0.678) / 1000, with the +inf air-mass sentinel
    mapping to zero irradiance.
    """
    am = np.asarray(air_mass_value, dtype=float)
    if np.any(am < 0):
        raise ValueError("air mass must be nonnegative")
    out = np.where(
        np.isfinite(am),
        solar_constant_w_per_m2 * np.power(0.7, np.power(am, 0.678)) / 1000.0,
        0.0,
    )
    if np.ndim(air_mass_value) == 0:
        return float(out)
    return out


def clear_sky_irradiance(site: SolarSite, day_number: int, local_time_hours) -> np.ndarray:
    """I_D over local clock times for one day, zero when the sun is down."""
    dec = declination(day_number)
    omega = hour_angle(local_time_hours, site, day_number)
    alpha = elevation(site.latitude_deg, dec, omega)
    i_d = irradiance(air_mass(alpha), site.solar_constant_w_per_m2)
    return np.where(np.asarray(alpha) > 0, i_d, 0.0)


def solar_angles(site: SolarSite, day_number: int, local_time_hours: float) -> SolarAngles:
    """All per-instant geometry quantities in one record."""
    dec = float(declination(day_number))
    omega = float(hour_angle(local_time_hours, site, day_number))
    alpha = float(elevation(site.latitude_deg, dec, omega))
    return SolarAngles(
        day_number=int(day_number),
        day_angle_deg=float(day_angle(day_number)),
        declination_deg=dec,
        eot_minutes=float(equation_of_time(day_number)),
        hour_angle_deg=omega,
        elevation_deg=alpha,
        air_mass=float(air_mass(alpha)),
    )


def upper_bound_series(
    site: SolarSite, day_number: int, grid_step_minutes: float = 10.0
) -> BoundSeries:
    """Bound h(t) = k * I_D(t) on the full-day grid, with its time derivative.

    The derivative uses central differences inside the daylight window and
    first-order one-sided differences at the window edges; h_dot is zero
    outside the window. Time is measured in days for the derivative so the
    result matches the model's 1/day rate units.
    """
    if grid_step_minutes <= 0 or (24.0 * 60.0) % grid_step_minutes != 0:
        raise ValueError("grid step must divide 24 hours")
    times = np.arange(0.0, 24.0, grid_step_minutes / 60.0)
    h = site.panel_area_m2 * clear_sky_irradiance(site, day_number, times)
    lo, hi = support_interval(h)
    dt_days = grid_step_minutes / 60.0 / HOURS_PER_DAY
    h_dot = np.zeros_like(h)
    h_dot[lo : hi + 1] = grid_derivative(h[lo : hi + 1], dt_days)
    return BoundSeries(times=times, h=h, h_dot=h_dot, support=(lo, hi))


def concave_fraction(bound: BoundSeries) -> float:
    """Diagnostic: share of daylight interior points with nonpositive curvature."""
    lo, hi = bound.support
    seg = bound.h[lo : hi + 1]
    if seg.size < 3:
        return 1.0
    second = seg[2:] - 2.0 * seg[1:-1] + seg[:-2]
    return float(np.mean(second <= 1e-12 * np.max(seg)))


def calibrate_panel_area(
    max_capacity_mw: float,
    site: SolarSite,
    days,
    grid_step_minutes: float = 10.0,
) -> float:
    """Estimate k by the max of pointwise capacity / I_D ratios.

    Ratios are taken over every grid instant with positive irradiance across
    the given day numbers; the maximum makes h = k * I_D an upper envelope of
    the capacity at the least favorable daylight instant.
    """
    if max_capacity_mw <= 0:
        raise ValueError("capacity must be positive")
    days = list(days)
    if not days:
        raise ValueError("day list must be nonempty")
    times = np.arange(0.0, 24.0, grid_step_minutes / 60.0)
    best = 0.0
    any_positive = False
    for d in days:
        i_d = clear_sky_irradiance(site, d, times)
        pos = i_d > 0
        if pos.any():
            any_positive = True
            best = max(best, float(np.max(max_capacity_mw / i_d[pos])))
    if not any_positive:
        raise DataError("no positive irradiance on the supplied grid")
    return best
