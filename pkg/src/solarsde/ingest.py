"""Loading, normalization and alignment of production/forecast series.

Raw inputs are two CSV files (`timestamp,value_mw`): production at the
working grid frequency and a coarser forecast that gets linearly
interpolated onto the same grid. Each calendar day becomes one DaySeries
restricted to the daylight window of its clear-sky bound, with everything
normalized by the installed capacity and time measured in days.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import zlib
from dataclasses import dataclass

import numpy as np

from .clearsky import BoundSeries
from .errors import DataError
from .gridops import grid_derivative

log = logging.getLogger(__name__)

MINUTES_PER_DAY = 1440.0


@dataclass
class RawSeries:
    """Validated timestamped series in MW."""

    timestamps: list[dt.datetime]
    values: np.ndarray
    frequency_minutes: float | None = None

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class DaySeries:
    """One day's aligned, capacity-normalized grid.

    t is the time of day in days (grid spacing Δ = grid_minutes / 1440);
    y and p are normalized production and forecast; h, h_dot the normalized
    bound and its per-day derivative. All arrays cover only the h > 0
    daylight window.
    """

    day_id: str
    t: np.ndarray
    y: np.ndarray
    p: np.ndarray
    p_dot: np.ndarray
    h: np.ndarray
    h_dot: np.ndarray
    held_edge_points: int = 0
    clipped_points: int = 0

    def __post_init__(self):
        n = len(self.t)
        for name in ("y", "p", "p_dot", "h", "h_dot"):
            if len(getattr(self, name)) != n:
                raise DataError(f"day {self.day_id}: column {name} length mismatch")
        if n < 2:
            raise DataError(f"day {self.day_id}: fewer than two grid points")
        steps = np.diff(self.t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise DataError(f"day {self.day_id}: grid spacing not constant")
        if np.any(self.h <= 0):
            raise DataError(f"day {self.day_id}: bound not positive on the window")
        if np.any((self.y < 0) | (self.y > 1)) or np.any((self.p < 0) | (self.p > 1)):
            raise DataError(f"day {self.day_id}: normalized values outside [0, 1]")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def n_transitions(self) -> int:
        return len(self.t) - 1

    @property
    def ratio(self) -> np.ndarray:
        """Un-thresholded normalized forecast p/h."""
        return self.p / self.h

    @property
    def y_over_h(self) -> np.ndarray:
        return self.y / self.h

    @property
    def hdot_over_h(self) -> np.ndarray:
        return self.h_dot / self.h

    @property
    def day_key(self) -> int:
        """Stable integer identity for seeding, derived from day_id only."""
        try:
            return dt.date.fromisoformat(self.day_id[:10]).toordinal()
        except ValueError:
            return zlib.crc32(self.day_id.encode())


@dataclass
class DataSplit:
    """Alternating-day partition into two independent data sets."""

    set1: list[DaySeries]
    set2: list[DaySeries]


def _parse_timestamp(text: str, row: int) -> dt.datetime:
    try:
        return dt.datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"row {row}: bad timestamp {text!r}") from exc


def _load_series(path, expected_minutes: float | None) -> RawSeries:
    timestamps: list[dt.datetime] = []
    values: list[float] = []
    header_allowed = True
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row_no, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise DataError(f"row {row_no}: expected 'timestamp,value' fields")
            if header_allowed:
                header_allowed = False
                try:
                    dt.datetime.fromisoformat(row[0].strip())
                except ValueError:
                    continue  # header line
            ts = _parse_timestamp(row[0], row_no)
            try:
                val = float(row[1])
            except ValueError as exc:
                raise DataError(f"row {row_no}: bad value {row[1]!r}") from exc
            if not np.isfinite(val) or val < 0:
                raise DataError(f"row {row_no}: value {val} must be finite and >= 0")
            if timestamps and ts <= timestamps[-1]:
                raise DataError(f"row {row_no}: timestamp {ts} not strictly increasing")
            timestamps.append(ts)
            values.append(val)
    if not timestamps:
        raise DataError(f"{path}: empty series")
    freq = None
    if len(timestamps) > 1:
        diffs = np.array(
            [(b - a).total_seconds() / 60.0 for a, b in zip(timestamps, timestamps[1:])]
        )
        freq = float(np.median(diffs))
        gaps = int(np.sum(np.abs(diffs - freq) > 1e-9))
        if gaps:
            log.warning("%s: %d gaps relative to the %.1f-min median spacing", path, gaps, freq)
        if expected_minutes is not None and abs(freq - expected_minutes) > 1e-9:
            log.info("%s: spacing %.1f min (declared %.1f min)", path, freq, expected_minutes)
    return RawSeries(timestamps=timestamps, values=np.array(values), frequency_minutes=freq)


def load_production(path, expected_minutes: float = 10.0) -> RawSeries:
    """Load the production CSV, validating order, sign and spacing."""
    return _load_series(path, expected_minutes)


def load_forecast(path, expected_minutes: float = 60.0) -> RawSeries:
    """Load the forecast CSV; off-nominal frequencies are accepted and noted."""
    return _load_series(path, expected_minutes)


def _by_date(series: RawSeries) -> dict[dt.date, tuple[np.ndarray, np.ndarray]]:
    out: dict[dt.date, tuple[list, list]] = {}
    for ts, val in zip(series.timestamps, series.values):
        hours = ts.hour + ts.minute / 60.0 + ts.second / 3600.0
        out.setdefault(ts.date(), ([], []))
        out[ts.date()][0].append(hours)
        out[ts.date()][1].append(val)
    return {d: (np.array(h), np.array(v)) for d, (h, v) in out.items()}


def normalize_and_align(
    production: RawSeries,
    forecast: RawSeries,
    capacity_mw: float,
    bounds,
    grid_minutes: float = 10.0,
) -> list[DaySeries]:
    """Build one DaySeries per day present in both inputs.

    bounds is a mapping date -> BoundSeries (or a callable producing one);
    bound values are normalized by the capacity here. The forecast is
    linearly interpolated onto the grid, holding the nearest knot constant
    beyond its first/last timestamp (those points are counted in
    held_edge_points). Production above the normalized bound is clipped to
    it, counted in clipped_points.
    """
    if capacity_mw <= 0:
        raise DataError("capacity must be positive")
    prod_days = _by_date(production)
    fcst_days = _by_date(forecast)
    grid_hours = np.arange(0.0, 24.0, grid_minutes / 60.0)
    days: list[DaySeries] = []
    for date in sorted(prod_days):
        if date not in fcst_days:
            log.warning("day %s: missing forecast, skipped", date)
            continue
        ph, pv = prod_days[date]
        fh, fv = fcst_days[date]
        if len(ph) < 2 or len(fh) < 1:
            log.warning("day %s: too few points, skipped", date)
            continue
        bound: BoundSeries = bounds(date) if callable(bounds) else bounds[date]
        if len(bound.times) != len(grid_hours):
            raise DataError(f"day {date}: bound grid does not match {grid_minutes}-min grid")
        lo, hi = bound.support
        sel = slice(lo, hi + 1)
        hours = grid_hours[sel]
        h = bound.h[sel] / capacity_mw
        h_dot = bound.h_dot[sel] / capacity_mw
        y = np.interp(hours, ph, pv) / capacity_mw
        p = np.interp(hours, fh, fv) / capacity_mw
        held = int(np.sum((hours < fh[0]) | (hours > fh[-1])))
        cap = np.minimum(h, 1.0)
        clipped = int(np.sum((y > cap) | (y > 1.0)))
        y = np.minimum(np.clip(y, 0.0, 1.0), cap)
        p = np.minimum(np.clip(p, 0.0, 1.0), cap)
        dt_days = grid_minutes / MINUTES_PER_DAY
        days.append(
            DaySeries(
                day_id=date.isoformat(),
                t=hours / 24.0,
                y=y,
                p=p,
                p_dot=grid_derivative(p, dt_days),
                h=h,
                h_dot=h_dot,
                held_edge_points=held,
                clipped_points=clipped,
            )
        )
        if clipped:
            log.info("day %s: clipped %d production points to the bound", date, clipped)
    return days


def exclude_days(days: list[DaySeries], exclusion_list) -> list[DaySeries]:
    """Drop listed day_ids (curtailed days etc.); unknown ids only warn."""
    excluded = {str(e).strip() for e in exclusion_list if str(e).strip()}
    known = {d.day_id for d in days}
    for e in excluded - known:
        log.warning("exclusion list entry %s matches no loaded day", e)
    kept = [d for d in days if d.day_id not in excluded]
    log.info("excluded %d days, %d retained", len(days) - len(kept), len(kept))
    if not kept:
        log.warning("all days excluded")
    return kept


def split_alternating(days: list[DaySeries]) -> DataSplit:
    """Chronologically alternate days into two noncontiguous subsets."""
    ordered = sorted(days, key=lambda d: d.day_id)
    return DataSplit(set1=ordered[0::2], set2=ordered[1::2])


ALIGNED_COLUMNS = ("day_id", "t", "y", "p", "p_dot", "h", "h_dot")


def write_aligned_csv(days: list[DaySeries], path, header_lines=()) -> None:
    """Write the canonical aligned CSV (17 significant digits, lossless)."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(ALIGNED_COLUMNS) + "\n")
        for day in days:
            for i in range(len(day.t)):
                nums = (day.t[i], day.y[i], day.p[i], day.p_dot[i], day.h[i], day.h_dot[i])
                fh.write(day.day_id + "," + ",".join(f"{x:.17g}" for x in nums) + "\n")


def read_aligned_csv(path) -> list[DaySeries]:
    """Read the canonical aligned CSV back into DaySeries objects."""
    rows: dict[str, list[list[float]]] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("day_id"):
                continue
            parts = line.split(",")
            if len(parts) != len(ALIGNED_COLUMNS):
                raise DataError(f"{path}: malformed row {line!r}")
            day_id = parts[0]
            if day_id not in rows:
                rows[day_id] = []
                order.append(day_id)
            rows[day_id].append([float(x) for x in parts[1:]])
    days = []
    for day_id in order:
        cols = np.array(rows[day_id]).T
        days.append(
            DaySeries(
                day_id=day_id,
                t=cols[0],
                y=cols[1],
                p=cols[2],
                p_dot=cols[3],
                h=cols[4],
                h_dot=cols[5],
            )
        )
    return days
