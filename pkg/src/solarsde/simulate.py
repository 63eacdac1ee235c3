"""Projected-Euler simulation of production paths and synthetic data days.

Paths of the normalized production start at the forecast and are clamped
into [0, h] before every increment; the error-process simulator generates
whole synthetic days in the same shape the ingest stage produces, which is
what closed-loop parameter-recovery tests feed back into calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ingest import DaySeries
from .prep import ModelParams, prepare_day

ERROR_STREAM_TAG = 931  # distinguishes day-level error streams from path streams


def path_rng(seed: int, day_key: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one simulated path of one day."""
    entropy = [int(seed) & 0xFFFFFFFF, int(day_key) & 0xFFFFFFFF, int(path_index) & 0xFFFFFFFF, 0]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass
class PathBundle:
    """Simulated production paths on one day's grid (paths x grid matrix)."""

    day_id: str
    t: np.ndarray
    x: np.ndarray
    seed: int

    @property
    def n_paths(self) -> int:
        return self.x.shape[0]


def simulate_production_paths(
    day: DaySeries, params: ModelParams, n_paths: int, seed: int = 0
) -> PathBundle:
    """Euler paths of normalized production, clamped into [0, h] per step.

    X starts at the day's first forecast value; each step clamps the state,
    stores it, then advances with drift p_dot - theta (X - p) and diffusion
    sqrt(2 alpha theta0 X (h - X)). Increments are drawn from per-path
    counter-based streams, so results do not depend on scheduling.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    prep = prepare_day(day, params)
    theta = prep.theta
    n = len(day.t)
    dt = day.dt
    sq_dt = np.sqrt(dt)
    dw = np.empty((n_paths, n - 1))
    for k in range(n_paths):
        dw[k] = path_rng(seed, day.day_key, k).standard_normal(n - 1) * sq_dt
    two_a = 2.0 * params.alpha_theta0
    x = np.empty((n_paths, n))
    cur = np.full(n_paths, day.p[0])
    for i in range(n - 1):
        cur = np.clip(cur, 0.0, day.h[i])
        x[:, i] = cur
        drift = day.p_dot[i] - theta[i] * (cur - day.p[i])
        diffusion = np.sqrt(two_a * cur * (day.h[i] - cur))
        cur = cur + drift * dt + diffusion * dw[:, i]
    x[:, n - 1] = np.clip(cur, 0.0, day.h[n - 1])
    return PathBundle(day_id=day.day_id, t=day.t.copy(), x=x, seed=seed)


def simulate_error_days(
    template_days: list[DaySeries],
    params: ModelParams,
    seed: int = 0,
    id_suffix: str = "",
    n_sub: int = 1,
) -> list[DaySeries]:
    """Synthetic days: the error SDE drives production around each template.

    The error path starts at zero (production starts at the forecast), is
    projected into [-r, 1-r] before each increment, and is mapped back to a
    production series y = (v + r) h. Forecast and bound columns are copied
    from the template, so the output slots straight into the pipeline.
    n_sub > 1 refines the Euler step between grid points (coefficients held
    linear in time) for generators that should track the continuous SDE more
    closely than the observation grid.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be at least 1")
    out: list[DaySeries] = []
    two_a = 2.0 * params.alpha_theta0
    for day in template_days:
        prep = prepare_day(day, params)
        r = prep.r
        tp = prep.theta_plus
        n = len(day.t)
        dt = day.dt / n_sub
        rng = np.random.Generator(
            np.random.Philox(
                np.random.SeedSequence(
                    [int(seed) & 0xFFFFFFFF, day.day_key & 0xFFFFFFFF, ERROR_STREAM_TAG]
                )
            )
        )
        dw = rng.standard_normal((n - 1) * n_sub) * np.sqrt(dt)
        v = np.empty(n)
        cur = 0.0
        for i in range(n - 1):
            for k in range(n_sub):
                frac = k / n_sub
                r_k = r[i] + frac * (r[i + 1] - r[i])
                tp_k = tp[i] + frac * (tp[i + 1] - tp[i])
                cur = float(np.clip(cur, -r_k, 1.0 - r_k))
                if k == 0:
                    v[i] = cur
                rad = two_a * (cur + r_k) * (1.0 - cur - r_k)
                cur = cur - tp_k * cur * dt + np.sqrt(max(rad, 0.0)) * dw[i * n_sub + k]
        v[n - 1] = float(np.clip(cur, -r[n - 1], 1.0 - r[n - 1]))
        y = np.minimum((v + r) * day.h, 1.0)
        out.append(
            replace(
                day,
                day_id=day.day_id + id_suffix,
                y=y,
                held_edge_points=0,
                clipped_points=0,
            )
        )
    return out
