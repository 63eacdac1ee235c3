"""Command-line entry point wiring configuration and pipeline stages.

Every stage reads its declared input artifacts and writes CSV/JSON outputs
whose header comment carries the config hash and the seed, so identical
(config, seed, inputs) reproduce identical bytes. Exit codes: 0 ok,
2 config error, 3 data error, 4 numerical nonconvergence.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys

import numpy as np

from . import bands as bands_mod
from . import calibrate as cal
from . import clearsky, ingest, kde, simulate
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError, DataError, SolarSdeError
from .prep import ModelParams, prepare_day
from .surrogates import SurrogateKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NONCONVERGED = 4


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _header(config: RunConfig, seed) -> str:
    return f"# config_hash={config.hash} seed={seed}\n"


def _site(config: RunConfig, panel_area: float) -> clearsky.SolarSite:
    return clearsky.SolarSite(
        latitude_deg=config.get("site.latitude_deg"),
        longitude_deg=config.get("site.longitude_deg"),
        gmt_offset_hours=config.get("site.gmt_offset_hours"),
        solar_constant_w_per_m2=config.get("site.solar_constant"),
        panel_area_m2=panel_area,
    )


def _panel_area(config: RunConfig) -> float:
    raw = config.get("site.panel_area_m2")
    if raw == "auto":
        site = _site(config, 1.0)
        capacity = config.get("data.capacity_mw")
        return clearsky.calibrate_panel_area(
            capacity, site, range(1, 366), config.get("data.grid_minutes")
        )
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"site.panel_area_m2 must be a number or 'auto', got {raw!r}") from exc


def _read_params(path: str) -> ModelParams:
    try:
        with open(path) as fh:
            payload = json.load(fh)
        return ModelParams(
            theta0=float(payload["theta0"]),
            alpha=float(payload["alpha"]),
            epsilon=float(payload["epsilon"]),
        )
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read params file {path}: {exc}") from exc


def _load_days(path: str, dataset: str = "all") -> list[ingest.DaySeries]:
    days = ingest.read_aligned_csv(path)
    if not days:
        raise DataError(f"{path}: no days found")
    if dataset == "all":
        return days
    split = ingest.split_alternating(days)
    return split.set1 if dataset == "1" else split.set2


def _grid_spec(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {text!r}; expected lo:hi:n") from exc


def cmd_compute_bound(args, config: RunConfig) -> int:
    area = _panel_area(config)
    site = _site(config, area)
    step = config.get("data.grid_minutes")
    days = range(args.first_day, args.last_day + 1)
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        fh.write(f"# panel_area_m2={_fmt(area)}\n")
        fh.write("day,time_local,h,h_dot\n")
        for d in days:
            bound = clearsky.upper_bound_series(site, d, step)
            for t, h, hd in zip(bound.times, bound.h, bound.h_dot):
                fh.write(f"{d},{_fmt(t)},{_fmt(h)},{_fmt(hd)}\n")
    return EXIT_OK


def cmd_ingest(args, config: RunConfig) -> int:
    area = _panel_area(config)
    site = _site(config, area)
    step = config.get("data.grid_minutes")
    production = ingest.load_production(config.get("data.production_path"))
    forecast = ingest.load_forecast(config.get("data.forecast_path"))

    def bound_for(date: dt.date) -> clearsky.BoundSeries:
        return clearsky.upper_bound_series(site, clearsky.fold_day_of_year(date.timetuple().tm_yday), step)

    days = ingest.normalize_and_align(
        production, forecast, config.get("data.capacity_mw"), bound_for, step
    )
    exclusion_path = config.get("data.exclusion_path")
    if exclusion_path:
        with open(exclusion_path) as fh:
            exclusions = [line.strip() for line in fh if line.strip()]
        days = ingest.exclude_days(days, exclusions)
    if not days:
        raise DataError("no days survived ingestion")
    ingest.write_aligned_csv(
        days, args.out, header_lines=[f"config_hash={config.hash} seed={config.get('run.seed')}"]
    )
    return EXIT_OK


def cmd_prepare(args, config: RunConfig) -> int:
    days = _load_days(args.aligned)
    params = _read_params(args.params)
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        fh.write("day_id,t,v,r,r_dot,theta\n")
        for day in days:
            prep = prepare_day(day, params)
            for i in range(len(day.t)):
                fh.write(
                    f"{day.day_id},{_fmt(day.t[i])},{_fmt(prep.v[i])},"
                    f"{_fmt(prep.r[i])},{_fmt(prep.r_dot[i])},{_fmt(prep.theta[i])}\n"
                )
    return EXIT_OK


def cmd_calibrate(args, config: RunConfig) -> int:
    days = _load_days(args.aligned, args.dataset)
    kind = SurrogateKind.parse(args.surrogate or config.get("model.surrogate"))
    eps_init = args.eps_init if args.eps_init is not None else config.get("model.eps_init")
    report = cal.calibrate_pipeline(
        days, eps_init, kind, max_iterations=config.get("model.max_iterations")
    )
    payload = {"config_hash": config.hash, "seed": config.get("run.seed")}
    payload.update(report.to_dict())
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            fh.write(_header(config, config.get("run.seed")))
            fh.write("iteration,epsilon,abs_delta\n")
            for i, eps in enumerate(report.epsilon_trace):
                delta = "" if i == 0 else _fmt(report.abs_delta_trace[i - 1])
                fh.write(f"{i},{_fmt(eps)},{delta}\n")
    if not report.converged:
        raise ConvergenceError("calibration did not converge; report written")
    return EXIT_OK


def cmd_loglik(args, config: RunConfig) -> int:
    days = _load_days(args.aligned, args.dataset)
    params = _read_params(args.params)
    result = kde.model_loglik(days, params, tol=args.tol, seed=args.seed, m0=args.m0)
    payload = {
        "config_hash": config.hash,
        "seed": args.seed,
        "loglik": result.loglik,
        "ci": [result.ci_lower, result.ci_upper],
        "floored_count": result.floored_count,
        "nonconverged_count": result.nonconverged_count,
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.per_day_out:
        with open(args.per_day_out, "w") as fh:
            fh.write(_header(config, args.seed))
            fh.write("day_id,loglik\n")
            for day_id, value in result.per_day:
                fh.write(f"{day_id},{_fmt(value)}\n")
    return EXIT_OK


def cmd_simulate(args, config: RunConfig) -> int:
    days = _load_days(args.aligned)
    by_id = {d.day_id: d for d in days}
    if args.day not in by_id:
        raise DataError(f"day {args.day!r} not present in {args.aligned}")
    day = by_id[args.day]
    params = _read_params(args.params)
    bundle = simulate.simulate_production_paths(day, params, args.paths, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(_header(config, args.seed))
        cols = ",".join(f"path_{k+1}" for k in range(args.paths))
        fh.write(f"t,{cols},p,h\n")
        for i in range(len(day.t)):
            row = ",".join(_fmt(bundle.x[k, i]) for k in range(args.paths))
            fh.write(f"{_fmt(day.t[i])},{row},{_fmt(day.p[i])},{_fmt(day.h[i])}\n")
    return EXIT_OK


def cmd_bands(args, config: RunConfig) -> int:
    days = _load_days(args.aligned)
    params = _read_params(args.params)
    kind = SurrogateKind.parse(args.surrogate or config.get("model.surrogate"))
    levels = tuple(float(x) / 100.0 for x in args.levels.split(","))
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        names = []
        for lv in sorted(levels):
            pct = int(round(lv * 100))
            names += [f"lower_{pct}", f"upper_{pct}"]
        fh.write("day_id,t,center," + ",".join(names) + ",p,h\n")
        for day in days:
            series = bands_mod.confidence_bands(
                day, params, kind, levels=levels, conditional=args.conditional
            )
            for i in range(len(day.t)):
                cells = [series.day_id, _fmt(day.t[i]), _fmt(series.center_x[i])]
                for lv in series.levels:
                    cells += [_fmt(series.lower_x[lv][i]), _fmt(series.upper_x[lv][i])]
                cells += [_fmt(day.p[i]), _fmt(day.h[i])]
                fh.write(",".join(cells) + "\n")
    return EXIT_OK


def cmd_summarize(args, config: RunConfig) -> int:
    days = _load_days(args.aligned)
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        if args.what == "mae10":
            t, mae, counts = bands_mod.mae_10min(days)
            fh.write("t,mae,n_days\n")
            for row in zip(t, mae, counts):
                fh.write(f"{_fmt(row[0])},{_fmt(row[1])},{int(row[2])}\n")
        elif args.what == "maedaily":
            fh.write("day_id,mae\n")
            for day_id, value in bands_mod.mae_daily(days):
                fh.write(f"{day_id},{_fmt(value)}\n")
        else:
            grid, density = bands_mod.error_transition_kde(days, args.band)
            fh.write("v,density\n")
            for g, d in zip(grid, density):
                fh.write(f"{_fmt(g)},{_fmt(d)}\n")
    return EXIT_OK


def cmd_profile(args, config: RunConfig) -> int:
    days = _load_days(args.aligned, args.dataset)
    params = _read_params(args.params)
    kind = SurrogateKind.parse(args.surrogate or config.get("model.surrogate"))
    grid = _grid_spec(args.eps_grid)
    curve = cal.profile_epsilon(
        days, params.theta0, params.alpha, kind, grid, partition_epsilon=params.epsilon
    )
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        fh.write("epsilon,neg_loglik\n")
        for e, nll in zip(grid, curve):
            fh.write(f"{_fmt(e)},{_fmt(nll)}\n")
    return EXIT_OK


def cmd_levelsets(args, config: RunConfig) -> int:
    days = _load_days(args.aligned, args.dataset)
    kind = SurrogateKind.parse(args.surrogate or config.get("model.surrogate"))
    th_grid = _grid_spec(args.theta0_grid)
    al_grid = _grid_spec(args.alpha_grid)
    matrix, argmin = cal.level_sets(days, args.epsilon, kind, th_grid, al_grid)
    with open(args.out, "w") as fh:
        fh.write(_header(config, config.get("run.seed")))
        fh.write(f"# argmin theta0={_fmt(th_grid[argmin[0]])} alpha={_fmt(al_grid[argmin[1]])}\n")
        fh.write("theta0,alpha,neg_loglik\n")
        for i, th in enumerate(th_grid):
            for j, al in enumerate(al_grid):
                fh.write(f"{_fmt(th)},{_fmt(al)},{_fmt(matrix[i, j])}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solarsde",
        description="Forecast-error uncertainty quantification for bound-constrained data",
    )
    parser.add_argument("--config", help="path to a key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute-bound", help="clear-sky upper bound per day")
    p.add_argument("--out", required=True)
    p.add_argument("--first-day", type=int, default=1)
    p.add_argument("--last-day", type=int, default=365)
    p.set_defaults(func=cmd_compute_bound)

    p = sub.add_parser("ingest", help="align production/forecast onto the bound grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prepare", help="thresholded forecast and error observations")
    p.add_argument("--aligned", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("calibrate", help="two-stage threshold + diffusion calibration")
    p.add_argument("--aligned", required=True)
    p.add_argument("--surrogate", choices=["beta", "truncnorm"])
    p.add_argument("--eps-init", type=float)
    p.add_argument("--dataset", choices=["1", "2", "all"], default="all")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("loglik", help="exact-model log-likelihood via CV-KDE")
    p.add_argument("--aligned", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--dataset", choices=["1", "2", "all"], default="all")
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m0", type=int, default=50)
    p.add_argument("--out", required=True)
    p.add_argument("--per-day-out")
    p.set_defaults(func=cmd_loglik)

    p = sub.add_parser("simulate", help="projected-Euler production paths for one day")
    p.add_argument("--aligned", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--day", required=True)
    p.add_argument("--paths", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bands", help="pathwise confidence bands")
    p.add_argument("--aligned", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--surrogate", choices=["beta", "truncnorm"])
    p.add_argument("--levels", default="50,90,99")
    p.add_argument("--conditional", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("summarize", help="MAE curves and error-density summaries")
    p.add_argument("--aligned", required=True)
    p.add_argument("--what", choices=["mae10", "maedaily", "kde"], required=True)
    p.add_argument("--band", choices=["all", "low", "mid", "high"], default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("profile", help="threshold profile of the boundary objective")
    p.add_argument("--aligned", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--surrogate", choices=["beta", "truncnorm"])
    p.add_argument("--dataset", choices=["1", "2", "all"], default="all")
    p.add_argument("--eps-grid", default="0.01:0.2:40")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("levelsets", help="objective surface over (theta0, alpha)")
    p.add_argument("--aligned", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--surrogate", choices=["beta", "truncnorm"])
    p.add_argument("--dataset", choices=["1", "2", "all"], default="all")
    p.add_argument("--theta0-grid", default="10:35:26")
    p.add_argument("--alpha-grid", default="0.05:0.4:36")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_levelsets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except SolarSdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
