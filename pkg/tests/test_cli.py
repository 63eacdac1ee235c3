"""End-to-end CLI tests: artifacts, determinism, exit codes."""

import json

import numpy as np
import pytest

import solarsde as s
from solarsde.cli import main
from solarsde.config import load_config, parse_config_text
from solarsde.errors import ConfigError
from solarsde.ingest import read_aligned_csv, write_aligned_csv

from conftest import TRUE_PARAMS, make_clearsky_templates


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Config, raw CSVs, aligned file, and params shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")

    # raw production (10-min) and forecast (hourly) over three days
    rng = np.random.default_rng(8)
    with open(root / "production.csv", "w") as fh:
        fh.write("timestamp,value_mw\n")
        for day in ("2019-03-01", "2019-03-02", "2019-03-03"):
            for hh in range(24):
                for mm in range(0, 60, 10):
                    val = max(0.0, 160.0 * np.exp(-((hh + mm / 60 - 13.0) ** 2) / 12.0))
                    fh.write(f"{day} {hh:02d}:{mm:02d},{val * rng.uniform(0.7, 1.0):.3f}\n")
    with open(root / "forecast.csv", "w") as fh:
        fh.write("timestamp,value_mw\n")
        for day in ("2019-03-01", "2019-03-02", "2019-03-03"):
            for hh in range(24):
                val = max(0.0, 150.0 * np.exp(-((hh - 13.0) ** 2) / 12.0))
                fh.write(f"{day} {hh:02d}:00,{val:.3f}\n")
    (root / "exclusions.txt").write_text("2019-03-03\n")

    (root / "run.cfg").write_text(
        "\n".join(
            [
                "# demo configuration",
                "site.latitude_deg = -34.9",
                "site.longitude_deg = -56.2",
                "site.gmt_offset_hours = -3",
                "site.panel_area_m2 = 250.0",
                f"data.production_path = {root / 'production.csv'}",
                f"data.forecast_path = {root / 'forecast.csv'}",
                f"data.exclusion_path = {root / 'exclusions.txt'}",
                "data.capacity_mw = 200.0",
                "run.seed = 7",
            ]
        )
        + "\n"
    )

    # aligned synthetic days (fast calibration target) and a params file
    templates = make_clearsky_templates(24, seed=21)
    days = s.simulate_error_days(templates, TRUE_PARAMS, seed=11, n_sub=2)
    write_aligned_csv(days, root / "aligned.csv")
    (root / "params.json").write_text(
        json.dumps({"theta0": 20.0, "alpha": 0.15, "epsilon": 0.07}) + "\n"
    )
    return root


def run(workdir, *args) -> int:
    return main(["--config", str(workdir / "run.cfg"), *args])


class TestComputeBound:
    def test_writes_day_rows(self, workdir):
        out = workdir / "bound.csv"
        assert run(workdir, "compute-bound", "--out", str(out), "--first-day", "60", "--last-day", "61") == 0
        lines = out.read_text().splitlines()
        assert lines[2] == "day,time_local,h,h_dot"
        assert sum(1 for ln in lines if ln.startswith("60,")) == 144
        assert lines[0].startswith("# config_hash=")


class TestIngest:
    def test_roundtrip_and_exclusion(self, workdir):
        out = workdir / "aligned_real.csv"
        assert run(workdir, "ingest", "--out", str(out)) == 0
        days = read_aligned_csv(out)
        assert [d.day_id for d in days] == ["2019-03-01", "2019-03-02"]
        for d in days:
            assert np.all(d.h > 0)


class TestPrepare:
    def test_prepared_columns(self, workdir):
        out = workdir / "prepared.csv"
        code = run(
            workdir,
            "prepare",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--out",
            str(out),
        )
        assert code == 0
        header = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][0]
        assert header == "day_id,t,v,r,r_dot,theta"


class TestCalibrate:
    def test_report_and_trace(self, workdir):
        out = workdir / "report.json"
        trace = workdir / "trace.csv"
        code = run(
            workdir,
            "calibrate",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--surrogate",
            "beta",
            "--eps-init",
            "0.07",
            "--out",
            str(out),
            "--trace-out",
            str(trace),
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["converged"] is True
        assert 0.0 < payload["epsilon_hat"] < 0.25
        assert abs(payload["theta0_hat"] - 20.0) / 20.0 < 0.5
        assert trace.read_text().splitlines()[1] == "iteration,epsilon,abs_delta"

    def test_nonconvergence_exit_code(self, workdir, tmp_path):
        cfg = tmp_path / "one_round.cfg"
        cfg.write_text((workdir / "run.cfg").read_text() + "model.max_iterations = 1\n")
        out = tmp_path / "r.json"
        code = main(
            [
                "--config",
                str(cfg),
                "calibrate",
                "--aligned",
                str(workdir / "aligned.csv"),
                "--eps-init",
                "0.02",
                "--out",
                str(out),
            ]
        )
        assert code == 4
        assert json.loads(out.read_text())["converged"] is False  # report still written

    def test_dataset_split_option(self, workdir):
        out = workdir / "report2.json"
        code = run(
            workdir,
            "calibrate",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--dataset",
            "1",
            "--eps-init",
            "0.07",
            "--out",
            str(out),
        )
        assert code == 0


class TestLoglik:
    def test_json_and_determinism(self, workdir):
        out1, out2 = workdir / "ll1.json", workdir / "ll2.json"
        per_day = workdir / "ll_days.csv"
        args = [
            "loglik",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--seed",
            "3",
            "--per-day-out",
            str(per_day),
        ]
        assert run(workdir, *args, "--out", str(out1)) == 0
        first_days = per_day.read_bytes()
        assert run(workdir, *args, "--out", str(out2)) == 0
        payload = json.loads(out1.read_text())
        assert payload["ci"][0] <= payload["loglik"] <= payload["ci"][1]
        assert out1.read_bytes() == out2.read_bytes()
        assert per_day.read_bytes() == first_days


class TestSimulateAndBands:
    def test_simulate_csv(self, workdir):
        days = read_aligned_csv(workdir / "aligned.csv")
        out = workdir / "paths.csv"
        code = run(
            workdir,
            "simulate",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--day",
            days[0].day_id,
            "--paths",
            "3",
            "--seed",
            "1",
            "--out",
            str(out),
        )
        assert code == 0
        header = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][0]
        assert header == "t,path_1,path_2,path_3,p,h"

    def test_unknown_day_exit_code(self, workdir):
        code = run(
            workdir,
            "simulate",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--day",
            "1999-01-01",
            "--out",
            str(workdir / "nope.csv"),
        )
        assert code == 3

    def test_bands_csv(self, workdir):
        out = workdir / "bands.csv"
        code = run(
            workdir,
            "bands",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--levels",
            "50,90",
            "--out",
            str(out),
        )
        assert code == 0
        header = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][0]
        assert header == "day_id,t,center,lower_50,upper_50,lower_90,upper_90,p,h"


class TestSummarize:
    @pytest.mark.parametrize("what", ["mae10", "maedaily", "kde"])
    def test_outputs(self, workdir, what):
        out = workdir / f"sum_{what}.csv"
        code = run(
            workdir,
            "summarize",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--what",
            what,
            "--out",
            str(out),
        )
        assert code == 0
        assert len(out.read_text().splitlines()) > 2


class TestProfileAndLevelsets:
    def test_profile(self, workdir):
        out = workdir / "profile.csv"
        code = run(
            workdir,
            "profile",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--params",
            str(workdir / "params.json"),
            "--eps-grid",
            "0.03:0.12:7",
            "--out",
            str(out),
        )
        assert code == 0
        rows = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
        assert rows[0] == "epsilon,neg_loglik"
        assert len(rows) == 8

    def test_levelsets(self, workdir):
        out = workdir / "levels.csv"
        code = run(
            workdir,
            "levelsets",
            "--aligned",
            str(workdir / "aligned.csv"),
            "--epsilon",
            "0.07",
            "--theta0-grid",
            "15:25:3",
            "--alpha-grid",
            "0.1:0.2:3",
            "--out",
            str(out),
        )
        assert code == 0
        text = out.read_text()
        assert "# argmin theta0=" in text
        rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
        assert len(rows) == 1 + 9


class TestConfig:
    def test_missing_field_exit_code(self, workdir, tmp_path):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("site.latitude_deg = -34.9\n")
        code = main(["--config", str(cfg), "compute-bound", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown field"):
            parse_config_text("nonsense.key = 1\n")

    def test_env_override_and_file_precedence(self, workdir, monkeypatch):
        monkeypatch.setenv("SOLARSDE_RUN_SEED", "99")
        cfg = load_config(None)
        assert cfg.get("run.seed") == 99
        cfg_file = load_config(workdir / "run.cfg")
        assert cfg_file.get("run.seed") == 7  # file beats environment

    def test_hash_stable(self, workdir):
        a = load_config(workdir / "run.cfg").hash
        b = load_config(workdir / "run.cfg").hash
        assert a == b and len(a) == 12

    def test_defaults(self):
        cfg = load_config(None, environ={})
        assert cfg.get("model.surrogate") == "beta"
        assert cfg.get("model.eps_init") == 0.07
        with pytest.raises(ConfigError, match="missing config field"):
            cfg.get("data.capacity_mw")
