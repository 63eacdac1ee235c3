"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Criterion 5 (reproduction of the published 2019 UTE results) needs
the original data files and is explicitly SKIPPED when SOLARSDE_UTE_DIR is
not set.
"""

import os
import time

import numpy as np
import pytest
from scipy.linalg import expm

import solarsde as s
from solarsde.kde import _gauss_pdf, transition_rng
from solarsde.prep import StackedDays
from solarsde.surrogates import (
    SurrogateKind,
    _beta_logpdf_arrays,
    _truncnorm_logpdf_arrays,
    surrogate_cdf,
)

from conftest import TRUE_PARAMS, make_flat_day

BETA = SurrogateKind.BETA
TNORM = SurrogateKind.TRUNCATED_NORMAL


def report(num: int, description: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {num}: {description}{suffix}")
    assert passed, f"criterion {num} failed: {description}{suffix}"


@pytest.fixture(scope="module")
def beta_fit(synthetic_days):
    """Full beta-pipeline calibration from eps_init = 0.07 (reused below)."""
    return s.calibrate_pipeline(synthetic_days, 0.07, BETA)


class TestCriterion1:
    def test_clear_sky_spot_values(self):
        t0 = time.time()
        ok_irr = abs(s.irradiance(1.0) - 0.9471) <= 1e-4
        ok_dec = abs(s.declination(81)) <= 1e-9
        ok_eot = s.equation_of_time(81) == -7.53
        am = s.air_mass(90.0)
        ok_am = 0.999 <= am <= 1.0
        elapsed = time.time() - t0
        report(
            1,
            "clear-sky spot values",
            ok_irr and ok_dec and ok_eot and ok_am,
            f"irr(1)={s.irradiance(1.0):.5f}, dec(81)={s.declination(81):.1e}, "
            f"eot(81)={s.equation_of_time(81)}, am(90)={am:.6f}, {elapsed*1e3:.0f} ms",
        )


class TestCriterion2:
    @staticmethod
    def _oracle(v0, tp, r, a, dt):
        mat = np.array(
            [
                [-tp, 0.0, 0.0],
                [2 * a * (1 - 2 * r), -2 * (tp + a), 2 * a * (r - r * r)],
                [0.0, 0.0, 0.0],
            ]
        )
        out = expm(mat * dt) @ np.array([v0, v0 * v0, 1.0])
        return float(out[0]), float(out[1])

    def test_moment_ode_oracle(self):
        from solarsde.moments import MomentPair, StepCoefficients, error_moment_step

        t0 = time.time()
        rng = np.random.default_rng(1)
        dt = 10.0 / 1440.0
        worst = 0.0
        for _ in range(100):
            tp = rng.uniform(1.0, 60.0)
            a = rng.uniform(0.0, 5.0)
            r = rng.uniform(0.07, 0.93)
            v0 = rng.uniform(-r + 0.01, 1.0 - r - 0.01)
            got = error_moment_step(
                MomentPair.from_observation(v0), StepCoefficients.constant(tp, r, a, dt)
            )
            want = self._oracle(v0, tp, r, a, dt)
            worst = max(
                worst,
                abs(got.m1 - want[0]) / max(abs(want[0]), 1e-12),
                abs(got.m2 - want[1]) / max(abs(want[1]), 1e-12),
            )
        ratios = []
        for tp, a, r, v0, big_dt in [
            (2.0, 0.5, 0.4, 0.3, 0.4),
            (4.0, 1.0, 0.3, 0.2, 0.2),
            (8.0, 2.0, 0.6, -0.1, 0.1),
        ]:
            want = self._oracle(v0, tp, r, a, big_dt)
            errs = [
                abs(
                    error_moment_step(
                        MomentPair.from_observation(v0),
                        StepCoefficients.constant(tp, r, a, big_dt, n_sub=n),
                    ).m2
                    - want[1]
                )
                for n in (8, 16)
            ]
            ratios.append(errs[0] / errs[1])
        elapsed = time.time() - t0
        ok = worst < 1e-6 and all(13.0 <= r <= 19.0 for r in ratios)
        report(
            2,
            "moment-ODE closed-form oracle and 4th-order convergence",
            ok,
            f"worst rel err {worst:.2e}, ratios {[f'{r:.1f}' for r in ratios]}, {elapsed:.2f} s",
        )


class TestCriterion3:
    def test_surrogate_correctness(self):
        t0 = time.time()
        nodes, weights = np.polynomial.legendre.leggauss(2000)
        rng = np.random.default_rng(2)
        worst_integral = 0.0
        count = 0
        while count < 50:
            eps = rng.uniform(0.0, 0.15)
            half = 1.0 - eps
            mu = rng.uniform(-0.4, 0.4)
            sigma2 = rng.uniform(0.002, 0.3 * (half * half - mu * mu))
            x = nodes * half
            if count % 2 == 0:
                shapes = s.beta_shapes(mu, sigma2, eps)
                if min(shapes.xi1, shapes.xi2) < 1.0:
                    continue
                vals = np.exp(_beta_logpdf_arrays(x, shapes.xi1, shapes.xi2, eps))
            else:
                vals = np.exp(_truncnorm_logpdf_arrays(x, mu, np.sqrt(sigma2), eps))
            total = float(np.sum(weights * half * vals))
            worst_integral = max(worst_integral, abs(total - 1.0))
            count += 1
        worst_rt = 0.0
        for kind in (BETA, TNORM):
            for mu, sigma2, eps in [(0.0, 0.05, 0.0), (0.2, 0.05, 0.1), (-0.15, 0.02, 0.07)]:
                for q in (0.005, 0.05, 0.25, 0.5, 0.75, 0.95, 0.995):
                    v = s.surrogate_quantile(q, kind, mu, sigma2, eps)
                    worst_rt = max(worst_rt, abs(surrogate_cdf(v, kind, mu, sigma2, eps) - q))
        elapsed = time.time() - t0
        ok = worst_integral <= 1e-6 and worst_rt < 1e-8
        report(
            3,
            "surrogate normalization and quantile round-trip",
            ok,
            f"worst |integral-1| {worst_integral:.2e}, worst roundtrip {worst_rt:.2e}, {elapsed:.1f} s",
        )


class TestCriterion4:
    def test_closed_loop_calibration(self, synthetic_days, beta_fit):
        t0 = time.time()
        rep_b = s.calibrate_pipeline(synthetic_days, 0.02, BETA)
        rep_a = beta_fit  # eps_init = 0.07
        elapsed = time.time() - t0
        errs = {
            "theta0_a": abs(rep_a.theta0_hat / 20.0 - 1.0),
            "theta0_b": abs(rep_b.theta0_hat / 20.0 - 1.0),
            "alpha_a": abs(rep_a.alpha_hat / 0.15 - 1.0),
            "alpha_b": abs(rep_b.alpha_hat / 0.15 - 1.0),
            "eps_a": abs(rep_a.epsilon_hat - 0.07),
            "eps_b": abs(rep_b.epsilon_hat - 0.07),
        }
        ok = (
            rep_a.converged
            and rep_b.converged
            and rep_a.abs_delta_trace[-1] <= 1e-3
            and rep_b.abs_delta_trace[-1] <= 1e-3
            and errs["theta0_a"] <= 0.15
            and errs["theta0_b"] <= 0.15
            and errs["alpha_a"] <= 0.15
            and errs["alpha_b"] <= 0.15
            and errs["eps_a"] <= 0.02
            and errs["eps_b"] <= 0.02
            and elapsed < 300.0
        )
        report(
            4,
            "synthetic closed-loop calibration from both starts",
            ok,
            f"eps {rep_a.epsilon_hat:.4f}/{rep_b.epsilon_hat:.4f}, "
            f"theta0 {rep_a.theta0_hat:.2f}/{rep_b.theta0_hat:.2f}, "
            f"alpha {rep_a.alpha_hat:.4f}/{rep_b.alpha_hat:.4f}, {elapsed:.0f} s",
        )


class TestCriterion5:
    def test_ute_2019_reproduction(self):
        data_dir = os.environ.get("SOLARSDE_UTE_DIR")
        if not data_dir:
            print(
                "[SKIP] criterion 5: 2019 UTE reproduction SKIPPED "
                "(set SOLARSDE_UTE_DIR to the directory holding production.csv, "
                "forecast.csv, exclusions.txt)"
            )
            pytest.skip("UTE 2019 data not supplied")
        site = s.SolarSite(
            latitude_deg=-34.9,
            longitude_deg=-56.2,
            gmt_offset_hours=-3.0,
            panel_area_m2=257057.0,
        )
        production = s.load_production(os.path.join(data_dir, "production.csv"))
        forecast = s.load_forecast(os.path.join(data_dir, "forecast.csv"))

        def bound_for(date):
            import solarsde.clearsky as clearsky

            return s.upper_bound_series(
                site, clearsky.fold_day_of_year(date.timetuple().tm_yday)
            )

        days = s.normalize_and_align(production, forecast, 228.8, bound_for)
        with open(os.path.join(data_dir, "exclusions.txt")) as fh:
            exclusions = [line.strip() for line in fh if line.strip()]
        days = s.exclude_days(days, exclusions)
        assert len(days) == 206, f"expected 206 retained days, got {len(days)}"
        set1 = s.split_alternating(days).set1
        rep_beta = s.calibrate_pipeline(set1, 0.07, BETA)
        rep_tn = s.calibrate_pipeline(set1, 0.07, TNORM)
        ok = (
            abs(rep_beta.epsilon_hat - 0.074) <= 0.01
            and abs(rep_beta.theta0_hat / 22.50 - 1.0) <= 0.10
            and abs(rep_beta.alpha_hat / 0.16 - 1.0) <= 0.10
            and abs(rep_tn.epsilon_hat - 0.066) <= 0.01
            and abs(rep_tn.theta0_hat / 21.75 - 1.0) <= 0.10
            and abs(rep_tn.alpha_hat / 0.16 - 1.0) <= 0.10
        )
        report(
            5,
            "2019 UTE Data Set 1 reproduction",
            ok,
            f"beta (eps, th0, al)=({rep_beta.epsilon_hat:.3f}, {rep_beta.theta0_hat:.2f}, "
            f"{rep_beta.alpha_hat:.3f}); tn ({rep_tn.epsilon_hat:.3f}, "
            f"{rep_tn.theta0_hat:.2f}, {rep_tn.alpha_hat:.3f})",
        )


def crude_kde_required_m(rec, params, tol=0.1, m0=50, seed=0, m_cap=2**20):
    """Crude-KDE baseline under the same adaptive bound.

    Setting the companion process to zero collapses the control-variate
    estimator to the plain kernel sum (the subtracted kernel term and the
    exact expectation cancel), and the MSE bound applies verbatim with
    E[(V - 0)^4] in the coupling constant. Doubling proceeds under the same
    tolerance and acceptance rule as the CV loop.
    """
    sigma_m = s.match_diffusion_level(rec.v_prev, rec.r_left, params.alpha_theta0)
    mu_z, sigma_z = s.gaussian_step_params(rec, params, sigma_m)
    rho_ref = float(_gauss_pdf(rec.v_next, mu_z, sigma_z))
    rng = transition_rng(seed, rec.day_key, rec.index)
    m = m0
    while True:
        sample = s.simulate_coupled(rec, params, m, rng=rng)
        zero_cv = s.CoupledSample(v=sample.v, z=np.zeros(sample.m))
        c1, c2 = s.mse_constants(rec.v_next, mu_z, sigma_z, zero_cv)
        h = max(s.optimal_bandwidth(m, c1, c2, sigma_z), 1e-12)
        est = float(np.mean(_gauss_pdf(sample.v, rec.v_next, h)))
        rel = (c1 * h**4 + c2 / (m * h**3.5)) / (1.0 + rho_ref * rho_ref)
        if (rel <= tol and est >= 0.0) or 2 * m > m_cap:
            return m
        m *= 2


class TestCriterion6:
    def test_cv_kde_estimator(self, synthetic_days, beta_fit):
        t0 = time.time()
        params = s.ModelParams(beta_fit.theta0_hat, beta_fit.alpha_hat, beta_fit.epsilon_hat)

        # (a) engineered exactly-Gaussian transition at m = 1e5
        dt = 10.0 / 1440.0
        rng = np.random.default_rng(123)
        dw = rng.standard_normal(10**5) * np.sqrt(dt)
        from solarsde.kde import CoupledSample

        sample = CoupledSample(v=dw.copy(), z=0.9 * dw)
        v_obs, h = 0.05, 0.05 * np.sqrt(dt)
        truth = float(_gauss_pdf(v_obs, 0.0, np.sqrt(dt)))
        est = s.cv_kde_point(sample, v_obs, 0.0, 0.9 * np.sqrt(dt), h)
        contrib = _gauss_pdf(sample.v, v_obs, h) - _gauss_pdf(sample.z, v_obs, h)
        se = float(np.std(contrib, ddof=1)) / np.sqrt(len(dw))
        gauss_ok = abs(est - truth) < 3.0 * se + 0.01 * truth

        # (b) variance reduction on 100 calibrated-parameter transitions, m = 200
        ts = StackedDays(synthetic_days[:30]).transitions(params)
        pick = np.linspace(0, len(ts) - 1, 100).astype(int)
        wins = 0
        usable = 0
        for idx in pick:
            rec = ts[int(idx)]
            sigma_m = s.match_diffusion_level(rec.v_prev, rec.r_left, params.alpha_theta0)
            if sigma_m <= 0:
                continue
            mu_z, sigma_z = s.gaussian_step_params(rec, params, sigma_m)
            rho_ref = float(_gauss_pdf(rec.v_next, mu_z, sigma_z))
            zsc = (rec.v_next - mu_z) / sigma_z
            c1 = 0.25 * (rho_ref * (zsc * zsc - 1.0) / sigma_z**2) ** 2
            c2c = rho_ref / (2.0 * np.sqrt(np.pi))
            h = (c2c / (4.0 * 200 * c1)) ** 0.2 if c1 > 0 else 1.06 * sigma_z * 200**-0.2
            cv_vals, crude_vals = [], []
            for rep in range(30):
                sample = s.simulate_coupled(rec, params, 200, seed=1000 + rep)
                cv_vals.append(s.cv_kde_point(sample, rec.v_next, mu_z, sigma_z, h))
                crude_vals.append(float(np.mean(_gauss_pdf(sample.v, rec.v_next, h))))
            usable += 1
            if np.var(cv_vals) < np.var(crude_vals):
                wins += 1
        var_ok = usable >= 90 and wins / usable >= 0.95

        # (c) adaptive loop beats the crude baseline under the same bound on a
        # matched transition (one with a nonzero conditioning error, where the
        # zero-companion coupling constant is large)
        matched = ts.select(
            (ts.ratio_left > 0.2)
            & (ts.ratio_left < 0.8)
            & (np.abs(ts.v_prev) > 0.25)
            & (np.abs(ts.v_prev) < 0.4)
        )
        rec = matched[0]
        cv_est = s.adaptive_density(rec, params, tol=0.1, m0=50, seed=0)
        m_crude = crude_kde_required_m(rec, params, tol=0.1, m0=50, seed=0)
        adaptive_ok = cv_est.converged and cv_est.m_used < m_crude
        elapsed = time.time() - t0
        ok = gauss_ok and var_ok and adaptive_ok and elapsed < 120.0
        report(
            6,
            "CV-KDE estimator accuracy, variance reduction, sample efficiency",
            ok,
            f"|est-true|={abs(est - truth):.4f} vs 3SE={3 * se:.4f}; wins {wins}/{usable}; "
            f"CV m={cv_est.m_used} vs crude m={m_crude}; {elapsed:.0f} s",
        )


class TestCriterion7:
    def test_bandwidth_law(self):
        c1, c2, m = 0.8, 0.03, 400
        h = s.optimal_bandwidth(m, c1, c2)

        def g(hh):
            return c1 * hh**4 + c2 / (m * hh**3.5)

        min_ok = g(h) <= g(h * 1.01) and g(h) <= g(h * 0.99)
        scale = s.optimal_bandwidth(2 * m, c1, c2) / h
        scale_ok = abs(scale - 2.0 ** (-2.0 / 15.0)) <= 1e-12
        report(
            7,
            "bandwidth minimizer and doubling law",
            min_ok and scale_ok,
            f"h*={h:.5f}, ratio err {abs(scale - 2 ** (-2 / 15)):.1e}",
        )


class TestCriterion8:
    def test_simulation_invariants(self, flat_day):
        t0 = time.time()
        params = s.ModelParams(theta0=25.0, alpha=0.10, epsilon=0.07)
        bundle = s.simulate_production_paths(flat_day, params, 10_000, seed=4)
        in_range = bool(np.all(bundle.x >= 0.0) and np.all(bundle.x <= flat_day.h[None, :]))
        mean = bundle.x.mean(axis=0)
        se = bundle.x.std(axis=0, ddof=1) / np.sqrt(bundle.n_paths)
        gap = np.abs(mean - flat_day.p)[1:]
        unbiased = bool(np.all(gap < 4.0 * se[1:]))
        elapsed = time.time() - t0
        report(
            8,
            "projected-Euler range and unbiasedness",
            in_range and unbiased and elapsed < 60.0,
            f"max|mean-p|/4SE={float(np.max(gap / (4 * se[1:]))):.2f}, {elapsed:.1f} s",
        )


class TestCriterion9:
    def test_band_coverage(self, flat_day, beta_fit):
        params = s.ModelParams(beta_fit.theta0_hat, beta_fit.alpha_hat, beta_fit.epsilon_hat)
        bundle = s.simulate_production_paths(flat_day, params, 10_000, seed=12)
        band = s.confidence_bands(flat_day, params, BETA, levels=(0.5, 0.9, 0.99))
        inside = np.mean(
            (bundle.x >= band.lower_x[0.9][None, :] - 1e-12)
            & (bundle.x <= band.upper_x[0.9][None, :] + 1e-12),
            axis=0,
        )
        coverage = float(inside.mean())
        nested = True
        for low, high in [(0.5, 0.9), (0.9, 0.99)]:
            nested &= bool(np.all(band.lower_x[high] <= band.lower_x[low] + 1e-12))
            nested &= bool(np.all(band.upper_x[low] <= band.upper_x[high] + 1e-12))
        ok = 0.85 <= coverage <= 0.95 and nested
        report(9, "90% band empirical coverage and nesting", ok, f"coverage {coverage:.3f}")


class TestCriterion10:
    def test_exact_loglik_machinery(self, small_synthetic_days):
        one = s.model_loglik(small_synthetic_days, TRUE_PARAMS, seed=9)
        two = s.model_loglik(small_synthetic_days * 2, TRUE_PARAMS, seed=9)
        purity = abs(two.loglik - 2.0 * one.loglik)
        rev = s.model_loglik(small_synthetic_days[::-1], TRUE_PARAMS, seed=9)
        perm_ok = dict(rev.per_day) == dict(one.per_day)
        ci_ok = one.ci_lower < one.loglik < one.ci_upper and one.ci_upper > one.ci_lower
        ok = purity < 1e-9 and perm_ok and ci_ok
        report(
            10,
            "exact-model log-likelihood: doubling, CI, permutation invariance",
            ok,
            f"|double-gap|={purity:.1e}, CI width {one.ci_upper - one.ci_lower:.1f}",
        )
