"""Exact-model likelihood via the control-variate kernel density estimator.

For one transition, shows the coupled ensemble, the moment-matched Gaussian
companion, and the adaptive certificate; then compares the whole-sample
exact-model log-likelihood (with its CLT interval) at the beta-optimal and
truncated-normal-optimal parameter points, the model-selection use the
machinery exists for.

Run demos/02_synthetic_season.py first (needs demo_aligned.csv).
"""

import numpy as np

import solarsde as s
from solarsde.ingest import read_aligned_csv
from solarsde.prep import StackedDays

days = read_aligned_csv("demo_aligned.csv")

print("== calibrate both surrogate families (Data Set 1 of the split) ==")
set1 = s.split_alternating(days).set1
beta_fit = s.calibrate_pipeline(set1, 0.07, s.SurrogateKind.BETA)
tn_fit = s.calibrate_pipeline(set1, 0.07, s.SurrogateKind.TRUNCATED_NORMAL)
p_beta = s.ModelParams(beta_fit.theta0_hat, beta_fit.alpha_hat, beta_fit.epsilon_hat)
p_tn = s.ModelParams(tn_fit.theta0_hat, tn_fit.alpha_hat, tn_fit.epsilon_hat)
print(f"beta optimum:      theta0={p_beta.theta0:6.2f} alpha={p_beta.alpha:.4f} eps={p_beta.epsilon:.4f}")
print(f"truncnorm optimum: theta0={p_tn.theta0:6.2f} alpha={p_tn.alpha:.4f} eps={p_tn.epsilon:.4f}")

print("\n== one transition under the microscope ==")
ts = StackedDays(set1).transitions(p_beta)
rec = ts[len(ts) // 2]
sigma = s.match_diffusion_level(rec.v_prev, rec.r_left, p_beta.alpha_theta0)
mu_z, sigma_z = s.gaussian_step_params(rec, p_beta, sigma)
print(f"day {rec.day_id} index {rec.index}: v_prev={rec.v_prev:+.4f} -> v_next={rec.v_next:+.4f}")
print(f"matched diffusion level {sigma:.4f}; companion law N({mu_z:+.5f}, {sigma_z:.5f}^2)")
est = s.adaptive_density(rec, p_beta, tol=0.1, m0=50, seed=1)
print(f"adaptive estimate: rho_hat={est.rho_hat:.4f} with m={est.m_used}, "
      f"bandwidth={est.bandwidth:.3g}, relative MSE bound={est.relative_mse:.3g}")

print("\n== exact-model log-likelihood on the held-out Data Set 2 ==")
set2 = s.split_alternating(days).set2
for label, point in (("beta-optimal", p_beta), ("truncnorm-optimal", p_tn)):
    res = s.model_loglik(set2, point, tol=0.1, seed=7)
    print(f"{label:18s}: loglik={res.loglik:9.1f}  95% CI=[{res.ci_lower:9.1f}, {res.ci_upper:9.1f}] "
          f"floored={res.floored_count} nonconverged={res.nonconverged_count}")
print("\nhigher exact-model log-likelihood identifies the better-fitting proxy")
