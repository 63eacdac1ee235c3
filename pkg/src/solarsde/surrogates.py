"""Beta and truncated-normal surrogate transition densities on [-1+eps, 1-eps].

The surrogate family stands in for the intractable exact transition density
during calibration: propagated conditional moments are mapped to family
parameters, and the approximate sample log-likelihood is the sum of
surrogate log-densities at the observed errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InfeasibleMomentsError
from .moments import DEFAULT_SUBSTEPS, MomentPair, StepCoefficients, error_moment_step
from .prep import PENALTY_NEG_LOGLIK, ModelParams, StackedDays, TransitionSet

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class SurrogateKind(enum.Enum):
    BETA = "beta"
    TRUNCATED_NORMAL = "truncnorm"

    @classmethod
    def parse(cls, name: str) -> "SurrogateKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown surrogate {name!r}; use 'beta' or 'truncnorm'")


@dataclass(frozen=True)
class BetaShapes:
    """Shape parameters of the moment-matched scaled beta."""

    xi1: float
    xi2: float
    epsilon: float


def _beta_shape_arrays(mu, sigma2, epsilon: float):
    """Vectorized moment-to-shape link with a feasibility mask.

    Feasible iff |mu| < 1-eps and 0 < sigma2 < (1-eps)^2 - mu^2; infeasible
    entries get placeholder shapes of 1.
    """
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    half = 1.0 - epsilon
    feasible = (np.abs(mu) < half) & (sigma2 > 0) & (sigma2 < half * half - mu * mu)
    s2 = np.where(feasible, sigma2, 1.0)
    common = (mu * mu + sigma2 - half * half) / (2.0 * half * s2)
    xi1 = np.where(feasible, -(mu + half) * common, 1.0)
    xi2 = np.where(feasible, (mu - half) * common, 1.0)
    return xi1, xi2, feasible


def beta_shapes(mu: float, sigma2: float, epsilon: float) -> BetaShapes:
    """Moment-matched shapes; raises when the moments leave the family."""
    xi1, xi2, feasible = _beta_shape_arrays(mu, sigma2, epsilon)
    if not feasible:
        raise InfeasibleMomentsError(
            f"moments (mu={mu}, sigma2={sigma2}) infeasible for beta on "
            f"[-1+{epsilon}, 1-{epsilon}]"
        )
    return BetaShapes(xi1=float(xi1), xi2=float(xi2), epsilon=epsilon)


def beta_mean_variance(shapes: BetaShapes) -> tuple[float, float]:
    """Mean and variance of the scaled beta (round-trip check of the link)."""
    half = 1.0 - shapes.epsilon
    s = shapes.xi1 + shapes.xi2
    mean_unit = shapes.xi1 / s
    var_unit = shapes.xi1 * shapes.xi2 / (s * s * (s + 1.0))
    return -half + 2.0 * half * mean_unit, (2.0 * half) ** 2 * var_unit


def _beta_logpdf_arrays(v, xi1, xi2, epsilon: float):
    v = np.asarray(v, dtype=float)
    half = 1.0 - epsilon
    u = (v + half) / (2.0 * half)
    inside = (u > 0.0) & (u < 1.0)
    u_safe = np.where(inside, u, 0.5)
    lp = (
        -np.log(2.0 * half)
        - special.betaln(xi1, xi2)
        + (xi1 - 1.0) * np.log(u_safe)
        + (xi2 - 1.0) * np.log1p(-u_safe)
    )
    return np.where(inside, lp, -np.inf)


def beta_logpdf(v: float, shapes: BetaShapes) -> float:
    """Log-density of the scaled beta at v; -inf outside the open support."""
    return float(_beta_logpdf_arrays(v, shapes.xi1, shapes.xi2, shapes.epsilon))


def _log_gauss_mass(a, b):
    """log(Phi(b) - Phi(a)) for a <= b, stable in both tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        # reflect so the interval sits in the left tail, then chain log_ndtr
        lo = np.where(b <= 0.0, a, -b)
        hi = np.where(b <= 0.0, b, -a)
        case_tail = (b <= 0.0) | (a >= 0.0)
        lh = special.log_ndtr(hi)
        ll = special.log_ndtr(lo)
        tail = lh + np.log1p(-np.exp(np.minimum(ll - lh, 0.0)))
        straddle = np.log(special.ndtr(b) - special.ndtr(a))
        out = np.where(case_tail, tail, straddle)
    return out


def _truncnorm_logpdf_arrays(v, mu, sigma, epsilon: float):
    v = np.asarray(v, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    half = 1.0 - epsilon
    z = (v - mu) / sigma
    log_mass = _log_gauss_mass((-half - mu) / sigma, (half - mu) / sigma)
    lp = -np.log(sigma) - LOG_SQRT_2PI - 0.5 * z * z - log_mass
    return np.where((v >= -half) & (v <= half), lp, -np.inf)


def truncnorm_logpdf(v: float, mu: float, sigma: float, epsilon: float) -> float:
    """Log-density of the normal truncated to [-1+eps, 1-eps]; never NaN."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(_truncnorm_logpdf_arrays(v, mu, sigma, epsilon))


def _beta_quantile_bisect(q: float, xi1: float, xi2: float, epsilon: float) -> float:
    half = 1.0 - epsilon
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if special.betainc(xi1, xi2, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10:
            break
    return -half + 2.0 * half * 0.5 * (lo + hi)


def surrogate_quantile(
    q: float, kind: SurrogateKind, mu: float, sigma2: float, epsilon: float
) -> float:
    """Quantile of the moment-matched surrogate on [-1+eps, 1-eps].

    Beta quantiles invert the regularized incomplete beta CDF by bracketed
    bisection (width 1e-10, 200-iteration cap); truncated-normal quantiles
    use the closed inverse-CDF composition.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    if kind is SurrogateKind.BETA:
        shapes = beta_shapes(mu, sigma2, epsilon)
        return _beta_quantile_bisect(q, shapes.xi1, shapes.xi2, epsilon)
    half = 1.0 - epsilon
    sigma = float(np.sqrt(sigma2))
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = (-half - mu) / sigma
    b = (half - mu) / sigma
    fa, fb = special.ndtr(a), special.ndtr(b)
    return mu + sigma * float(special.ndtri(fa + q * (fb - fa)))


def surrogate_cdf(
    v: float, kind: SurrogateKind, mu: float, sigma2: float, epsilon: float
) -> float:
    """CDF of the surrogate at v (consistency partner of surrogate_quantile)."""
    half = 1.0 - epsilon
    if kind is SurrogateKind.BETA:
        shapes = beta_shapes(mu, sigma2, epsilon)
        u = (v + half) / (2.0 * half)
        return float(special.betainc(shapes.xi1, shapes.xi2, np.clip(u, 0.0, 1.0)))
    sigma = float(np.sqrt(sigma2))
    a = (-half - mu) / sigma
    b = (half - mu) / sigma
    fa, fb = special.ndtr(a), special.ndtr(b)
    return float((special.ndtr((v - mu) / sigma) - fa) / (fb - fa))


def loglik_terms(
    transitions: TransitionSet,
    params: ModelParams,
    kind: SurrogateKind,
    n_sub: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """Per-transition surrogate log-density terms.

    Moments are propagated from each v_prev by the RK4 step; beta-infeasible
    transitions and nonfinite log-densities contribute the fixed -1e6 penalty
    so the calibration objective stays finite everywhere.
    """
    coeffs = StepCoefficients(
        theta_plus_left=transitions.theta_plus_left,
        theta_plus_right=transitions.theta_plus_right,
        r_left=transitions.r_left,
        r_right=transitions.r_right,
        alpha_theta0=params.alpha_theta0,
        dt=transitions.dt,
        n_sub=n_sub,
    )
    pair = error_moment_step(MomentPair.from_observation(transitions.v_prev), coeffs)
    mu = np.asarray(pair.mu, dtype=float)
    sigma2 = np.asarray(pair.sigma2, dtype=float)
    v_next = transitions.v_next
    if kind is SurrogateKind.BETA:
        xi1, xi2, feasible = _beta_shape_arrays(mu, sigma2, params.epsilon)
        lp = _beta_logpdf_arrays(v_next, xi1, xi2, params.epsilon)
        lp = np.where(feasible, lp, -PENALTY_NEG_LOGLIK)
    else:
        lp = _truncnorm_logpdf_arrays(v_next, mu, np.sqrt(sigma2), params.epsilon)
    return np.where(np.isfinite(lp), np.maximum(lp, -PENALTY_NEG_LOGLIK), -PENALTY_NEG_LOGLIK)


def surrogate_loglik(days, params: ModelParams, kind: SurrogateKind) -> float:
    """Approximate log-likelihood of all transitions of the given days.

    Accepts DaySeries or PreparedDay objects; days are (re)thresholded at
    params.epsilon. Terms are summed in day/grid order, so the result is
    deterministic and exactly additive over days.
    """
    plain = [getattr(d, "day", d) for d in days]
    transitions = StackedDays(plain).transitions(params)
    return float(np.sum(loglik_terms(transitions, params, kind)))
