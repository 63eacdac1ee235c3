"""Two-stage threshold calibration and diffusion-parameter fitting.

Stage one fits (theta0, alpha) on the inner transitions by a derivative-free
simplex on log-parameters; stage two fits the threshold on the boundary
transitions by golden-section search. The stages alternate (re-partitioning
and restarting from the closed-form guesses each round) until the threshold
estimate stabilizes, then a final fit on all transitions produces the
reported parameter point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .prep import ModelParams, StackedDays, TransitionSet, inner_mask
from .surrogates import SurrogateKind, loglik_terms

log = logging.getLogger(__name__)

EPSILON_BRACKET = (1e-3, 0.25)
EPSILON_CONVERGENCE = 1e-3
GOLDEN_TOL = 1e-4
SIMPLEX_DIAMETER_TOL = 1e-6
SIMPLEX_MAX_EVALS = 500
MAX_ITERATIONS = 50

FALLBACK_THETA0 = 10.0
FALLBACK_THETA0_ALPHA = 1.0


@dataclass
class FitResult:
    """Outcome of one (theta0, alpha) optimization."""

    theta0: float
    alpha: float
    neg_loglik: float
    n_evaluations: int
    converged: bool


@dataclass
class CalibrationReport:
    """Full calibration outcome plus the iteration trace."""

    epsilon_hat: float
    theta0_hat: float
    alpha_hat: float
    neg_loglik: float
    kind: str
    epsilon_trace: list[float] = field(default_factory=list)
    abs_delta_trace: list[float] = field(default_factory=list)
    inner_pct: float = 100.0
    boundary_pct: float = 0.0
    n_evaluations: int = 0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "epsilon_hat": self.epsilon_hat,
            "theta0_hat": self.theta0_hat,
            "alpha_hat": self.alpha_hat,
            "neg_loglik": self.neg_loglik,
            "kind": self.kind,
            "epsilon_trace": self.epsilon_trace,
            "abs_delta_trace": self.abs_delta_trace,
            "inner_pct": self.inner_pct,
            "boundary_pct": self.boundary_pct,
            "n_evaluations": self.n_evaluations,
            "converged": self.converged,
        }


def initial_theta0(transitions: TransitionSet) -> float:
    """Closed-form regression guess for the baseline reversion rate.

    theta0* = sum v_prev (v_prev - v_next) / (dt * sum v_prev^2).
    """
    v0, v1 = transitions.v_prev, transitions.v_next
    denom = transitions.dt * float(np.sum(v0 * v0))
    if denom <= 0.0:
        log.warning("initial theta0 guess: zero denominator, using %.1f", FALLBACK_THETA0)
        return FALLBACK_THETA0
    return float(np.sum(v0 * (v0 - v1))) / denom


def initial_theta0_alpha(transitions: TransitionSet) -> float:
    """Quadratic-variation guess for the diffusion level theta0 * alpha.

    (theta0 alpha)* = sum (v_next - v_prev)^2
                      / (2 dt * sum (v_prev + r)(1 - v_prev - r)).
    """
    v0, v1, r = transitions.v_prev, transitions.v_next, transitions.r_left
    y = v0 + r
    denom = 2.0 * transitions.dt * float(np.sum(y * (1.0 - y)))
    if denom <= 0.0:
        log.warning(
            "initial theta0*alpha guess: zero denominator, using %.1f", FALLBACK_THETA0_ALPHA
        )
        return FALLBACK_THETA0_ALPHA
    return float(np.sum((v1 - v0) ** 2)) / denom


def _as_stacked(days) -> StackedDays:
    if isinstance(days, StackedDays):
        return days
    return StackedDays([getattr(d, "day", d) for d in days])


def _subset_mask(stacked: StackedDays, subset: str, partition_epsilon: float) -> np.ndarray | None:
    if subset == "all":
        return None
    ratio = stacked.ratio_raw[stacked.left]
    inner = (ratio > partition_epsilon) & (ratio < 1.0 - partition_epsilon)
    return inner if subset == "inner" else ~inner


def _neg_loglik(
    stacked: StackedDays,
    params: ModelParams,
    kind: SurrogateKind,
    mask: np.ndarray | None,
) -> float:
    transitions = stacked.transitions(params)
    if mask is not None:
        transitions = transitions.select(mask)
    return -float(np.sum(loglik_terms(transitions, params, kind)))


def _minimize_simplex(fn, x0, max_evals: int = SIMPLEX_MAX_EVALS):
    """Nelder-Mead until the simplex diameter drops below 1e-6 (or eval cap)."""
    res = optimize.minimize(
        fn,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={
            "xatol": SIMPLEX_DIAMETER_TOL,
            "fatol": np.inf,
            "maxfev": max_evals,
            "initial_simplex": None,
        },
    )
    return res.x, float(res.fun), int(res.nfev), bool(res.success)


def optimize_theta_alpha(
    days,
    epsilon: float,
    kind: SurrogateKind,
    initial: tuple[float, float],
    subset: str = "all",
    partition_epsilon: float | None = None,
    max_evals: int = SIMPLEX_MAX_EVALS,
) -> FitResult:
    """Minimize the negative surrogate log-likelihood over (theta0, alpha).

    The search runs on (log theta0, log alpha), which enforces positivity
    without explicit box constraints; the reversion-rate grid is rebuilt from
    the candidate parameters at every evaluation. subset selects which
    transitions enter the objective ("all", "inner" or "boundary", the last
    two partitioned at partition_epsilon, defaulting to epsilon).
    """
    stacked = _as_stacked(days)
    mask = _subset_mask(stacked, subset, partition_epsilon if partition_epsilon is not None else epsilon)
    th0 = min(max(initial[0], 1e-3), 1e3)
    al0 = min(max(initial[1], 1e-4), 1e2)

    def objective(x):
        params = ModelParams(theta0=math.exp(x[0]), alpha=math.exp(x[1]), epsilon=epsilon)
        return _neg_loglik(stacked, params, kind, mask)

    x, fval, nfev, ok = _minimize_simplex(
        objective, [math.log(th0), math.log(al0)], max_evals=max_evals
    )
    if not ok:
        log.warning("theta/alpha optimization hit the evaluation cap (%d)", nfev)
    return FitResult(
        theta0=math.exp(x[0]),
        alpha=math.exp(x[1]),
        neg_loglik=fval,
        n_evaluations=nfev,
        converged=ok,
    )


def _golden_section(fn, lo: float, hi: float, tol: float = GOLDEN_TOL):
    """Deterministic golden-section minimizer on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    nfev = 2
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
        nfev += 1
    return 0.5 * (a + b), nfev


def optimize_epsilon(
    days,
    theta0: float,
    alpha: float,
    kind: SurrogateKind,
    bracket: tuple[float, float] = EPSILON_BRACKET,
    partition_epsilon: float | None = None,
    tol: float = GOLDEN_TOL,
) -> tuple[float, int]:
    """Golden-section search for the threshold on the boundary transitions.

    Both the forecast thresholding and the surrogate support use the
    candidate epsilon; the boundary membership itself is frozen at
    partition_epsilon. Returns (epsilon, evaluations); an empty boundary set
    returns the partition epsilon unchanged with a warning.
    """
    if partition_epsilon is None:
        raise ValueError("partition_epsilon is required (the boundary set is frozen at it)")
    stacked = _as_stacked(days)
    eps_part = partition_epsilon
    mask = _subset_mask(stacked, "boundary", eps_part)
    if not np.any(mask):
        log.warning("empty boundary set at partition epsilon %.4f; epsilon unchanged", eps_part)
        return eps_part, 0

    def objective(eps):
        params = ModelParams(theta0=theta0, alpha=alpha, epsilon=eps)
        return _neg_loglik(stacked, params, kind, mask)

    return _golden_section(objective, bracket[0], bracket[1], tol=tol)


def calibrate_epsilon(
    days,
    epsilon_init: float,
    kind: SurrogateKind,
    max_iterations: int = MAX_ITERATIONS,
) -> CalibrationReport:
    """Iterative two-stage threshold calibration.

    Each round partitions the transitions at the current epsilon, restarts
    (theta0, alpha) from the closed-form guesses on the inner set, optimizes
    them there, then optimizes epsilon on the boundary set. Rounds repeat
    until consecutive epsilon estimates differ by at most 1e-3 (cap 50).
    """
    if not 0.0 < epsilon_init <= EPSILON_BRACKET[1]:
        raise ValueError(f"epsilon_init must lie in (0, {EPSILON_BRACKET[1]}]")
    stacked = _as_stacked(days)
    eps = float(epsilon_init)
    trace = [eps]
    deltas: list[float] = []
    total_evals = 0
    converged = False
    fit = None
    for _ in range(max_iterations):
        probe = ModelParams(theta0=1.0, alpha=1.0, epsilon=eps)
        transitions = stacked.transitions(probe)
        inner = transitions.select(inner_mask(transitions, eps))
        th0 = initial_theta0(inner)
        t0a = initial_theta0_alpha(inner)
        alpha0 = t0a / th0 if th0 > 0 else FALLBACK_THETA0_ALPHA / FALLBACK_THETA0
        fit = optimize_theta_alpha(
            stacked, eps, kind, (th0, alpha0), subset="inner", partition_epsilon=eps
        )
        total_evals += fit.n_evaluations
        eps_new, gevals = optimize_epsilon(
            stacked, fit.theta0, fit.alpha, kind, partition_epsilon=eps
        )
        total_evals += gevals
        delta = abs(eps_new - eps)
        trace.append(eps_new)
        deltas.append(delta)
        eps = eps_new
        if delta <= EPSILON_CONVERGENCE:
            converged = True
            break
    if not converged:
        log.warning("two-stage calibration hit the %d-iteration cap", max_iterations)
    ratio = stacked.ratio_raw[stacked.left]
    inner_pct = 100.0 * float(np.mean((ratio > eps) & (ratio < 1.0 - eps)))
    return CalibrationReport(
        epsilon_hat=eps,
        theta0_hat=fit.theta0,
        alpha_hat=fit.alpha,
        neg_loglik=fit.neg_loglik,
        kind=kind.value,
        epsilon_trace=trace,
        abs_delta_trace=deltas,
        inner_pct=inner_pct,
        boundary_pct=100.0 - inner_pct,
        n_evaluations=total_evals,
        converged=converged,
    )


def finalize_fit(days, epsilon_hat: float, kind: SurrogateKind) -> CalibrationReport:
    """Final (theta0, alpha) fit on all transitions at the calibrated threshold.

    Restarts from the closed-form guesses recomputed on the whole sample with
    the forecast re-thresholded at epsilon_hat.
    """
    stacked = _as_stacked(days)
    probe = ModelParams(theta0=1.0, alpha=1.0, epsilon=epsilon_hat)
    transitions = stacked.transitions(probe)
    th0 = initial_theta0(transitions)
    t0a = initial_theta0_alpha(transitions)
    alpha0 = t0a / th0 if th0 > 0 else FALLBACK_THETA0_ALPHA / FALLBACK_THETA0
    fit = optimize_theta_alpha(stacked, epsilon_hat, kind, (th0, alpha0), subset="all")
    ratio = stacked.ratio_raw[stacked.left]
    inner_pct = 100.0 * float(np.mean((ratio > epsilon_hat) & (ratio < 1.0 - epsilon_hat)))
    return CalibrationReport(
        epsilon_hat=epsilon_hat,
        theta0_hat=fit.theta0,
        alpha_hat=fit.alpha,
        neg_loglik=fit.neg_loglik,
        kind=kind.value,
        inner_pct=inner_pct,
        boundary_pct=100.0 - inner_pct,
        n_evaluations=fit.n_evaluations,
        converged=fit.converged,
    )


def calibrate_pipeline(
    days,
    epsilon_init: float,
    kind: SurrogateKind,
    max_iterations: int = MAX_ITERATIONS,
) -> CalibrationReport:
    """Two-stage threshold calibration followed by the final all-data fit."""
    stage = calibrate_epsilon(days, epsilon_init, kind, max_iterations=max_iterations)
    final = finalize_fit(days, stage.epsilon_hat, kind)
    final.epsilon_trace = stage.epsilon_trace
    final.abs_delta_trace = stage.abs_delta_trace
    final.n_evaluations += stage.n_evaluations
    final.converged = final.converged and stage.converged
    return final


def profile_epsilon(
    days,
    theta0: float,
    alpha: float,
    kind: SurrogateKind,
    epsilon_grid,
    partition_epsilon: float,
) -> np.ndarray:
    """Boundary-data negative log-likelihood along a threshold grid.

    Matches the stage-two objective: membership frozen at partition_epsilon,
    thresholding and support at each grid value.
    """
    stacked = _as_stacked(days)
    mask = _subset_mask(stacked, "boundary", partition_epsilon)
    out = np.empty(len(epsilon_grid))
    for i, eps in enumerate(epsilon_grid):
        params = ModelParams(theta0=theta0, alpha=alpha, epsilon=float(eps))
        out[i] = _neg_loglik(stacked, params, kind, mask)
    return out


def level_sets(
    days,
    epsilon_hat: float,
    kind: SurrogateKind,
    theta0_grid,
    alpha_grid,
) -> tuple[np.ndarray, tuple[int, int]]:
    """Negative log-likelihood surface over a (theta0, alpha) grid, all data.

    Returns the matrix (rows follow theta0_grid, columns alpha_grid) and the
    index pair of the grid argmin.
    """
    stacked = _as_stacked(days)
    matrix = np.empty((len(theta0_grid), len(alpha_grid)))
    for i, th in enumerate(theta0_grid):
        for j, al in enumerate(alpha_grid):
            params = ModelParams(theta0=float(th), alpha=float(al), epsilon=epsilon_hat)
            matrix[i, j] = _neg_loglik(stacked, params, kind, None)
    argmin = np.unravel_index(int(np.argmin(matrix)), matrix.shape)
    return matrix, (int(argmin[0]), int(argmin[1]))
