"""Forecast-error uncertainty quantification under a time-varying upper bound.

A constrained Jacobi-type SDE is calibrated to production/forecast data,
with the clear-sky maximum as the bound: surrogate likelihoods drive the
parameter and threshold calibration, a control-variate kernel density
estimator evaluates the exact-model likelihood, and projected-Euler
simulation plus moment-based quantile bands quantify the pathwise
uncertainty.
"""

from .bands import BandSeries, confidence_bands, error_transition_kde, mae_10min, mae_daily
from .calibrate import (
    CalibrationReport,
    FitResult,
    calibrate_epsilon,
    calibrate_pipeline,
    finalize_fit,
    initial_theta0,
    initial_theta0_alpha,
    level_sets,
    optimize_epsilon,
    optimize_theta_alpha,
    profile_epsilon,
)
from .clearsky import (
    BoundSeries,
    SolarAngles,
    SolarSite,
    air_mass,
    calibrate_panel_area,
    clear_sky_irradiance,
    declination,
    elevation,
    equation_of_time,
    hour_angle,
    irradiance,
    solar_angles,
    upper_bound_series,
)
from .errors import ConfigError, ConvergenceError, DataError, InfeasibleMomentsError, SolarSdeError
from .ingest import (
    DataSplit,
    DaySeries,
    RawSeries,
    exclude_days,
    load_forecast,
    load_production,
    normalize_and_align,
    read_aligned_csv,
    split_alternating,
    write_aligned_csv,
)
from .kde import (
    CoupledSample,
    DensityEstimate,
    LoglikResult,
    adaptive_density,
    cv_kde_point,
    gaussian_step_params,
    model_loglik,
    mse_constants,
    optimal_bandwidth,
    simulate_coupled,
)
from .moments import (
    MomentPair,
    StepCoefficients,
    error_moment_step,
    gaussian_moment_step,
    match_diffusion_level,
)
from .prep import (
    ModelParams,
    PreparedDay,
    TransitionRecord,
    TransitionSet,
    check_boundary_avoidance,
    mean_reversion_rate,
    partition_inner_boundary,
    prepare_day,
    threshold_forecast,
)
from .simulate import PathBundle, simulate_error_days, simulate_production_paths
from .surrogates import (
    BetaShapes,
    SurrogateKind,
    beta_logpdf,
    beta_shapes,
    surrogate_cdf,
    surrogate_loglik,
    surrogate_quantile,
    truncnorm_logpdf,
)

__version__ = "0.1.0"
