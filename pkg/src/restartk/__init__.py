"""Markov processes under Poissonian restarts.

Compose a continuous-time Markov kernel with an independent exponential
restart clock that redraws the state from a fixed distribution.  The package
evaluates the restarted transition law, its invariant measure and moments
analytically (certified quadrature plus closed forms), bounds the distance
to stationarity, and cross-validates everything against exact Monte Carlo
simulation and matrix-exponential references.
"""

from .analysis import (
    Divergent,
    ErgodicityReport,
    MomentReport,
    SweepReport,
    bm_stationary_moments,
    ergodicity_check,
    gbm_stationary_moment,
    max_finite_moment_order,
    modified_moment,
    moment_bound,
    small_lambda_sweep,
)
from .distributions import (
    DensityDistribution,
    FiniteSupport,
    PointMass,
    cdf_of,
    exponential,
    gaussian,
    gaussian_raw_moment,
    lognormal,
    nu_weights,
)
from .errors import (
    ConfigError,
    DomainError,
    EtaNotLessThanLambda,
    FubiniUnverified,
    MomentUnstable,
    QuadratureFailure,
    RestartkError,
    SingularityAtOrigin,
    TailBoundViolated,
    ToleranceNotMet,
    UnsupportedTarget,
    WindowTooNarrow,
)
from .kernels import MarkovKernel, RestartedProcess, RestartSpec, resolvent
from .processes import (
    BrownianWithDrift,
    FiniteCTMC,
    GeometricBrownian,
    ctmc_from_dict,
    ctmc_from_json,
)
from .quadrature import QuadratureResult, exp_weighted_integral, tail_truncation_point
from .simulation import (
    AgeReport,
    EnsembleResult,
    EstimatorReport,
    HistogramReport,
    PathConfig,
    PathSample,
    age_distribution_test,
    empirical_distribution,
    histogram_tv,
    monte_carlo_moment,
    run_ensemble,
    simulate_path,
    write_path_csv,
)
from .spaces import (
    FiniteSet,
    HalfLinePositive,
    Interval,
    RealLine,
    Subset,
    indicator,
    validate_target,
    whole_space,
)

__version__ = "0.1.0"

__all__ = [
    "AgeReport",
    "BrownianWithDrift",
    "ConfigError",
    "DensityDistribution",
    "Divergent",
    "DomainError",
    "EnsembleResult",
    "ErgodicityReport",
    "EstimatorReport",
    "EtaNotLessThanLambda",
    "FiniteCTMC",
    "FiniteSet",
    "FiniteSupport",
    "FubiniUnverified",
    "GeometricBrownian",
    "HalfLinePositive",
    "HistogramReport",
    "Interval",
    "MarkovKernel",
    "MomentReport",
    "MomentUnstable",
    "PathConfig",
    "PathSample",
    "PointMass",
    "QuadratureFailure",
    "QuadratureResult",
    "RealLine",
    "RestartSpec",
    "RestartedProcess",
    "RestartkError",
    "SingularityAtOrigin",
    "Subset",
    "SweepReport",
    "TailBoundViolated",
    "ToleranceNotMet",
    "UnsupportedTarget",
    "WindowTooNarrow",
    "age_distribution_test",
    "bm_stationary_moments",
    "cdf_of",
    "ctmc_from_dict",
    "ctmc_from_json",
    "empirical_distribution",
    "ergodicity_check",
    "exp_weighted_integral",
    "exponential",
    "gaussian",
    "gaussian_raw_moment",
    "gbm_stationary_moment",
    "histogram_tv",
    "indicator",
    "lognormal",
    "max_finite_moment_order",
    "modified_moment",
    "moment_bound",
    "monte_carlo_moment",
    "nu_weights",
    "resolvent",
    "run_ensemble",
    "simulate_path",
    "small_lambda_sweep",
    "tail_truncation_point",
    "validate_target",
    "whole_space",
    "write_path_csv",
]
