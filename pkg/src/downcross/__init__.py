"""Deciding whether a one-dimensional diffusion eventually stops drawing down.

Given coefficients ``b`` (drift) and ``a`` (diffusion), this package
computes the scale function in log space, classifies transience, decides
whether depth-``c`` drawdowns almost surely stop occurring, computes the
law of the drawdown onset location, and validates all of it against
Monte Carlo simulation with exact Brownian-bridge extrema sampling.
"""

from importlib.metadata import PackageNotFoundError, version as _dist_version

from .errors import (
    ConfigError,
    DomainError,
    DowncrossError,
    IndeterminateTailError,
    InsufficientDataError,
    NotTransientError,
    OverflowPolicyError,
    PositivityError,
    QuadratureError,
)
from .model import (
    BesselDrift,
    ConstantDiffusion,
    ConstantDrift,
    DiffusionModel,
    LogLogLogDrift,
    SumDrift,
    TabulatedDrift,
    ZeroDrift,
    evaluate_diffusion,
    evaluate_drift,
    make_model,
    model_from_config,
)
from .scale import (
    INDETERMINATE,
    RECURRENT,
    TRANSIENT_TO_MINUS_INFINITY,
    TRANSIENT_TO_PLUS_INFINITY,
    ScaleFunction,
    TailDiagnosis,
    TransienceVerdict,
)
from .analysis import (
    DIVERGENT_IO_ONE,
    DOWNCROSSES_FOREVER,
    STOPS_DOWNCROSSING,
    SUMMABLE_IO_ZERO,
    HazardCurve,
    OnsetLaw,
    TailFit,
    Verdict,
    asymptotic_hazard_ratio,
    bessel_sequence_series,
    classify_downcrossing,
    ever_downcross_probability,
    ever_downcross_report,
    hazard,
    hazard_gateaux_derivative,
    hitting_probability,
    logdrift_downcross_sequence_check,
    make_onset_law,
    onset_survival,
    onset_survival_product_oracle,
    survival_grid,
)
from .pathsim import (
    CrossingEvent,
    PathConfig,
    PathResult,
    estimate_ever_downcross,
    first_onset,
    sample_onset_locations,
    scan_downcrossings,
    simulate_path,
    simulate_paths,
    split_seed,
)
from .stats import (
    EmpiricalSurvival,
    comparison_report,
    dkw_bound,
    ks_distance,
    wilson_interval,
)

try:
    __version__ = _dist_version("downcross")
except PackageNotFoundError:  # running from a source tree without install
    __version__ = "0.0.0"

__all__ = [
    "__version__",
    # errors
    "DowncrossError",
    "ConfigError",
    "DomainError",
    "PositivityError",
    "QuadratureError",
    "OverflowPolicyError",
    "NotTransientError",
    "IndeterminateTailError",
    "InsufficientDataError",
    # model
    "DiffusionModel",
    "make_model",
    "model_from_config",
    "evaluate_drift",
    "evaluate_diffusion",
    "ZeroDrift",
    "ConstantDrift",
    "LogLogLogDrift",
    "BesselDrift",
    "TabulatedDrift",
    "SumDrift",
    "ConstantDiffusion",
    # scale
    "ScaleFunction",
    "TransienceVerdict",
    "TailDiagnosis",
    "TRANSIENT_TO_PLUS_INFINITY",
    "TRANSIENT_TO_MINUS_INFINITY",
    "RECURRENT",
    "INDETERMINATE",
    # analysis
    "HazardCurve",
    "OnsetLaw",
    "TailFit",
    "Verdict",
    "hazard",
    "make_onset_law",
    "onset_survival",
    "survival_grid",
    "onset_survival_product_oracle",
    "hitting_probability",
    "ever_downcross_probability",
    "ever_downcross_report",
    "classify_downcrossing",
    "hazard_gateaux_derivative",
    "bessel_sequence_series",
    "logdrift_downcross_sequence_check",
    "asymptotic_hazard_ratio",
    "STOPS_DOWNCROSSING",
    "DOWNCROSSES_FOREVER",
    "SUMMABLE_IO_ZERO",
    "DIVERGENT_IO_ONE",
    # pathsim
    "PathConfig",
    "CrossingEvent",
    "PathResult",
    "split_seed",
    "first_onset",
    "scan_downcrossings",
    "simulate_path",
    "simulate_paths",
    "sample_onset_locations",
    "estimate_ever_downcross",
    # stats
    "EmpiricalSurvival",
    "ks_distance",
    "dkw_bound",
    "wilson_interval",
    "comparison_report",
]
