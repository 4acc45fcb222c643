"""Time-optimal racing lines via GP Bayesian optimization over lateral offsets."""

from .bayesopt import (
    LapTimeEvaluator,
    OptConfig,
    OptState,
    RunResult,
    expected_improvement,
    initialize,
    maximize_acquisition,
    noisy_expected_improvement,
    run,
    step,
)
from .baseline import ComparisonReport, ConvergenceCurve, compare, random_search
from .errors import (
    BoundsError,
    DegeneratePathError,
    InfeasibleStartError,
    InitializationError,
    NumericalError,
    RacelineError,
    TrackFormatError,
    ValidationError,
)
from .gp import FittedGP, GPDataset, Hyperparams, fit, kernel_eval, predict
from .speed import (
    SpeedProfile,
    VehicleParams,
    gg_points,
    max_cornering_speed,
    solve_speed_profile,
    write_profile_csv,
)
from .track import (
    CenterLine,
    NodeSet,
    SampledPath,
    fit_and_resample,
    load_track,
    offsets_to_waypoints,
    select_nodes,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsError",
    "CenterLine",
    "ComparisonReport",
    "ConvergenceCurve",
    "DegeneratePathError",
    "FittedGP",
    "GPDataset",
    "Hyperparams",
    "InfeasibleStartError",
    "InitializationError",
    "LapTimeEvaluator",
    "NodeSet",
    "NumericalError",
    "OptConfig",
    "OptState",
    "RacelineError",
    "RunResult",
    "SampledPath",
    "SpeedProfile",
    "TrackFormatError",
    "ValidationError",
    "VehicleParams",
    "compare",
    "expected_improvement",
    "fit",
    "fit_and_resample",
    "gg_points",
    "initialize",
    "kernel_eval",
    "load_track",
    "max_cornering_speed",
    "maximize_acquisition",
    "noisy_expected_improvement",
    "offsets_to_waypoints",
    "predict",
    "random_search",
    "run",
    "select_nodes",
    "solve_speed_profile",
    "step",
    "write_profile_csv",
]
