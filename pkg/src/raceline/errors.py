"""Exception types shared across the package.

The CLI maps these onto exit codes: input/validation problems exit with 2,
numerical/solver failures with 3.
"""


class RacelineError(Exception):
    """Base class for all package errors."""


class TrackFormatError(RacelineError):
    """A track file could not be parsed; message names the offending line."""


class ValidationError(RacelineError):
    """An input violated a documented precondition or invariant."""


class BoundsError(ValidationError):
    """A lateral offset left the half-width box."""


class InfeasibleStartError(RacelineError):
    """The requested initial speed cannot be driven at the path start."""


class DegeneratePathError(RacelineError):
    """The path contains a point with no positive feasible speed."""


class NumericalError(RacelineError):
    """A linear-algebra step failed beyond recoverable conditioning fixes."""


class InitializationError(RacelineError):
    """Too many infeasible samples while building the initial design."""
