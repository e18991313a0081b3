"""Exception types and process exit codes."""

# Exit codes used by the command-line tools.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4
EXIT_IO = 5


class MaxnlinvError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigError(MaxnlinvError):
    """Bad or missing configuration input."""

    exit_code = EXIT_CONFIG


class SolverError(MaxnlinvError):
    """A linear or nonlinear solve failed to reach its tolerance."""

    exit_code = EXIT_SOLVER


class ResonanceError(SolverError):
    """The linear operator is numerically singular at the requested frequency."""


class ContractionError(SolverError):
    """Fixed-point iteration is not contracting at the requested data size.

    Attributes:
        achievable_scale: largest boundary-data scaling for which the
            contraction test passed while backing off, or None.
    """

    def __init__(self, msg, achievable_scale=None):
        super().__init__(msg)
        self.achievable_scale = achievable_scale


class ValidationError(MaxnlinvError):
    """A model-assumption or cross-check failed."""

    exit_code = EXIT_VALIDATION


class DataFormatError(MaxnlinvError):
    """Malformed binary field file or report."""

    exit_code = EXIT_IO
