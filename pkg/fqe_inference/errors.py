"""Exception hierarchy shared by all fqe-inference modules.

Each class carries the process exit status the command-line front end uses
when the error escapes a subcommand.
"""


class FqeInferenceError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 1


class ConfigurationError(FqeInferenceError, ValueError):
    """Invalid inputs: dimension mismatch, malformed probabilities, bad options or files."""

    exit_code = 3


class MissingFileError(ConfigurationError, FileNotFoundError):
    """A path named on the command line or in a config does not exist."""

    exit_code = 4


class SchemaError(ConfigurationError):
    """A record file carries a schema version this release cannot read."""

    exit_code = 8


class NumericError(FqeInferenceError, ArithmeticError):
    """An approximator or a formula produced a non-finite value."""

    exit_code = 1


class SolverError(FqeInferenceError, RuntimeError):
    """A stage fit could not be solved (rank-deficient normal equations)."""

    exit_code = 5

    def __init__(self, message: str, rank: int | None = None, dim: int | None = None):
        super().__init__(message)
        self.rank = rank
        self.dim = dim


class InferenceError(FqeInferenceError, RuntimeError):
    """A variance or divergence computation hit a singular covariance."""

    exit_code = 6


class StudyError(FqeInferenceError, RuntimeError):
    """Too many replicates failed in a bootstrap run or a Monte-Carlo study."""

    exit_code = 7

    def __init__(self, message: str, failed: int = 0, total: int = 0):
        super().__init__(message)
        self.failed = failed
        self.total = total


SINGULAR_SIGMA_MSG = (
    "Σ̂_{stage} is numerically singular (condition estimate {cond:.3e} > {limit:.1e}). "
    "Re-run with jitter enabled (allow_jitter=True / --jitter) to add ε·tr(Σ̂)/d·I, "
    "or improve data coverage."
)
