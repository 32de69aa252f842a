"""
Error types for the PQR pipeline.

Every error carries an exit code so the CLI can map failures onto a fixed
contract for scripting:

- 0 success
- 1 usage (bad flags, parameters, config)
- 2 data (missing/corrupt files, degenerate inputs)
- 3 numerical failure
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class PqrError(Exception):
    """Base class for all pipeline errors."""
    exit_code = EXIT_USAGE


# =============================================================================
# Usage errors
# =============================================================================

class InvalidParameterError(PqrError, ValueError):
    """A parameter is outside its documented domain."""
    pass


class OutOfRangeError(PqrError, ValueError):
    """A score lies outside the anchor score range."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class InvalidArchitectureError(PqrError, ValueError):
    """The network architecture cannot be built (e.g. spatial underflow)."""
    pass


class InvalidInputError(PqrError, ValueError):
    """A batch does not match the network's expected input shape."""
    pass


class ConfigError(PqrError, ValueError):
    """The run config file is malformed or names unknown keys."""
    pass


# =============================================================================
# Data errors
# =============================================================================

class DegenerateQuantizerError(PqrError):
    """More quantizer levels were requested than distinct score values."""
    exit_code = EXIT_DATA


class UnsupportedFormatError(PqrError):
    """A file has the wrong magic number or an unknown version."""
    exit_code = EXIT_DATA


class CorruptCheckpointError(PqrError):
    """A checkpoint file is truncated or internally inconsistent."""
    exit_code = EXIT_DATA


class DatasetIOError(PqrError, OSError):
    """Reading or writing dataset files failed."""
    exit_code = EXIT_DATA

    def __init__(self, message: str, path=None):
        super().__init__(message)
        self.path = path


class ResultsLockError(PqrError):
    """The results database lock is held by another process."""
    exit_code = EXIT_DATA


# =============================================================================
# Numerical errors
# =============================================================================

class SingularFitError(PqrError, ArithmeticError):
    """The reverse-mapping normal equations are rank deficient."""
    exit_code = EXIT_NUMERICAL


class DivergentLossError(PqrError, ArithmeticError):
    """A predicted probability is zero where the target has mass."""
    exit_code = EXIT_NUMERICAL


class NumericalFailureError(PqrError, ArithmeticError):
    """NaN/Inf appeared in activations, gradients or parameters."""
    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, layer: str | None = None,
                 epoch: int | None = None, batch: int | None = None):
        super().__init__(message)
        self.layer = layer
        self.epoch = epoch
        self.batch = batch


class UndefinedCorrelationError(PqrError, ArithmeticError):
    """A correlation was requested on constant input."""
    exit_code = EXIT_NUMERICAL
