"""Domain-level exceptions for the Floquet MAS simulator.

Defines a small hierarchy of exceptions raised by the simulation and service
layers. FastAPI exception handlers translate them to HTTP errors and the CLI
translates them to exit codes.
"""

from typing import Optional
from app.core.error_codes import ErrorCode


class FloquetSimError(Exception):
    """Base class for domain-level errors."""

    error_code_default: ErrorCode = ErrorCode.INTERNAL_ERROR
    scientific: bool = False

    def __init__(self, message: str = "", error_code: Optional[ErrorCode] = None):
        super().__init__(message)
        self.error_code = error_code or self.error_code_default


class ValidationError(FloquetSimError):
    """Raised when input violates a precondition."""
    error_code_default = ErrorCode.VALIDATION_ERROR


class DimensionMismatchError(ValidationError):
    """Raised when operator and density dimensions disagree."""
    error_code_default = ErrorCode.DIMENSION_MISMATCH


class ConfigError(FloquetSimError):
    """Raised when an experiment config file is malformed.

    Attributes:
        key: Dotted path of the offending key, when known.
        line: 1-based line in the source file, when known.
    """
    error_code_default = ErrorCode.CONFIG_ERROR

    def __init__(self, message: str = "", key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.key = key
        self.line = line


class ConvergenceError(FloquetSimError):
    """Raised when mode truncation or a grid fails to converge."""
    error_code_default = ErrorCode.CONVERGENCE_FAILED
    scientific = True


class SolverError(FloquetSimError):
    """Raised when PASS root finding exhausts its seeds."""
    error_code_default = ErrorCode.SOLVER_FAILED
    scientific = True

    def __init__(self, message: str = "", best_residual: float = float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


class SingularSystemError(FloquetSimError):
    """Raised when a linear system is numerically singular."""
    error_code_default = ErrorCode.SINGULAR_SYSTEM
    scientific = True


class AmbiguousReadoutError(FloquetSimError):
    """Raised when spectral identification margin is too small."""
    error_code_default = ErrorCode.AMBIGUOUS_READOUT
    scientific = True

    def __init__(self, message: str = "", margin: float = 0.0):
        super().__init__(message)
        self.margin = margin


class SearchFailedError(FloquetSimError):
    """Raised when a Grover run does not identify the marked item."""
    error_code_default = ErrorCode.SEARCH_FAILED
    scientific = True
