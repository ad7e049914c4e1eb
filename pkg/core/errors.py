"""Exception hierarchy and exit-status tables.

Every failure the library can report is a QuasiFixError. Solver failures
carry the partial IterationTrace so callers can still export it.
"""

from typing import Optional

import numpy as np


class QuasiFixError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# Parameter / input errors
# ---------------------------------------------------------------------------
class InvalidParameter(QuasiFixError, ValueError):
    pass


class DimensionMismatch(QuasiFixError, ValueError):
    pass


class EmptySampleSet(QuasiFixError, ValueError):
    pass


class DegeneratePair(QuasiFixError, ValueError):
    """All sampled pairs had x == y, so no ratio could be formed."""


class IndexOutOfRange(QuasiFixError, IndexError):
    pass


class ExpressionSyntaxError(QuasiFixError, ValueError):
    def __init__(self, message: str, source: str = "", position: int = -1):
        if position >= 0:
            message = f"{message} at column {position + 1} in {source!r}"
        super().__init__(message)
        self.source = source
        self.position = position


class ExpressionEvalError(QuasiFixError, ValueError):
    pass


class InsufficientTrace(QuasiFixError, ValueError):
    pass


class ConfigParseError(QuasiFixError, ValueError):
    def __init__(self, message: str, key: str = ""):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


# ---------------------------------------------------------------------------
# Solver failures
# ---------------------------------------------------------------------------
class SolverError(QuasiFixError):
    """A solve that stopped without a certified fixed point."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace

    @property
    def iterations(self) -> int:
        if self.trace is None:
            return 0
        return len(self.trace.residuals)


class MaxIterationsExceeded(SolverError):
    pass


class DivergenceDetected(SolverError):
    def __init__(self, message: str, trace=None, gamma_hat: float = float("nan")):
        super().__init__(message, trace)
        self.gamma_hat = gamma_hat


class NumericalOverflow(SolverError):
    pass


class FixedPointNotSharedByU(SolverError):
    def __init__(self, message: str, trace=None, result=None, unit_residual: float = float("nan")):
        super().__init__(message, trace)
        self.result = result
        self.unit_residual = unit_residual


class DominationViolated(SolverError):
    def __init__(self, message: str, witness: Optional[np.ndarray] = None,
                 norm_d: float = float("nan"), norm_rho: float = float("nan")):
        super().__init__(message, None)
        self.witness = witness
        self.norm_d = norm_d
        self.norm_rho = norm_rho


# ---------------------------------------------------------------------------
# Exit-status table
# ---------------------------------------------------------------------------
EXIT_OK = 0
EXIT_SOLVER_FAILURE = 2
EXIT_CONFIG_ERROR = 3

ERROR_TABLE = {
    MaxIterationsExceeded: (EXIT_SOLVER_FAILURE, "max_iter", "Iteration budget exhausted"),
    DivergenceDetected: (EXIT_SOLVER_FAILURE, "diverged", "Residual ratios stayed at or above 1"),
    NumericalOverflow: (EXIT_SOLVER_FAILURE, "overflow", "Iterate left the representable range"),
    FixedPointNotSharedByU: (EXIT_SOLVER_FAILURE, "not_shared", "Limit is not a fixed point of U"),
    DominationViolated: (EXIT_SOLVER_FAILURE, "domination_violated", "Norm domination failed on a sample"),
    ConfigParseError: (EXIT_CONFIG_ERROR, "config_error", "Malformed experiment config"),
    InvalidParameter: (EXIT_CONFIG_ERROR, "config_error", "Parameter out of range"),
    DimensionMismatch: (EXIT_CONFIG_ERROR, "config_error", "Inconsistent dimensions"),
    ExpressionSyntaxError: (EXIT_CONFIG_ERROR, "config_error", "Map expression does not parse"),
    ExpressionEvalError: (EXIT_CONFIG_ERROR, "config_error", "Map expression cannot be evaluated"),
    EmptySampleSet: (EXIT_CONFIG_ERROR, "config_error", "No usable samples"),
    DegeneratePair: (EXIT_CONFIG_ERROR, "config_error", "All sample pairs degenerate"),
}


def describe_error(exc: BaseException):
    """Return (exit_status, status_word, description) for an exception."""
    for cls in type(exc).__mro__:
        if cls in ERROR_TABLE:
            return ERROR_TABLE[cls]
    if isinstance(exc, SolverError):
        return EXIT_SOLVER_FAILURE, "solver_error", "Solver failure"
    return EXIT_CONFIG_ERROR, "config_error", "Unexpected error"
