"""Exception hierarchy; the CLI maps each family to an exit code."""

from enum import IntEnum
from typing import Optional


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1
    PARSE = 2
    SOLVER = 3
    IO = 4


class FreeSpectraError(Exception):
    exit_code: ExitCode = ExitCode.USAGE


class PolynomialSyntaxError(FreeSpectraError, ValueError):
    """Malformed polynomial text; ``position`` is a 0-based character offset."""

    exit_code = ExitCode.PARSE

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class VariableIndexError(PolynomialSyntaxError):
    pass


class PowerError(PolynomialSyntaxError):
    pass


class NotSelfAdjointError(FreeSpectraError, ValueError):
    pass


class DimensionMismatchError(FreeSpectraError, ValueError):
    pass


class NotHermitianError(FreeSpectraError, ValueError):
    pass


class MeasureSpecError(FreeSpectraError, ValueError):
    pass


class HalfPlaneError(FreeSpectraError, ValueError):
    """A point that should lie in the matrix upper half-plane does not."""

    exit_code = ExitCode.SOLVER

    def __init__(self, message: str, margin: Optional[float] = None):
        self.margin = margin
        super().__init__(message)


class SingularMatrixError(FreeSpectraError, ArithmeticError):
    exit_code = ExitCode.SOLVER

    def __init__(self, message: str, condition: float = float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")


class SolverError(FreeSpectraError, RuntimeError):
    """Numerical failure; pipeline code attaches the offending ``t`` and ``epsilon``."""

    exit_code = ExitCode.SOLVER

    def __init__(self, message: str, t: Optional[float] = None, epsilon: Optional[float] = None):
        self.t = t
        self.epsilon = epsilon
        super().__init__(message)


class ConvergenceError(SolverError):
    def __init__(self, message: str, iterations: int, displacement: float):
        self.iterations = iterations
        self.displacement = displacement
        super().__init__(f"{message} after {iterations} iterations (last displacement {displacement:.3e})")


class QuadratureError(SolverError):
    def __init__(self, message: str, achieved: float):
        self.achieved = achieved
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")


class ConsistencyError(SolverError):
    pass


class BudgetExceededError(FreeSpectraError, RuntimeError):
    exit_code = ExitCode.SOLVER


class ArtifactError(FreeSpectraError, OSError):
    """An input artifact is missing, unreadable or lacks a required column."""

    exit_code = ExitCode.IO
