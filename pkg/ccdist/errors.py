"""
異常層級
每個異常帶有 CLI 退出碼：1 = 求解失敗，2 = 分類 / 區域 / 重建失敗，3 = 用法錯誤
"""

from typing import Any, List, Optional


class CCDistError(Exception):
    """Base class for every error raised by ccdist."""

    exit_code: int = 2


class PairIndexError(CCDistError, IndexError):
    """Pair (i, j) outside 1 <= i < j <= n."""


class DegenerateConfigurationError(CCDistError, ValueError):
    """Two bodies coincide."""


class ArityError(CCDistError, ValueError):
    """Too few bodies for the requested determinant."""


class NonRealizableError(CCDistError, ValueError):
    """A Cayley-Menger value has the wrong sign for a real simplex."""


class SingularityError(CCDistError, ValueError):
    """A mutual distance is zero where a reciprocal is needed."""


class PreconditionError(CCDistError, ValueError):
    """Inputs violate a documented precondition."""


class CollinearDegeneracyError(CCDistError, ValueError):
    """An oriented area needed as a divisor vanishes."""


class ReconstructionError(CCDistError, ValueError):
    """Distances cannot be realized by planar positions within tolerance."""


class ReportError(CCDistError, ValueError):
    """A report holds a value that strict JSON cannot represent."""


class UsageError(CCDistError, ValueError):
    """Malformed command line."""

    exit_code = 3


class InternalError(CCDistError, RuntimeError):
    """An internal consistency check failed."""


class SolverError(CCDistError, RuntimeError):
    """Iterative solver failure; keeps the last iterate diagnostics."""

    exit_code = 1

    def __init__(
        self,
        message: str,
        iterations: int = 0,
        residual_norm: Optional[float] = None,
    ):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


class NonConvergenceError(SolverError):
    pass


class SingularSystemError(SolverError):
    pass


class EnumerationIncompleteError(SolverError):
    pass


class InvalidRegionError(SolverError):
    """Converged, but outside the admissible configuration set."""

    exit_code = 2

    def __init__(self, message: str, solution: Any = None, **kwargs: Any):
        super().__init__(message, **kwargs)
        self.solution = solution


class InvalidOrderingError(InvalidRegionError):
    """Collinear solution whose gaps are not all positive."""


class ClassificationError(CCDistError):
    """A solution violates one or more classification relations."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        super().__init__(message)
        self.violations = list(violations or [])
