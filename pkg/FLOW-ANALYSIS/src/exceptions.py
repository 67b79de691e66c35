"""
Exception hierarchy for flow analysis.

Every failure an analysis can hit has its own class here, and every class
carries the process exit code the command line maps it to. Modules raise the
most specific class; the shell catches FlowAnalysisException once and turns it
into a diagnostic on stderr plus the exit code.

EXIT CODE CONTRACT:
    0  success (also NoPoles: a pole-free curve has a single limit point)
    2  schema or dimension error in the input
    3  TruncationInsufficient
    4  CertificationFailure
    5  Infeasible / DepthExceeded / RankNotReached
"""

from typing import Any, List, Optional


class FlowAnalysisException(Exception):
    """Base exception for analysis errors."""
    exit_code = 1


class DimensionMismatch(FlowAnalysisException):
    """Raised when vectors or subspaces of different ambient dimension meet."""
    exit_code = 2


class TruncationInsufficient(FlowAnalysisException):
    """Raised when a decision depends on coefficients at or above the truncation."""
    exit_code = 3


class CertificationFailure(FlowAnalysisException):
    """Raised when ball arithmetic cannot decide even after precision escalation."""
    exit_code = 4


class UndecidedMembership(CertificationFailure):
    """Raised when a ball rank or membership decision is undecided at the current precision.

    Callers that can recompute their inputs at doubled precision catch this once;
    a second occurrence surfaces as a CertificationFailure.
    """
    pass


class Infeasible(FlowAnalysisException):
    """Raised when no separating functional exists for the given sign pattern."""
    exit_code = 5


class DepthExceeded(FlowAnalysisException):
    """Raised when sequence enumeration hits its depth bound.

    The sequences found before the bound was hit travel with the exception.
    """
    exit_code = 5

    def __init__(self, message: str, partial: Optional[List[Any]] = None):
        super().__init__(message)
        self.partial = partial or []


class RankNotReached(FlowAnalysisException):
    """Raised when the coefficient rank condition fails up to the N0 cap."""
    exit_code = 5


class AlphaDegenerate(FlowAnalysisException):
    """Raised when a good-disc base point has a zero coordinate."""
    exit_code = 2


class NoPoles(FlowAnalysisException):
    """Raised when a curve has no negative exponent.

    Not a failure: the flow converges and `value` holds the single limit f(0).
    """
    exit_code = 0

    def __init__(self, message: str, value: Any = None):
        super().__init__(message)
        self.value = value


class DegenerateLattice(FlowAnalysisException):
    """Raised when lattice generators are linearly dependent over Q."""
    exit_code = 2
