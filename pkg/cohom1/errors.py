"""
Error Types
Every failure raised by cohom1 derives from Cohom1Error so the CLI can map
it to exit code 2 with a stage-tagged diagnostic.
"""

from typing import List, Optional, Sequence


class Cohom1Error(Exception):
    """Base class for all cohom1 failures."""

    stage: Optional[str] = None


class DomainError(Cohom1Error, ValueError):
    """An argument lies outside the domain of the operation."""


class PrecisionError(Cohom1Error, ArithmeticError):
    """Working precision is exhausted (non-finite value, exponent overflow, lost digits)."""


class PropagationError(Cohom1Error):
    """The Taylor propagation cannot continue past `reach`."""

    def __init__(self, message: str, reach=None):
        super().__init__(message)
        self.reach = reach


class StoppingNotReached(Cohom1Error):
    """No sign change of Z(t) = d2/t + eta3(t) inside the covered interval."""

    def __init__(self, message: str, reach=None):
        super().__init__(message)
        self.reach = reach


class ConvergenceError(Cohom1Error):
    """An iterative solver diverged or converged to the wrong root."""

    def __init__(self, message: str, trace: Optional[Sequence] = None):
        super().__init__(message)
        self.trace: List = list(trace or [])


class CertificateError(Cohom1Error):
    """Computed inputs are inconsistent with a constant the existence proof relies on."""
