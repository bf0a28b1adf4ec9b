"""Exception types shared across the toolkit.

Every failure mode that callers are expected to handle gets its own class so
that tests and the CLI can distinguish a degenerate configuration (OutOfDomain,
NotInRegime) from a numerical breakdown (BracketFailure, NoConvergence,
NonFiniteIntegrand).
"""
from __future__ import annotations


class DdcError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteIntegrand(DdcError):
    """A quadrature node evaluation produced NaN or infinity."""


class NoConvergence(DdcError):
    """An iterative solver exhausted its iteration budget.

    Carries the last iterate when available so callers can inspect how far
    the solve got.
    """

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class BracketFailure(DdcError):
    """A root or minimum bracket could not be established."""


class OutOfDomain(DdcError):
    """An argument lies outside the mathematical domain of the operation."""


class NotInRegime(DdcError):
    """The requested point is on the wrong side of the interpolation threshold."""


class NoRoot(DdcError):
    """A bracketing root solve found no sign change."""


class BadShape(DdcError):
    """Array dimensions are inconsistent with the requested operation."""


class ZeroVector(DdcError):
    """A direction-dependent metric was requested for the zero vector."""
