"""Exception hierarchy for the downcross package.

Every exception raised deliberately by this package derives from
:class:`DowncrossError`, so callers can catch one type at an API boundary.
Subclasses also inherit the closest matching builtin so that generic
handlers (``ValueError``, ``OverflowError``, ...) keep working.
"""

from __future__ import annotations


class DowncrossError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DowncrossError, ValueError):
    """A configuration block is malformed, inconsistent, or incomplete."""


class DomainError(DowncrossError, ValueError):
    """An evaluation point lies outside the state space of the model."""


class PositivityError(DowncrossError, ValueError):
    """The diffusion coefficient failed the strict positivity requirement."""


class QuadratureError(DowncrossError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance in budget."""


class OverflowPolicyError(DowncrossError, OverflowError):
    """A quantity overflows double precision even in compensated form."""


class NotTransientError(DowncrossError):
    """An operation requires transience to +infinity, which does not hold."""


class IndeterminateTailError(DowncrossError):
    """A tail extrapolation was requested but the tail fit is inconclusive."""


class InsufficientDataError(DowncrossError):
    """Too few usable samples to compute the requested statistic."""
