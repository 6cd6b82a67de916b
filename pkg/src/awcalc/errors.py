"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented status codes without a lookup table.
"""

from __future__ import annotations


class AWError(Exception):
    """Base class for numerical failures (exit status 3)."""

    exit_code = 3


class InputError(AWError, ValueError):
    """Invalid input or configuration (exit status 2)."""

    exit_code = 2


class InvariantViolation(AWError):
    """An internal consistency check failed (exit status 4)."""

    exit_code = 4


class AtBranchPoint(AWError):
    """The difference quotient is evaluated too close to x = +1 or x = -1."""


class SingularWeight(AWError):
    """A q-Pochhammer factor in an interpolation weight vanishes."""


class TruncationTooShort(AWError):
    """Not enough stored coefficients to certify a maximal term."""


class MissingTailModel(InputError):
    """A rigorous tail bound was requested for a series without a tail model."""


class ProbeIsNode(InputError):
    """The convergence probe coincides with an interpolation node."""


class KappaExceedsN(AWError):
    """The tail window is wider than the central index (radius too small)."""


class ZeroDenominator(AWError):
    """f(x) vanished (or underflowed) where a ratio by f(x) was requested."""


class AsymptoticRegimeNotReached(AWError):
    """The central index is still 0, so the asymptotic ratio is undefined."""


class CoefficientNotDecaying(AWError):
    """Coefficients do not decay, so no log-order can be read off."""


class NotTranscendental(AWError):
    """The series is (numerically) a polynomial."""


class RegimeMismatch(AWError):
    """A log-type computation was requested outside the log-order 2 regime."""


class NoPositiveSlope(AWError):
    """The Newton polygon has no edge of positive slope."""


class NotASolution(AWError):
    """The candidate does not satisfy the difference equation."""
