"""Points of the plane carried by their Joukowski parameter.

A point x is stored through z with x = (z + 1/z)/2.  Shifting multiplies z by
q**(m/2); the point remembers its base parameter and the accumulated number of
half-steps, so composing shifts is exact (``shift(shift(p, a), b)`` and
``shift(p, a + b)`` produce bit-identical z).  Points are never re-lifted from
x once they exist: re-lifting after a shift can jump to the other branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from .errors import InputError
from .numkit import DEFAULT_CTX, PrecisionCtx, QParam

__all__ = ["UnitizedPoint", "lift", "from_z", "shift", "x_of"]


@dataclass(frozen=True)
class UnitizedPoint:
    z0: object
    steps: int = 0
    q: QParam | None = None
    z: object = field(default=None, compare=False)
    x: object = field(default=None, compare=False)

    def __repr__(self) -> str:
        return f"UnitizedPoint(x={mpmath.nstr(self.x, 12)}, z={mpmath.nstr(self.z, 12)}, steps={self.steps})"

    @property
    def a(self):
        """The z-parameter, under the name used for expansion centres."""
        return self.z


def _make(z0, steps: int, q: QParam | None) -> UnitizedPoint:
    z = z0 if steps == 0 else z0 * q.half_power(steps)
    x = (z + 1 / z) / 2
    return UnitizedPoint(z0=z0, steps=steps, q=q if steps else None, z=z, x=x)


def _branch_sqrt(x):
    """sqrt(x^2 - 1) with cut [-1, 1], ~x at infinity, upper limit on the cut."""
    return mpmath.sqrt(x - 1) * mpmath.sqrt(x + 1)


def lift(x, ctx: PrecisionCtx = DEFAULT_CTX) -> UnitizedPoint:
    """Canonical point for x: z = x + sqrt(x^2 - 1) with |z| >= 1."""
    with ctx.working():
        x = mpmath.mpmathify(x)
        if isinstance(x, mpmath.mpc) and x.imag == 0:
            x = x.real
        if isinstance(x, mpmath.mpf) and -1 <= x <= 1:
            z = mpmath.mpc(x, mpmath.sqrt(1 - x * x))
            if z.imag == 0:
                z = z.real
        else:
            z = x + _branch_sqrt(x)
            if isinstance(z, mpmath.mpc) and z.imag == 0:
                z = z.real
        return _make(z, 0, None)


def from_z(z, ctx: PrecisionCtx = DEFAULT_CTX) -> UnitizedPoint:
    """Point with the given parameter z (any branch)."""
    with ctx.working():
        z = mpmath.mpmathify(z)
        if z == 0:
            raise InputError("z = 0 does not parametrise a finite point")
        return _make(z, 0, None)


def shift(p: UnitizedPoint, m: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX) -> UnitizedPoint:
    """The m-fold hat shift (check shift for m < 0): z -> q**(m/2) z."""
    m = int(m)
    if m == 0:
        return p
    if p.q is not None and p.q != q:
        raise InputError("cannot shift a point with a different q than it was shifted with")
    with ctx.working():
        return _make(p.z0, p.steps + m, q)


def x_of(p: UnitizedPoint):
    return p.x
