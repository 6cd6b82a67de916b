"""The divided-difference operator, its averaging companion and one-sided shifts.

Functions are handed around as :class:`PointEvaluator` objects: callables that
take a :class:`UnitizedPoint` and return a value at the current mpmath
precision.  Working precision is set by the caller through a
:class:`PrecisionCtx`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb
from typing import Callable

import mpmath

from .errors import AtBranchPoint, InputError, SingularWeight
from .numkit import DEFAULT_CTX, PrecisionCtx, QParam, q_binomial, q_factorial, qq
from .points import UnitizedPoint, from_z, shift

__all__ = [
    "PointEvaluator",
    "PolyRep",
    "Form",
    "apply_dq",
    "apply_aq",
    "apply_eta",
    "dq_nested",
    "dq_iterated",
    "fused_weights",
    "WeightTable",
    "dq_poly",
    "leibniz_rhs",
    "LEIBNIZ_MAX_ORDER",
]

LEIBNIZ_MAX_ORDER = 8


class Form(enum.Enum):
    AT_SHIFTED_CENTER = "AtShiftedCenter"
    AT_CENTER = "AtCenter"


@dataclass(frozen=True)
class PointEvaluator:
    """A function of x, sampled through its Joukowski point."""

    fn: Callable[[UnitizedPoint], object]
    is_entire_hint: bool = True
    name: str = "f"

    def __call__(self, p: UnitizedPoint):
        return self.fn(p)

    @classmethod
    def from_x(cls, g: Callable, name: str = "f", is_entire_hint: bool = True) -> "PointEvaluator":
        return cls(lambda p: g(p.x), is_entire_hint, name)

    def __mul__(self, other: "PointEvaluator") -> "PointEvaluator":
        f, g = self.fn, other.fn
        return PointEvaluator(lambda p: f(p) * g(p), self.is_entire_hint and other.is_entire_hint,
                              f"({self.name})*({other.name})")

    def __truediv__(self, other: "PointEvaluator") -> "PointEvaluator":
        f, g = self.fn, other.fn
        return PointEvaluator(lambda p: f(p) / g(p), False, f"({self.name})/({other.name})")


def _clean(v):
    """Drop an identically-zero imaginary part so real inputs stay real."""
    if isinstance(v, mpmath.mpc) and v.imag == 0:
        return v.real
    return v


class PolyRep:
    """Polynomial in the power basis, b_0 + b_1 x + ... + b_d x^d."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs) -> None:
        cs = [_clean(mpmath.mpmathify(c)) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [mpmath.mpf(0)]
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def __repr__(self) -> str:
        return "PolyRep([" + ", ".join(mpmath.nstr(c, 10) for c in self.coeffs) + "])"

    def __call__(self, x):
        acc = mpmath.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyRep) and self.coeffs == other.coeffs

    __hash__ = None

    def __add__(self, other: "PolyRep") -> "PolyRep":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return PolyRep([u + v for u, v in zip(a, b)])

    def __neg__(self) -> "PolyRep":
        return PolyRep([-c for c in self.coeffs])

    def __sub__(self, other: "PolyRep") -> "PolyRep":
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PolyRep):
            return PolyRep([c * other for c in self.coeffs])
        out = [mpmath.mpf(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, u in enumerate(self.coeffs):
            if u == 0:
                continue
            for j, v in enumerate(other.coeffs):
                out[i + j] += u * v
        return PolyRep(out)

    __rmul__ = __mul__

    @classmethod
    def monomial(cls, d: int) -> "PolyRep":
        return cls([0] * d + [1])

    def evaluator(self) -> PointEvaluator:
        return PointEvaluator(lambda p: self(p.x), True, f"poly(deg={self.degree})")


# ---------------------------------------------------------------------------
# pointwise operators


def _denominator(p: UnitizedPoint, q: QParam, ctx: PrecisionCtx):
    z = p.z
    gap = z - 1 / z
    if abs(gap) < mpmath.ldexp(1, -(ctx.bits // 2)):
        raise AtBranchPoint(
            f"x = {mpmath.nstr(p.x, 15)} is a branch point (|z - 1/z| = {mpmath.nstr(abs(gap), 5)}); "
            "the difference quotient needs the derivative limit there"
        )
    s = q.sqrt()
    return (s - 1 / s) * gap / 2


def apply_dq(f: PointEvaluator, p: UnitizedPoint, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """(f(x^) - f(xv)) / ((q^1/2 - q^-1/2)(z - 1/z)/2)."""
    with ctx.working():
        den = _denominator(p, q, ctx)
        return _clean((f(shift(p, 1, q, ctx)) - f(shift(p, -1, q, ctx))) / den)


def apply_aq(f: PointEvaluator, p: UnitizedPoint, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """(f(x^) + f(xv)) / 2."""
    with ctx.working():
        return _clean((f(shift(p, 1, q, ctx)) + f(shift(p, -1, q, ctx))) / 2)


def apply_eta(f: PointEvaluator, p: UnitizedPoint, q: QParam, direction: int,
              ctx: PrecisionCtx = DEFAULT_CTX):
    """f at the hat shift (direction +1) or the check shift (direction -1)."""
    if direction not in (1, -1):
        raise InputError(f"direction must be +1 or -1, got {direction!r}")
    with ctx.working():
        return _clean(f(shift(p, direction, q, ctx)))


def dq_nested(f: PointEvaluator, p: UnitizedPoint, n: int, q: QParam,
              ctx: PrecisionCtx = DEFAULT_CTX):
    """n-fold pointwise nesting of :func:`apply_dq`; the reference oracle.

    Values are memoised on the shift offset, so the cost is O(n^2)
    evaluations instead of 2^n, but every level still loses precision to the
    difference quotient.
    """
    if n < 0:
        raise InputError("order must be >= 0")
    memo: dict = {}
    with ctx.working():

        def go(order: int, offset: int):
            key = (order, offset)
            if key in memo:
                return memo[key]
            pt = shift(p, offset, q, ctx)
            if order == 0:
                val = f(pt)
            else:
                den = _denominator(pt, q, ctx)
                val = (go(order - 1, offset + 1) - go(order - 1, offset - 1)) / den
            memo[key] = val
            return val

        return _clean(go(n, 0))


# ---------------------------------------------------------------------------
# Cooper-type sums


class WeightTable:
    """Fused node weights w_{n,j} for a centre parameter a.

    With nodes z_j = a q^j (that is x^(2j) of the centre),

        sum_j w_{n,j} f(z_j) = q^{-n(n-1)/4} (D^n f)(x^(n)) / ((-2a)^n [n]_q!)

    and

        w_{n,j} = q^n (-1)^j q^{j(j-1)/2}
                  / ((q;q)_j (q;q)_{n-j} (q^j a^2; q)_j (q^{2j+1} a^2; q)_{n-j}).

    The a-dependent Pochhammer symbols only involve factors 1 - q^t a^2 with
    t >= 1, kept as prefix products so each weight costs O(1).  mpmath floats
    carry an unbounded exponent, so the products never overflow.
    """

    def __init__(self, a, q: QParam, nmax: int, ctx: PrecisionCtx = DEFAULT_CTX) -> None:
        self.q = q
        self.ctx = ctx
        self.nmax = int(nmax)
        with ctx.working():
            self.a = mpmath.mpmathify(a)
            qv = q.value()
            a2 = self.a * self.a
            tol = mpmath.ldexp(1, -(ctx.bits // 2))
            # factors[t] = 1 - q^t a^2 for t = 1 .. 2*nmax + 1
            self._singular: list[int] = []
            prefix = [mpmath.mpf(1), mpmath.mpf(1)]  # prefix[m] = prod_{t=1}^{m-1}
            term = a2 * qv
            for t in range(1, 2 * self.nmax + 2):
                fac = 1 - term
                if abs(fac) < tol:
                    self._singular.append(t)
                    fac = mpmath.mpf(1)  # excluded; any weight touching t raises
                prefix.append(prefix[-1] * fac)
                term *= qv
            self._prefix = prefix
            self._qq = [qq(m, q) for m in range(self.nmax + 1)]

    def _range_product(self, lo: int, hi: int):
        """prod_{t=lo}^{hi} (1 - q^t a^2), lo >= 1."""
        if hi < lo:
            return mpmath.mpf(1)
        for t in self._singular:
            if lo <= t <= hi:
                raise SingularWeight(
                    f"factor 1 - q^{t} a^2 vanishes (confluent nodes); use the shifted-centre form"
                )
        return self._prefix[hi + 1] / self._prefix[lo]

    def weights(self, n: int) -> list:
        if n > self.nmax:
            raise InputError(f"order {n} exceeds table size {self.nmax}")
        with self.ctx.working():
            qv = self.q.value()
            qn = qv ** n
            out = []
            for j in range(n + 1):
                den = (self._qq[j] * self._qq[n - j]
                       * self._range_product(j, 2 * j - 1)
                       * self._range_product(2 * j + 1, n + j))
                w = qn * qv ** (j * (j - 1) // 2) / den
                out.append(-w if j % 2 else w)
            return out


def fused_weights(a, n: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX) -> list:
    return WeightTable(a, q, n, ctx).weights(n)


def dq_iterated(f: PointEvaluator, p0: UnitizedPoint, n: int, q: QParam,
                form: Form = Form.AT_SHIFTED_CENTER, ctx: PrecisionCtx = DEFAULT_CTX):
    """n-th iterated difference from n + 1 samples of f.

    ``AT_SHIFTED_CENTER`` returns (D^n f) at the n-fold hat shift of p0 using
    f at the even shifts 0, 2, ..., 2n.  ``AT_CENTER`` returns (D^n f)(p0)
    using the shifts -n, -n + 2, ..., n.
    """
    form = Form(form)
    if n < 0:
        raise InputError("order must be >= 0")
    with ctx.working():
        if n == 0:
            return _clean(f(p0))
        base = p0 if form is Form.AT_SHIFTED_CENTER else shift(p0, -n, q, ctx)
        a = base.z
        w = fused_weights(a, n, q, ctx)
        total = mpmath.fsum(w[j] * f(shift(base, 2 * j, q, ctx)) for j in range(n + 1))
        pref = (-2 * a) ** n * q.half_power(n * (n - 1) // 2) * q_factorial(n, q, ctx)
        return _clean(pref * total)


# ---------------------------------------------------------------------------
# exact polynomial image


def _chebyshev_u(m: int) -> list[int]:
    """Integer power-basis coefficients of U_m."""
    prev, cur = [1], [0, 2]
    if m == 0:
        return prev
    for _ in range(m - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def dq_poly(p: PolyRep, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX) -> PolyRep:
    """Exact image of a polynomial under the divided-difference operator.

    Writing p(x) = sum_m c_m (z^m + z^-m) in the Joukowski variable, each pair
    maps to 2 (s^m - s^-m)/(s - 1/s) U_{m-1}(x) with s = q^(1/2).
    """
    d = p.degree
    if d == 0:
        return PolyRep([0])
    with ctx.working():
        s = q.sqrt()
        out = [mpmath.mpf(0)] * d
        for m in range(1, d + 1):
            cm = mpmath.mpf(0)
            for k in range(m, d + 1, 2):
                b = p.coeffs[k]
                if b != 0:
                    cm += b * comb(k, (k + m) // 2) / mpmath.mpf(2) ** k
            if cm == 0:
                continue
            ratio = mpmath.fsum(s ** (m - 1 - 2 * t) for t in range(m))
            scale = 2 * cm * ratio
            for i, u in enumerate(_chebyshev_u(m - 1)):
                if u:
                    out[i] += scale * u
        return PolyRep(out)


# ---------------------------------------------------------------------------
# Leibniz rule


def leibniz_rhs(f: PointEvaluator, g: PointEvaluator, p: UnitizedPoint, n: int, q: QParam,
                ctx: PrecisionCtx = DEFAULT_CTX, max_order: int = LEIBNIZ_MAX_ORDER):
    """Right-hand side of the Leibniz rule for the n-th difference of f*g at p."""
    if n < 0 or n > max_order:
        raise InputError(f"Leibniz order must be in [0, {max_order}], got {n}")
    with ctx.working():
        terms = []
        for k in range(n + 1):
            weight = q_binomial(n, k, q, ctx) * q.half_power(-k * (n - k))
            left = dq_nested(f, shift(p, k, q, ctx), n - k, q, ctx)
            right = dq_nested(g, shift(p, -(n - k), q, ctx), k, q, ctx)
            terms.append(weight * left * right)
        return _clean(mpmath.fsum(terms))
