"""Precision contexts and elementary q-objects.

All arithmetic runs on :mod:`mpmath` numbers.  A :class:`PrecisionCtx` fixes the
working mantissa; operations enter it with ``with ctx.working():`` and return
values at ``bits + guard_bits`` precision.  The base q is kept as an exact
rational and re-rendered per precision, so raising the precision never
re-rounds q.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp

from .errors import InputError

log = logging.getLogger(__name__)

__all__ = [
    "PrecisionCtx",
    "DEFAULT_CTX",
    "QParam",
    "parse_decimal",
    "parse_coefficient",
    "format_decimal",
    "q_pochhammer",
    "q_pochhammer_inf",
    "q_bracket",
    "q_factorial",
    "q_factorial_via_pochhammer",
    "q_binomial",
]


@dataclass(frozen=True)
class PrecisionCtx:
    """Working precision descriptor.

    ``bits`` is the precision results are judged at; ``guard_bits`` is extra
    mantissa carried through intermediate products.
    """

    bits: int = 512
    guard_bits: int = 64

    def __post_init__(self) -> None:
        if int(self.bits) != self.bits or self.bits < 64:
            raise InputError(f"precision bits must be an integer >= 64, got {self.bits!r}")
        if int(self.guard_bits) != self.guard_bits or self.guard_bits < 0:
            raise InputError(f"guard bits must be a non-negative integer, got {self.guard_bits!r}")

    @property
    def total(self) -> int:
        return self.bits + self.guard_bits

    def working(self):
        return mpmath.workprec(self.total)

    def eps(self, slack: int = 0):
        """2**(-bits + slack) as an mpf."""
        return mpmath.ldexp(mpmath.mpf(1), -self.bits + slack)

    def digits(self) -> int:
        """Decimal digits needed to round-trip a value at ``bits`` precision."""
        return int(math.ceil(self.bits * math.log10(2))) + 2


DEFAULT_CTX = PrecisionCtx()


def parse_decimal(text) -> Fraction:
    """Parse a decimal or rational string ("0.25", "1/4", "1e-3") exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"expected a decimal string, got {type(text).__name__}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a decimal or rational number: {text!r}") from exc


def parse_coefficient(text) -> Fraction | Decimal:
    """Parse a coefficient exactly without expanding its decimal exponent.

    Coefficients such as 1e-3400000 would become enormous integers as a
    Fraction, so plain decimals are kept as Decimal; "a/b" stays a Fraction.
    """
    if isinstance(text, (Fraction, Decimal)):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"expected a decimal string, got {type(text).__name__}")
    t = text.strip()
    if "/" in t:
        return parse_decimal(t)
    try:
        d = Decimal(t)
    except InvalidOperation as exc:
        raise InputError(f"not a decimal number: {text!r}") from exc
    if not d.is_finite():
        raise InputError(f"not a finite decimal number: {text!r}")
    return d


def to_mpf(value: Fraction | Decimal):
    """Render an exact rational or decimal at the current working precision."""
    if isinstance(value, Decimal):
        return mpmath.mpf(str(value))
    return mpmath.mpf(value.numerator) / value.denominator


def format_decimal(value, digits: int) -> str:
    """Deterministic scientific-notation rendering of an mpf."""
    value = mpmath.mpf(value)
    if value == 0:
        return "0.0e+0"
    if not mpmath.isfinite(value):
        return str(value)
    s = mpmath.nstr(value, digits, min_fixed=1, max_fixed=0)
    if "e" not in s:
        s += "e+0"
    return s


class QParam:
    """The base q, stored exactly, with 0 < q < 1."""

    __slots__ = ("exact", "text", "_cache")

    def __init__(self, q) -> None:
        exact = parse_decimal(q)
        if not (0 < exact < 1):
            raise InputError(f"q must satisfy 0 < q < 1, got {q!r}")
        self.exact = exact
        self.text = q.strip() if isinstance(q, str) else str(exact)
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"QParam({self.text!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, QParam) and other.exact == self.exact

    def __hash__(self) -> int:
        return hash(self.exact)

    def __getstate__(self):
        return (self.exact, self.text)

    def __setstate__(self, state) -> None:
        self.exact, self.text = state
        self._cache = {}

    def _cached(self, key, make):
        slot = (key, mp.prec)
        try:
            return self._cache[slot]
        except KeyError:
            val = self._cache[slot] = make()
            return val

    def value(self):
        """q at the current working precision."""
        return self._cached("q", lambda: to_mpf(self.exact))

    def sqrt(self):
        return self._cached("sqrt", lambda: mpmath.sqrt(self.value()))

    def one_minus(self):
        """1 - q, rendered from the exact value (no cancellation)."""
        return self._cached("1-q", lambda: to_mpf(1 - self.exact))

    def log(self):
        """ln q (negative)."""
        return self._cached("log", lambda: mpmath.log1p(-self.one_minus()))

    def log_inv(self):
        """ln(1/q) (positive)."""
        return -self.log()

    def power(self, m):
        """q**m for integer m."""
        return self.value() ** int(m)

    def half_power(self, m: int):
        """q**(m/2) for integer m, computed as sqrt(q)**m."""
        return self.sqrt() ** int(m)


def q_pochhammer_inf(a, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """(a; q)_inf and the index at which the product was truncated.

    Factors are multiplied until |a q^k| < 2**-(bits + guard_bits).
    """
    with ctx.working():
        a = mpmath.mpmathify(a)
        qv = q.value()
        tiny = mpmath.ldexp(mpmath.mpf(1), -ctx.total)
        prod = mpmath.mpf(1)
        term = a
        k = 0
        while abs(term) >= tiny:
            prod *= 1 - term
            term *= qv
            k += 1
        log.debug("(a;q)_inf truncated at k=%d", k)
        return prod, k


def q_pochhammer(a, q: QParam, n=None, ctx: PrecisionCtx = DEFAULT_CTX):
    """(a; q)_n = prod_{k<n} (1 - a q^k); ``n=None`` or ``math.inf`` means n = infinity."""
    if n is None or n == math.inf:
        return q_pochhammer_inf(a, q, ctx)[0]
    n = int(n)
    if n < 0:
        raise InputError("q_pochhammer needs n >= 0")
    with ctx.working():
        a = mpmath.mpmathify(a)
        qv = q.value()
        prod = mpmath.mpf(1)
        term = a
        for _ in range(n):
            prod *= 1 - term
            term *= qv
        return prod


def q_bracket(n: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """[n]_q = (1 - q^n)/(1 - q)."""
    if n < 0:
        raise InputError("q_bracket needs n >= 0")
    with ctx.working():
        return _bracket(int(n), q.exact, mp.prec)


def _one_minus_qpow(m: int, qe: Fraction):
    """1 - q^m without cancellation for q near 1."""
    return -mpmath.expm1(m * mpmath.log1p(-to_mpf(1 - qe)))


@lru_cache(maxsize=4096)
def _bracket(n: int, qe: Fraction, prec: int):
    if n == 0:
        return mpmath.mpf(0)
    return _one_minus_qpow(n, qe) / to_mpf(1 - qe)


def q_factorial(n: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """[n]_q! as the product of brackets."""
    with ctx.working():
        return _factorial(int(n), q.exact, mp.prec)


@lru_cache(maxsize=4096)
def _factorial(n: int, qe: Fraction, prec: int):
    if n < 0:
        raise InputError("q_factorial needs n >= 0")
    out = mpmath.mpf(1)
    for k in range(1, n + 1):
        out *= _bracket(k, qe, prec)
    return out


def q_factorial_via_pochhammer(n: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """[n]_q! as (q;q)_n / (1-q)^n; cross-check for :func:`q_factorial`."""
    with ctx.working():
        return q_pochhammer(q.value(), q, n, ctx) / q.one_minus() ** n


@lru_cache(maxsize=256)
def _qq_table(qe: Fraction, prec: int, upto: int):
    """(q;q)_m for m = 0..upto at the given precision."""
    with mpmath.workprec(prec):
        out = [mpmath.mpf(1)]
        for m in range(1, upto + 1):
            out.append(out[-1] * _one_minus_qpow(m, qe))
        return tuple(out)


def qq(m: int, q: QParam):
    """(q;q)_m at the current working precision (cached in blocks)."""
    upto = max(64, 1 << (max(m, 1) - 1).bit_length())
    return _qq_table(q.exact, mp.prec, upto)[m]


def q_binomial(n: int, k: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """Gaussian binomial (q;q)_n / ((q;q)_k (q;q)_{n-k})."""
    if k < 0 or n < 0 or k > n:
        raise InputError(f"q_binomial needs 0 <= k <= n, got n={n}, k={k}")
    with ctx.working():
        lo, hi = sorted((k, n - k))
        return qq(n, q) / (qq(lo, q) * qq(hi, q))
