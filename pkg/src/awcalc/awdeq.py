"""Linear difference equations sum_k a_k(x) (D^k y)(x) = 0 with polynomial a_k.

The Newton polygon is built from the lattice points (k, deg a_{n-k} - (n-k));
its positive edge slopes chi predict the growth of the central index of an
entire solution, nu(r) ~ (chi / ln(1/q)) ln r.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .awop import PolyRep, dq_poly
from .awseries import AWSeries, dq_series, eval_series
from .errors import InputError, NoPositiveSlope, NotASolution
from .growth import log_order_estimate
from .numkit import DEFAULT_CTX, PrecisionCtx, QParam, format_decimal, parse_coefficient, to_mpf
from .points import UnitizedPoint, lift

__all__ = [
    "AWDiffEq",
    "NewtonPolygon",
    "Verdict",
    "CertificateReport",
    "newton_polygon",
    "residual",
    "predicted_nu",
    "growth_certificate",
    "read_equation",
    "write_equation",
    "equation_from_json",
    "equation_to_json",
]


@dataclass(frozen=True)
class AWDiffEq:
    coeffs: tuple  # PolyRep per order k
    q: QParam

    def __post_init__(self) -> None:
        cs = tuple(c if isinstance(c, PolyRep) else PolyRep(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", cs)
        if len(cs) < 2:
            raise InputError("an equation needs order n >= 1 (at least two coefficient polynomials)")
        if cs[-1].is_zero:
            raise InputError("the leading coefficient polynomial must not vanish identically")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class NewtonPolygon:
    generators: tuple  # (k, deg a_{n-k} - (n-k)) for non-zero a_{n-k}
    vertices: tuple
    edge_slopes: tuple  # ascending Fractions

    @property
    def positive_slopes(self) -> tuple:
        return tuple(s for s in self.edge_slopes if s > 0)


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def newton_polygon(eq: AWDiffEq) -> NewtonPolygon:
    """Upper-left boundary of the union of quadrants {x >= k, y <= y_k}.

    The boundary is the upper concave chain from the leftmost generator to
    the first highest one, followed by a horizontal ray; a slope-0 edge is
    listed when several generators share the maximal height.
    """
    n = eq.order
    gens = tuple((k, eq.coeffs[n - k].degree - (n - k)) for k in range(n + 1) if not eq.coeffs[n - k].is_zero)
    ymax = max(y for _, y in gens)
    kstar = min(k for k, y in gens if y == ymax)
    chain: list = []
    for p in (g for g in gens if g[0] <= kstar):
        while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) >= 0:
            chain.pop()
        chain.append(p)
    # a generator at the left edge with lower height is still the start of the chain,
    # but points below the chord from it are dropped by the concavity test above
    slopes = [Fraction(b[1] - a[1], b[0] - a[0]) for a, b in zip(chain, chain[1:])]
    vertices = list(chain)
    tops = [g for g in gens if g[1] == ymax]
    if len(tops) > 1:
        vertices.append(tops[-1])
        slopes.append(Fraction(0))
    return NewtonPolygon(gens, tuple(vertices), tuple(sorted(set(slopes))))


def residual(eq: AWDiffEq, y, points, ctx: PrecisionCtx = DEFAULT_CTX) -> list:
    """sum_k a_k(x) (D^k y)(x) at each point."""
    derivs = [y]
    for _ in range(eq.order):
        prev = derivs[-1]
        if isinstance(y, PolyRep):
            derivs.append(dq_poly(prev, eq.q, ctx))
        elif isinstance(y, AWSeries):
            derivs.append(dq_series(prev, ctx))
        else:
            raise InputError("residual needs a PolyRep or an AWSeries")
    out = []
    with ctx.working():
        for p in points:
            x = p.x if isinstance(p, UnitizedPoint) else mpmath.mpmathify(p)
            total = []
            for a, d in zip(eq.coeffs, derivs):
                if a.is_zero:
                    continue
                val = d(x) if isinstance(d, PolyRep) else eval_series(d, x, ctx)[0]
                total.append(a(x) * val)
            out.append(mpmath.fsum(total))
    return out


def predicted_nu(eq, r=None, chi=None, *, log_r=None, ctx: PrecisionCtx = DEFAULT_CTX):
    """(chi / ln(1/q)) ln r for a positive Newton-polygon slope chi.

    ``eq`` may be an :class:`AWDiffEq` (chi must be one of its positive slopes)
    or a :class:`QParam` (no slope check).  Pass ``log_r`` to skip forming r.
    """
    if isinstance(eq, AWDiffEq):
        q = eq.q
        pos = newton_polygon(eq).positive_slopes
        if not pos:
            raise NoPositiveSlope("the Newton polygon has no edge of positive slope")
        chi = pos[-1] if chi is None else Fraction(chi)
        if chi not in pos:
            raise InputError(f"chi = {chi} is not a positive slope of the polygon {pos}")
    elif isinstance(eq, QParam):
        q = eq
        if chi is None:
            raise InputError("chi is required when no equation is given")
        chi = Fraction(chi)
        if chi <= 0:
            raise NoPositiveSlope("chi must be positive")
    else:
        raise InputError("predicted_nu needs an AWDiffEq or a QParam")
    with ctx.working():
        if log_r is None:
            if r is None:
                raise InputError("give r or log_r")
            log_r = mpmath.log(mpmath.mpf(r))
        else:
            log_r = mpmath.mpf(log_r)
        return to_mpf(chi) / q.log_inv() * log_r


class Verdict(enum.Enum):
    POLYNOMIAL_SOLUTION = "POLYNOMIAL_SOLUTION"
    CONSISTENT = "CONSISTENT"
    CONTRADICTS_THEOREM = "CONTRADICTS_THEOREM"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class CertificateReport:
    verdict: Verdict
    sigma_log: object = None
    chi: Fraction | None = None
    top_ratios: tuple = ()
    loglog_slope: object = None
    band: Fraction = Fraction(1, 5)
    detail: str = ""


DEFAULT_TEST_POINTS = ("0.3", "1.7", "-2.5", "3.1", "-7.25")


def _is_transcendental(s, min_nonzero: int) -> bool:
    if isinstance(s, PolyRep) or s.tail_model is None:
        return False
    return sum(1 for c in s.coeffs if c != 0) >= min_nonzero


def growth_certificate(eq: AWDiffEq, s, log_radii=(), nus=(), ctx: PrecisionCtx = DEFAULT_CTX,
                       residuals=None, band: Fraction = Fraction(1, 5), top_fraction: float = 0.1,
                       sigma_slack: Fraction = Fraction(1, 10), min_nonzero: int = 32,
                       normal=None) -> CertificateReport:
    """Compare a solution's central-index profile with the polygon prediction.

    ``log_radii`` and ``nus`` are the profile (natural logs of the radii and
    the central indices).  The candidate must first satisfy the equation:
    ``residuals`` may be supplied directly, otherwise the residual is taken
    at fixed test points and must be tiny against the sum of the absolute
    summands.  ``normal``, when given, is a per-radius mask; radii marked
    False (outside the q-normal set) are left out of the comparison.
    """
    if residuals is None:
        pts = [lift(t, ctx) for t in DEFAULT_TEST_POINTS]
        res = residual(eq, s, pts, ctx)
        with ctx.working():
            bound = mpmath.ldexp(1, -(ctx.bits // 2))
            scales = _residual_scales(eq, s, pts, ctx)
            bad = [i for i, (r, sc) in enumerate(zip(res, scales)) if abs(r) > bound * max(sc, 1)]
        if bad:
            raise NotASolution(f"residual exceeds tolerance at test points {[DEFAULT_TEST_POINTS[i] for i in bad]}")
    else:
        with ctx.working():
            if any(abs(mpmath.mpmathify(r)) > ctx.eps(24) for r in residuals):
                raise NotASolution("supplied residuals are not below tolerance")
    if not _is_transcendental(s, min_nonzero):
        return CertificateReport(Verdict.POLYNOMIAL_SOLUTION, detail="finitely supported solution")
    sigma, _ = log_order_estimate(s.coeffs, ctx=ctx)
    with ctx.working():
        if sigma < 2 - to_mpf(sigma_slack):
            return CertificateReport(Verdict.CONTRADICTS_THEOREM, sigma, detail=(
                f"transcendental solution with log-order estimate {mpmath.nstr(sigma, 6)} < 2"))
        pos = newton_polygon(eq).positive_slopes
        mask = [True] * len(nus) if normal is None else list(normal)
        if len(mask) != len(nus):
            raise InputError("the normal mask must have one entry per radius")
        pts = [(mpmath.mpf(lr), nu) for lr, nu, keep in zip(log_radii, nus, mask)
               if keep and nu and nu > 0 and lr > 1]
        if not pos or len(pts) < 4:
            return CertificateReport(Verdict.INCONCLUSIVE, sigma, detail="no positive slope or profile too short")
        top = pts[-max(1, int(math.ceil(len(pts) * top_fraction))):]
        half = pts[len(pts) // 2:]
        xs = [mpmath.log(lr) for lr, _ in half]
        ys = [mpmath.log(nu) for _, nu in half]
        mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
        sxx = sum((x - mx) ** 2 for x in xs)
        slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx if sxx else mpmath.mpf(0)
        b = to_mpf(band)
        for chi in sorted(pos, reverse=True):
            ratios = tuple(nu / predicted_nu(eq.q, chi=chi, log_r=lr, ctx=ctx) for lr, nu in top)
            if all(abs(r - 1) <= b for r in ratios) and slope >= mpmath.mpf("0.9"):
                return CertificateReport(Verdict.CONSISTENT, sigma, chi, ratios, slope, band)
        return CertificateReport(Verdict.INCONCLUSIVE, sigma, None, (), slope, band,
                                 "profile does not match any positive slope within the band")


def _residual_scales(eq: AWDiffEq, y, points, ctx: PrecisionCtx) -> list:
    derivs = [y]
    for _ in range(eq.order):
        derivs.append(dq_poly(derivs[-1], eq.q, ctx) if isinstance(y, PolyRep) else dq_series(derivs[-1], ctx))
    out = []
    for p in points:
        x = p.x
        acc = mpmath.mpf(0)
        for a, d in zip(eq.coeffs, derivs):
            val = d(x) if isinstance(d, PolyRep) else eval_series(d, x, ctx)[0]
            acc += abs(a(x) * val)
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# files


def equation_to_json(eq: AWDiffEq, ctx: PrecisionCtx = DEFAULT_CTX, provenance: dict | None = None) -> dict:
    digits = ctx.digits()
    doc = {"q": eq.q.text, "coefficients": [[format_decimal(c, digits) for c in p.coeffs] for p in eq.coeffs]}
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def equation_from_json(doc, ctx: PrecisionCtx = DEFAULT_CTX) -> AWDiffEq:
    if not isinstance(doc, dict):
        raise InputError("equation file must hold a JSON object")
    for key in ("q", "coefficients"):
        if key not in doc:
            raise InputError(f"equation file is missing required key {key!r}")
    raw = doc["coefficients"]
    if not isinstance(raw, list) or not all(isinstance(p, list) and p for p in raw):
        raise InputError("'coefficients' must be an array of non-empty arrays of decimal strings")
    q = QParam(str(doc["q"]))
    with ctx.working():
        polys = tuple(PolyRep([to_mpf(parse_coefficient(c)) for c in p]) for p in raw)
    return AWDiffEq(polys, q)


def read_equation(path, ctx: PrecisionCtx = DEFAULT_CTX) -> AWDiffEq:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"equation file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"equation file is not valid JSON: {exc}") from exc
    return equation_from_json(doc, ctx)


def write_equation(eq: AWDiffEq, path, ctx: PrecisionCtx = DEFAULT_CTX, provenance: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(equation_to_json(eq, ctx, provenance), fh, indent=2)
        fh.write("\n")
