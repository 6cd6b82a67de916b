"""Series in the interpolation basis phi_k(x; x0) and their conversions.

phi_k(x; x0) = prod_{j<k} (1 - 2 a x q^j + a^2 q^{2j}), where a is the
Joukowski parameter of the centre x0.  A series is the centre, the
coefficients a_0..a_K and an optional :class:`TailModel` describing how the
coefficients beyond K behave.  A series without a tail model is treated as
exact (finitely supported).
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .awop import PointEvaluator, PolyRep, WeightTable, _clean
from .errors import InputError, InvariantViolation, MissingTailModel, ProbeIsNode
from .numkit import (
    DEFAULT_CTX,
    PrecisionCtx,
    QParam,
    format_decimal,
    parse_coefficient,
    parse_decimal,
    q_bracket,
    q_pochhammer_inf,
    qq,
    to_mpf,
)
from .points import UnitizedPoint, from_z, lift, shift

log = logging.getLogger(__name__)

__all__ = [
    "TailModel",
    "AWSeries",
    "PowerSeries",
    "TknTable",
    "Convergence",
    "phi_eval",
    "phi_power_expand",
    "tkn_table",
    "tkn_closed",
    "tkn_bound_constant",
    "power_to_aw",
    "aw_to_power",
    "expand_from_evaluator",
    "series_evaluator",
    "phi_evaluator",
    "eval_series",
    "dq_series",
    "classify_convergence",
    "read_series",
    "write_series",
    "series_to_json",
    "series_from_json",
    "PHI_MAX_DEGREE",
]

PHI_MAX_DEGREE = 512

TAIL_TAGS = ("stretched-exp", "gauss-q", "heuristic")


@dataclass(frozen=True)
class TailModel:
    """How |coefficient_n| behaves past the stored range.

    ``stretched-exp`` (param ``gamma``): |c_n| = exp(-n^(1+gamma)).
    ``gauss-q``: |c_n| = q^(n^2).
    ``heuristic``: the series is infinite but no envelope is known.
    """

    tag: str
    params: tuple = ()

    def __post_init__(self) -> None:
        if self.tag not in TAIL_TAGS:
            raise InputError(f"unknown tail model {self.tag!r}; expected one of {TAIL_TAGS}")
        if self.tag == "stretched-exp":
            g = self.param("gamma")
            if g is None or Fraction(g) <= 0:
                raise InputError("stretched-exp tail model needs gamma > 0")

    def param(self, name: str):
        return dict(self.params).get(name)

    @property
    def certified(self) -> bool:
        return self.tag != "heuristic"

    @property
    def log_concave(self) -> bool:
        """ln|c_n| is concave in n, so per-term ratios only decrease."""
        return self.tag in ("stretched-exp", "gauss-q")

    def log_abs(self, n: int, q: QParam):
        """ln|c_n| for the model at the current precision."""
        if self.tag == "stretched-exp":
            g = to_mpf(parse_decimal(self.param("gamma")))
            return -mpmath.mpf(n) ** (1 + g)
        if self.tag == "gauss-q":
            return mpmath.mpf(n) ** 2 * q.log()
        raise InputError("heuristic tail model has no envelope")

    def to_json(self) -> dict:
        return {"tag": self.tag, **{k: v for k, v in self.params}}

    @classmethod
    def from_json(cls, obj) -> "TailModel | None":
        if obj is None:
            return None
        if isinstance(obj, str):
            return cls(obj)
        if not isinstance(obj, dict) or "tag" not in obj:
            raise InputError("tail_model must be an object with a 'tag' key")
        params = tuple(sorted((k, str(v)) for k, v in obj.items() if k != "tag"))
        return cls(obj["tag"], params)


@dataclass(frozen=True)
class AWSeries:
    center: UnitizedPoint
    coeffs: tuple
    q: QParam
    tail_model: TailModel | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def a(self):
        return self.center.z

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def scaled(self, c, ctx: PrecisionCtx = DEFAULT_CTX) -> "AWSeries":
        with ctx.working():
            coeffs = tuple(c * v for v in self.coeffs)
        return AWSeries(self.center, coeffs, self.q, self.tail_model, dict(self.meta))

    def evaluator(self, ctx: PrecisionCtx = DEFAULT_CTX) -> PointEvaluator:
        return series_evaluator(self, ctx)


@dataclass(frozen=True)
class PowerSeries:
    coeffs: tuple
    tail_model: TailModel | None = None

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_poly(cls, p: PolyRep) -> "PowerSeries":
        return cls(tuple(p.coeffs))


@dataclass(frozen=True)
class TknTable:
    q: QParam
    kmax: int
    rows: tuple  # rows[k][n] for n <= k

    def get(self, k: int, n: int):
        if n > k:
            return mpmath.mpf(0)
        return self.rows[k][n]


# ---------------------------------------------------------------------------
# basis


def _xval(x):
    return x.x if isinstance(x, UnitizedPoint) else mpmath.mpmathify(x)


def phi_eval(k: int, x, center: UnitizedPoint, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX,
             cross_check: bool = False):
    """phi_k(x; x0) as the product of quadratic factors."""
    with ctx.working():
        xv = _xval(x)
        a = center.z
        qv = q.value()
        val = mpmath.mpf(1)
        qj = mpmath.mpf(1)
        for _ in range(k):
            val *= 1 - 2 * a * xv * qj + a * a * qj * qj
            qj *= qv
        if cross_check and k:
            roots = mpmath.mpf(1)
            scale = mpmath.mpf(1)
            qj = mpmath.mpf(1)
            for _ in range(k):
                c = (a * qj + 1 / (a * qj)) / 2
                roots *= xv - c
                scale *= abs(xv) + abs(c)
                qj *= qv
            lead = (-2 * a) ** k * q.half_power(k * (k - 1))
            alt = lead * roots
            if abs(val - alt) > ctx.eps(16 + 2 * k.bit_length()) * abs(lead) * scale:
                raise InvariantViolation(
                    f"phi_{k} product and root forms disagree: {mpmath.nstr(val, 20)} vs {mpmath.nstr(alt, 20)}"
                )
        return _clean(val)


def phi_power_expand(k: int, center: UnitizedPoint, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX,
                     max_degree: int = PHI_MAX_DEGREE) -> PolyRep:
    """Power-basis coefficients of phi_k by multiplying in one factor at a time."""
    if k > max_degree:
        raise InputError(f"phi degree {k} exceeds the configured maximum {max_degree}")
    with ctx.working():
        return _phi_powers(k, center, q)[k]


def _phi_powers(kmax: int, center: UnitizedPoint, q: QParam) -> list[PolyRep]:
    a = center.z
    qv = q.value()
    out = [PolyRep([1])]
    cur = [mpmath.mpf(1)]
    qj = mpmath.mpf(1)
    for _ in range(kmax):
        c0 = 1 + a * a * qj * qj
        c1 = -2 * a * qj
        nxt = [c0 * cur[0]] + [c0 * cur[i] + c1 * cur[i - 1] for i in range(1, len(cur))] + [c1 * cur[-1]]
        cur = nxt
        out.append(PolyRep(cur))
        qj *= qv
    return out


def phi_evaluator(k: int, center: UnitizedPoint, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX) -> PointEvaluator:
    return PointEvaluator(lambda p: phi_eval(k, p, center, q, ctx), True, f"phi_{k}")


# ---------------------------------------------------------------------------
# monomial-to-basis numbers


def tkn_table(kmax: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX) -> TknTable:
    """T(k, n) for 0 <= n <= k <= kmax from the three-term recurrence."""
    if kmax < 0:
        raise InputError("kmax must be >= 0")
    with ctx.working():
        qv = q.value()
        cosh = [(qv ** n + qv ** (-n)) / 2 for n in range(kmax + 1)]
        shiftc = [qv ** (1 - n) / 2 for n in range(kmax + 1)]
        rows = [(mpmath.mpf(1),)]
        for k in range(1, kmax + 1):
            prev = rows[-1]
            row = [mpmath.mpf(1)]
            for n in range(1, k + 1):
                up = prev[n] if n < k else mpmath.mpf(0)
                row.append(cosh[n] * up - shiftc[n] * prev[n - 1])
            rows.append(tuple(row))
        return TknTable(q, kmax, tuple(rows))


def tkn_closed(k: int, n: int, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """T(k, n) from the explicit alternating sum.

    The sum cancels heavily once k is large against n, so it runs with
    enough extra mantissa to absorb the cancellation and is rounded back to
    the context precision.  The recurrence table is the production path.
    """
    if k < 0 or n < 1:
        raise InputError("tkn_closed needs k >= 0 and n >= 1")
    extra = int(math.ceil((k * n + n * (n + 1) / 2) * math.log2(1 / float(q.exact)))) + 2 * n + 32
    with mpmath.workprec(ctx.total + extra):
        qv = q.value()
        acc = 1 / qq(n, q) ** 2
        for j in range(1, n + 1):
            t = q.power(j * (j - 1) // 2) * (1 + qv ** j) / (qq(n - j, q) * qq(n + j, q))
            t *= ((qv ** j + qv ** (-j)) / 2) ** k
            acc += -t if j % 2 else t
        val = qv ** n * acc
    with ctx.working():
        return +val


def tkn_bound_constant(q: QParam, ctx: PrecisionCtx = DEFAULT_CTX):
    """K = 2 (-q; q)_inf / (q; q)_inf."""
    with ctx.working():
        qv = q.value()
        num, _ = q_pochhammer_inf(-qv, q, ctx)
        den, _ = q_pochhammer_inf(qv, q, ctx)
        return 2 * num / den


# ---------------------------------------------------------------------------
# conversions


def power_to_aw(ps: PowerSeries, q: QParam, ctx: PrecisionCtx = DEFAULT_CTX,
                rigorous: bool = False) -> AWSeries:
    """Basis coefficients about x0 = 1 of a power series, a_n = sum_k b_k T(k, n).

    With ``rigorous=True`` the truncation error of every a_n is bounded
    from the power series' tail model and stored in ``meta['tail_bounds']``.
    """
    if rigorous and ps.tail_model is None:
        raise MissingTailModel("a rigorous tail bound needs a tail model on the power series")
    if rigorous and not ps.tail_model.certified:
        raise MissingTailModel("a heuristic tail model cannot give a rigorous bound")
    K = ps.K
    table = tkn_table(K, q, ctx)
    with ctx.working():
        coeffs = []
        for n in range(K + 1):
            acc = mpmath.fsum(ps.coeffs[k] * table.get(k, n) for k in range(n, K + 1) if ps.coeffs[k] != 0)
            coeffs.append(_clean(acc))
        meta = {}
        if rigorous:
            meta["tail_bounds"] = [_power_tail_bound(ps, n, q, ctx) for n in range(K + 1)]
        return AWSeries(lift(1, ctx), tuple(coeffs), q, None, meta)


def _power_tail_bound(ps: PowerSeries, n: int, q: QParam, ctx: PrecisionCtx):
    """sum_{k > K} |b_k| K_const q^{n(n+1)/2 - nk}."""
    kc = tkn_bound_constant(q, ctx)
    qv_log = q.log()
    tiny = -ctx.total * mpmath.log(2)
    terms = []
    best = None
    k = ps.K + 1
    while True:
        lt = ps.tail_model.log_abs(k, q) + (mpmath.mpf(n * (n + 1)) / 2 - n * k) * qv_log
        terms.append(lt)
        best = lt if best is None else max(best, lt)
        if lt < best + tiny and k > ps.K + 8:
            break
        k += 1
        if k > ps.K + 100000:
            raise MissingTailModel("tail model does not decay fast enough to bound the truncation")
    return kc * mpmath.fsum(mpmath.exp(t) for t in terms)


def aw_to_power(s: AWSeries, ctx: PrecisionCtx = DEFAULT_CTX, max_degree: int = PHI_MAX_DEGREE) -> PowerSeries:
    if s.K > max_degree:
        raise InputError(f"series length {s.K} exceeds the configured maximum {max_degree}")
    with ctx.working():
        acc = PolyRep([0])
        for k, phi in enumerate(_phi_powers(s.K, s.center, s.q)):
            if s.coeffs[k] != 0:
                acc = acc + phi * s.coeffs[k]
        cs = list(acc.coeffs) + [mpmath.mpf(0)] * (s.K + 1 - len(acc.coeffs))
        return PowerSeries(tuple(cs))


def expand_from_evaluator(f: PointEvaluator, center: UnitizedPoint, nmax: int, q: QParam,
                          ctx: PrecisionCtx = DEFAULT_CTX, tail_model: TailModel | None = None) -> AWSeries:
    """Interpolation coefficients a_0..a_nmax of f about ``center``.

    Each a_n is a weighted sum of f over the nodes z = a q^j, j <= n, with
    the fused weights of :class:`WeightTable`.  ``meta['scales'][n]`` holds
    sum_j |w_{n,j}| * max_j |f_j|, the magnitude cancellation has to beat.
    """
    if nmax < 0:
        raise InputError("nmax must be >= 0")
    with ctx.working():
        table = WeightTable(center.z, q, nmax, ctx)
        values = [f(shift(center, 2 * j, q, ctx)) for j in range(nmax + 1)]
        fmax = max(abs(v) for v in values)
        coeffs, scales = [], []
        for n in range(nmax + 1):
            w = table.weights(n)
            coeffs.append(_clean(mpmath.fsum(w[j] * values[j] for j in range(n + 1))))
            scales.append(mpmath.fsum(abs(t) for t in w) * fmax)
        return AWSeries(center, tuple(coeffs), q, tail_model, {"scales": scales})


# ---------------------------------------------------------------------------
# evaluation


def _terms(s: AWSeries, xv):
    """Yield a_k phi_k(x) for k = 0..K."""
    a = s.a
    qv = s.q.value()
    phi = mpmath.mpf(1)
    qj = mpmath.mpf(1)
    for c in s.coeffs:
        yield c * phi
        phi *= 1 - 2 * a * xv * qj + a * a * qj * qj
        qj *= qv


def eval_series(s: AWSeries, x, ctx: PrecisionCtx = DEFAULT_CTX):
    """Value of the truncated series and a heuristic bound on the omitted tail.

    The bound is 0 for a series without a tail model (finitely supported).
    Otherwise it extrapolates the worst ratio among the last five retained
    terms as a geometric series; it is infinite if that ratio is >= 1.
    """
    with ctx.working():
        xv = _xval(x)
        terms = list(_terms(s, xv))
        value = _clean(mpmath.fsum(terms))
        if s.tail_model is None:
            return value, mpmath.mpf(0)
        mags = [abs(t) for t in terms[-6:]]
        if mags[-1] == 0:
            return value, mpmath.mpf(0)
        ratio = max((mags[i] / mags[i - 1] if mags[i - 1] else mpmath.inf) for i in range(1, len(mags)))
        if ratio >= 1:
            return value, mpmath.inf
        return value, mags[-1] * ratio / (1 - ratio)


def series_evaluator(s: AWSeries, ctx: PrecisionCtx = DEFAULT_CTX) -> PointEvaluator:
    return PointEvaluator(lambda p: eval_series(s, p, ctx)[0], True, "aw-series")


def dq_series(s: AWSeries, ctx: PrecisionCtx = DEFAULT_CTX) -> AWSeries:
    """Termwise image under the divided-difference operator.

    D phi_k(.; x0) = -2 a [k]_q phi_{k-1}(.; x0^), so the centre moves one
    half-step and the coefficients shift down.
    """
    with ctx.working():
        a = s.a
        if s.K == 0:
            coeffs = (mpmath.mpf(0),)
        else:
            coeffs = tuple(_clean(-2 * a * q_bracket(k, s.q, ctx) * s.coeffs[k]) for k in range(1, s.K + 1))
        tail = None if s.tail_model is None else TailModel("heuristic")
        return AWSeries(shift(s.center, 1, s.q, ctx), coeffs, s.q, tail, {"derived_from": "dq"})


class Convergence(enum.Enum):
    CONVERGES_EVERYWHERE = "ConvergesEverywhere"
    DIVERGES_OFF_NODES = "DivergesOffNodes"
    UNDETERMINED = "Undetermined"


def classify_convergence(s: AWSeries, probe, ctx: PrecisionCtx = DEFAULT_CTX,
                         growth_run: int = 20, cauchy_window: int = 5) -> Convergence:
    """Numerical reading of the all-or-nothing convergence dichotomy at ``probe``."""
    with ctx.working():
        xv = _xval(probe)
        tol = ctx.eps(16)
        for j in range(s.K + 1):
            node = shift(s.center, 2 * j, s.q, ctx).x
            if abs(xv - node) <= tol * max(1, abs(node)):
                raise ProbeIsNode(f"probe coincides with interpolation node j={j}")
        last = max((k for k, c in enumerate(s.coeffs) if c != 0), default=-1)
        if s.K - last >= cauchy_window:
            return Convergence.CONVERGES_EVERYWHERE
        mags = [abs(t) for t in _terms(s, xv)]
        run = 0
        for i in range(1, len(mags)):
            run = run + 1 if mags[i] > mags[i - 1] else 0
            if run >= growth_run:
                return Convergence.DIVERGES_OFF_NODES
        total = abs(mpmath.fsum(_terms(s, xv)))
        ref = max(total, max(mags))
        if all(m <= ctx.eps() * ref for m in mags[-cauchy_window:]):
            return Convergence.CONVERGES_EVERYWHERE
        return Convergence.UNDETERMINED


# ---------------------------------------------------------------------------
# files


def _fmt_number(v, digits: int):
    v = _clean(v)
    if isinstance(v, mpmath.mpc):
        return [format_decimal(v.real, digits), format_decimal(v.imag, digits)]
    return format_decimal(v, digits)


def _parse_number(obj, what: str):
    if isinstance(obj, list):
        if len(obj) != 2:
            raise InputError(f"{what}: complex values are [re, im] pairs")
        re, im = (parse_coefficient(o) for o in obj)
        return (re, im)
    return parse_coefficient(obj)


def _render(val):
    if isinstance(val, tuple):
        return _clean(mpmath.mpc(to_mpf(val[0]), to_mpf(val[1])))
    return to_mpf(val)


def series_to_json(s: AWSeries, ctx: PrecisionCtx = DEFAULT_CTX, provenance: dict | None = None) -> dict:
    """JSON object with keys in the documented order."""
    digits = ctx.digits()
    with ctx.working():
        doc = {"q": s.q.text, "center_x": _fmt_number(s.center.x, digits)}
        canon = lift(s.center.x, ctx)
        if abs(canon.z - s.center.z) > ctx.eps(8) * abs(s.center.z):
            doc["center_z"] = _fmt_number(s.center.z, digits)
        doc["coefficients"] = [_fmt_number(c, digits) for c in s.coeffs]
        if s.tail_model is not None:
            doc["tail_model"] = s.tail_model.to_json()
        if provenance is not None:
            doc["provenance"] = provenance
        return doc


def series_from_json(doc, ctx: PrecisionCtx = DEFAULT_CTX) -> AWSeries:
    if not isinstance(doc, dict):
        raise InputError("series file must hold a JSON object")
    for key in ("q", "coefficients"):
        if key not in doc:
            raise InputError(f"series file is missing required key {key!r}")
    q = QParam(str(doc["q"]))
    raw = doc["coefficients"]
    if not isinstance(raw, list) or not raw:
        raise InputError("'coefficients' must be a non-empty array")
    exact = [_parse_number(c, "coefficients") for c in raw]
    with ctx.working():
        if "center_z" in doc:
            center = from_z(_render(_parse_number(doc["center_z"], "center_z")), ctx)
        else:
            center = lift(_render(_parse_number(doc.get("center_x", "1"), "center_x")), ctx)
        coeffs = tuple(_render(c) for c in exact)
    tail = TailModel.from_json(doc.get("tail_model"))
    return AWSeries(center, coeffs, q, tail, {"exact_coeffs": exact})


def write_series(s: AWSeries, path, ctx: PrecisionCtx = DEFAULT_CTX, provenance: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(series_to_json(s, ctx, provenance), fh, indent=2)
        fh.write("\n")


def read_series(path, ctx: PrecisionCtx = DEFAULT_CTX) -> AWSeries:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"series file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"series file is not valid JSON: {exc}") from exc
    return series_from_json(doc, ctx)
