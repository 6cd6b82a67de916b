"""Maximal term, central index, maximum modulus and the Wiman-Valiron checks.

Per-term sizes |a_n| * max_{|x|=r} |phi_n(x; x0)| span thousands of decimal
orders at the radii of interest, so every comparison is made between natural
logarithms and only reported values are exponentiated.
"""

from __future__ import annotations

import concurrent.futures as cf
import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .awop import PointEvaluator
from .awseries import AWSeries, TailModel, dq_series, eval_series
from .errors import (
    AsymptoticRegimeNotReached,
    AWError,
    CoefficientNotDecaying,
    InputError,
    KappaExceedsN,
    NotTranscendental,
    RegimeMismatch,
    TruncationTooShort,
    ZeroDenominator,
)
from .numkit import DEFAULT_CTX, PrecisionCtx, QParam, format_decimal, parse_decimal, q_bracket, to_mpf
from .points import lift

log = logging.getLogger(__name__)

__all__ = [
    "ComparisonConfig",
    "CoefficientFamily",
    "MaxTerm",
    "NormalityReport",
    "TailCheck",
    "ProfileRow",
    "log_terms",
    "maximal_term",
    "maximal_term_detail",
    "max_modulus",
    "is_all_positive",
    "comparison_seq",
    "log_comparison_seq",
    "q_normal_test",
    "decay_check",
    "tail_sum_check",
    "wv_ratio",
    "log_order_estimate",
    "profile_log_order",
    "log_type_bounds",
    "mu_M_sandwich",
    "kn_constant",
    "log10_grid",
    "build_profile",
    "profile_violations",
    "profile_to_csv",
    "CSV_COLUMNS",
]


def _frac(v, name: str) -> Fraction:
    try:
        return parse_decimal(v) if not isinstance(v, float) else Fraction(str(v))
    except InputError as exc:
        raise InputError(f"{name}: {exc}") from exc


@dataclass(frozen=True)
class ComparisonConfig:
    """Parameters of the comparison sequences and of the tail-sum check."""

    delta: Fraction = Fraction(1, 2)
    gamma: Fraction = Fraction(3, 2)
    beta: Fraction = Fraction(10)
    omega: Fraction = Fraction(9)
    h: int = 0
    eps: Fraction = Fraction(1, 20)
    window: int = 64

    def __post_init__(self) -> None:
        for name in ("delta", "gamma", "beta", "omega", "eps"):
            object.__setattr__(self, name, _frac(getattr(self, name), name))
        if not (0 < self.delta < 1):
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.gamma > 1:
            raise InputError(f"gamma must exceed 1, got {self.gamma}")
        if not self.beta > 0:
            raise InputError(f"beta must be positive, got {self.beta}")
        if not (0 < self.omega < self.beta):
            raise InputError(f"omega must lie in (0, beta), got {self.omega}")
        if int(self.h) != self.h or self.h < 0:
            raise InputError(f"h must be a non-negative integer, got {self.h}")
        object.__setattr__(self, "h", int(self.h))
        if int(self.window) != self.window or self.window < 1:
            raise InputError(f"window must be a positive integer, got {self.window}")
        if not self.eps > 0:
            raise InputError("eps must be positive")
        object.__setattr__(self, "_m0", {})

    def m0(self, q: QParam) -> int:
        """Smallest M with 2 q^(1-N) [N]_q / e^(N^gamma) < 1 for every N >= M."""
        cache = self._m0
        if q.exact not in cache:
            g = float(self.gamma)
            lq = -math.log(float(q.exact))
            qf = float(q.exact)
            last_bad = -1
            n = 0
            while True:
                bracket = (1 - qf ** n) / (1 - qf) if n else 0.0
                val = (math.log(2) + (n - 1) * lq + math.log(bracket) - n ** g) if n else math.inf
                if val >= 0:
                    last_bad = n
                # beyond the maximum of the concave exponent, a negative value stays negative
                elif n > 2 and g * n ** (g - 1) > lq + 1:
                    break
                n += 1
            cache[q.exact] = last_bad + 1
        return cache[q.exact]


# ---------------------------------------------------------------------------
# test families


@dataclass(frozen=True)
class CoefficientFamily:
    """Built-in coefficient sequences about x0 = 1.

    ``stretched-exp`` with parameter g: a_n = exp(-n^(1 + g)).
    ``gauss-q``: a_n = q^(n^2).
    ``alternating`` multiplies a_n by (-1)^n.
    """

    kind: str
    gamma: Fraction | None = None
    alternating: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("stretched-exp", "gauss-q"):
            raise InputError(f"unknown family {self.kind!r}")
        if self.kind == "stretched-exp":
            if self.gamma is None:
                raise InputError("stretched-exp needs a parameter")
            g = _frac(self.gamma, "gamma")
            if not g > 0:
                raise InputError("stretched-exp parameter must be positive")
            object.__setattr__(self, "gamma", g)

    @property
    def tail_model(self) -> TailModel:
        if self.kind == "stretched-exp":
            return TailModel("stretched-exp", (("gamma", str(self.gamma)),))
        return TailModel("gauss-q")

    def series(self, q: QParam, trunc: int, ctx: PrecisionCtx = DEFAULT_CTX) -> AWSeries:
        """The first ``trunc`` coefficients (indices 0..trunc-1)."""
        if trunc < 1:
            raise InputError("trunc must be >= 1")
        with ctx.working():
            coeffs = []
            for n in range(trunc):
                la = self.tail_model.log_abs(n, q)
                c = mpmath.exp(la)
                coeffs.append(-c if self.alternating and n % 2 else c)
            meta = {"family": self.kind, "family_param": None if self.gamma is None else str(self.gamma)}
            return AWSeries(lift(1, ctx), tuple(coeffs), q, self.tail_model, meta)

    def log_order(self):
        """Exact log-order of the family (2 for gauss-q)."""
        if self.kind == "gauss-q":
            return Fraction(2)
        return 1 + 1 / self.gamma


# ---------------------------------------------------------------------------
# maximal term


@dataclass(frozen=True)
class MaxTerm:
    mu: object
    nu: int
    log_mu: object
    log_terms: tuple
    certificate: str  # "exact", "model", or "heuristic"


def _log_node_increments(s: AWSeries, r, count: int) -> list:
    """ln of max_{|x|=r} |j-th factor of phi| for j < count."""
    a = s.a
    qv = s.q.value()
    out = []
    qj = mpmath.mpf(1)
    if a == 1:
        for _ in range(count):
            out.append(mpmath.log(2 * qj * r + qj * qj + 1))
            qj *= qv
    else:
        aa = abs(a)
        for _ in range(count):
            c = abs((a * qj + 1 / (a * qj)) / 2)
            out.append(mpmath.log(2 * aa * qj * (r + c)))
            qj *= qv
    return out


def log_terms(s: AWSeries, r, ctx: PrecisionCtx = DEFAULT_CTX) -> list:
    """ln(|a_n| max_{|x|=r} |phi_n(x; x0)|) for every stored n (-inf for a_n = 0)."""
    with ctx.working():
        r = mpmath.mpf(r)
        if r <= 0:
            raise InputError("radius must be positive")
        inc = _log_node_increments(s, r, s.K + 1)
        out = []
        acc = mpmath.mpf(0)
        for n, c in enumerate(s.coeffs):
            out.append(mpmath.log(abs(c)) + acc if c != 0 else mpmath.ninf)
            acc += inc[n]
        return out


def maximal_term_detail(s: AWSeries, r, cfg: ComparisonConfig | None = None,
                        ctx: PrecisionCtx = DEFAULT_CTX) -> MaxTerm:
    """Largest term and the largest index attaining it.

    For a series with a tail model, the stored terms must end with ``window``
    consecutive decreases, and for a log-concave model the modelled term just
    past the truncation must already be falling and below the maximum; then
    no later term can win.  A heuristic model only gets the window check.
    """
    cfg = cfg or ComparisonConfig()
    with ctx.working():
        lt = log_terms(s, r, ctx)
        best = max(lt)
        nu = max(n for n, v in enumerate(lt) if v == best)
        cert = "exact"
        tm = s.tail_model
        if tm is not None:
            W = cfg.window
            K = s.K
            if K - nu < W or any(lt[i] >= lt[i - 1] and lt[i] != mpmath.ninf for i in range(K - W + 1, K + 1)):
                raise TruncationTooShort(
                    f"central index {nu} is within {K - nu} of the truncation {K}; "
                    f"need {W} decreasing terms past it (raise --trunc)"
                )
            cert = "heuristic"
            if tm.log_concave:
                inc = _log_node_increments(s, r, K + 2)
                node_k1 = mpmath.fsum(inc[: K + 1])
                m1 = tm.log_abs(K + 1, s.q) + node_k1
                m2 = tm.log_abs(K + 2, s.q) + node_k1 + inc[K + 1]
                if not (m2 < m1 and m1 < best):
                    raise TruncationTooShort(
                        f"the tail model does not certify that terms past index {K} stay below the maximum"
                    )
                cert = "model"
        return MaxTerm(mpmath.exp(best), nu, best, tuple(lt), cert)


def maximal_term(s: AWSeries, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX):
    """(mu, nu) at radius r."""
    mt = maximal_term_detail(s, r, cfg, ctx)
    return mt.mu, mt.nu


# ---------------------------------------------------------------------------
# maximum modulus


def is_all_positive(s: AWSeries) -> bool:
    """Centre 1 and non-negative real coefficients: M(r) is attained at x = -r."""
    if s.a != 1:
        return False
    return all(not isinstance(c, mpmath.mpc) and c >= 0 for c in s.coeffs)


def max_modulus(f, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                samples: int = 256, refine: int = 3):
    """max |f| on |x| = r.

    Exact for series with non-negative coefficients about 1 (evaluated at
    -r).  Otherwise the circle is sampled and the best arcs are refined by
    golden-section search to angular tolerance 2^(-bits/4); the result is
    then a lower estimate.
    """
    with ctx.working():
        r = mpmath.mpf(r)
        if isinstance(f, AWSeries):
            if is_all_positive(f):
                return abs(eval_series(f, -r, ctx)[0])
            s = f

            def mod(theta):
                return abs(eval_series(s, r * mpmath.expj(theta), ctx)[0])
        elif isinstance(f, PointEvaluator):

            def mod(theta):
                return abs(f(lift(r * mpmath.expj(theta), ctx)))
        else:
            raise InputError("max_modulus needs an AWSeries or a PointEvaluator")
        step = 2 * mpmath.pi / samples
        vals = [(mod(i * step), i) for i in range(samples)]
        best = max(v for v, _ in vals)
        tol = mpmath.ldexp(1, -(ctx.bits // 4))
        invphi = (mpmath.sqrt(5) - 1) / 2
        for _, i in sorted(vals, key=lambda t: (-t[0], t[1]))[:refine]:
            lo, hi = (i - 1) * step, (i + 1) * step
            c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
            fc, fd = mod(c), mod(d)
            while hi - lo > tol:
                if fc > fd:
                    hi, d, fd = d, c, fc
                    c = hi - invphi * (hi - lo)
                    fc = mod(c)
                else:
                    lo, c, fc = c, d, fd
                    d = lo + invphi * (hi - lo)
                    fd = mod(d)
            best = max(best, fc, fd)
        return best


# ---------------------------------------------------------------------------
# comparison sequences and q-normality


def log_comparison_seq(cfg: ComparisonConfig, n, ctx: PrecisionCtx = DEFAULT_CTX):
    """(ln alpha_n, ln rho_n)."""
    with ctx.working():
        d = to_mpf(cfg.delta)
        n = mpmath.mpf(n)
        return -(n ** (1 + d)) / (d * (1 + d)), n ** d / d


def comparison_seq(cfg: ComparisonConfig, n, ctx: PrecisionCtx = DEFAULT_CTX):
    """(alpha_n, rho_n) with alpha_n = exp(-n^(1+d)/(d(1+d))), rho_n = exp(n^d/d)."""
    la, lr = log_comparison_seq(cfg, n, ctx)
    with ctx.working():
        return mpmath.exp(la), mpmath.exp(lr)


@dataclass(frozen=True)
class NormalityReport:
    radius: object
    N: int
    normal: bool
    violations: tuple
    log_mu: object
    note: str = "witness fixed at the central index; other witnesses are not searched"


def q_normal_test(s: AWSeries, r, cfg: ComparisonConfig | None = None,
                  ctx: PrecisionCtx = DEFAULT_CTX, mt: MaxTerm | None = None) -> NormalityReport:
    """Check the comparison-sequence envelope with witness N = nu(r).

    Terms are |a_n phi_n(-r; 1)|, the positive product form that equals the
    per-term maximum on |x| = r.
    """
    cfg = cfg or ComparisonConfig()
    mt = mt or maximal_term_detail(s, r, cfg, ctx)
    with ctx.working():
        N = mt.nu
        lt = mt.log_terms
        laN, lrN = log_comparison_seq(cfg, N, ctx)
        eps_tol = ctx.eps(24)
        bad = []
        # prefix sums of 2 q^-k give eps_{n,N} in O(1) each
        qv = s.q.value()
        g = to_mpf(cfg.gamma)
        damp = mpmath.exp(-mpmath.mpf(N) ** g)
        suffix = [mpmath.mpf(0)] * (N + 1)
        for k in range(N - 1, -1, -1):
            suffix[k] = suffix[k + 1] + 2 * qv ** (-k)
        for n, ln in enumerate(lt):
            if ln == mpmath.ninf or n == N:
                continue
            la, _ = log_comparison_seq(cfg, n, ctx)
            bound = lt[N] + (la - laN) + (n - N) * lrN
            if n < N:
                bound += mpmath.log1p(suffix[n] * damp)
            if ln > bound + eps_tol * max(1, abs(bound)):
                bad.append(n)
        return NormalityReport(mpmath.mpf(r), N, not bad, tuple(bad), mt.log_mu)


def decay_check(s: AWSeries, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                mt: MaxTerm | None = None) -> tuple:
    """Indices violating the two-sided Gaussian decay envelope around N = nu(r).

    For k >= 1: |T_{N+k}|/mu <= exp(-k^2 b(N+k)/2); for 0 <= k < N:
    |T_{N-k}|/mu <= (1 + 2 q^(1-N)/((1-q) e^(N^gamma))) exp(-k^2 b(N)/2),
    with b(t) = t^(delta-1).
    """
    cfg = cfg or ComparisonConfig()
    mt = mt or maximal_term_detail(s, r, cfg, ctx)
    with ctx.working():
        N = mt.nu
        lt = mt.log_terms
        d = to_mpf(cfg.delta)
        g = to_mpf(cfg.gamma)
        tol = ctx.eps(24)
        bad = []
        pre = mpmath.mpf(0)
        if N > 0:
            pre = mpmath.log1p(2 * s.q.power(1 - N) / (s.q.one_minus() * mpmath.exp(mpmath.mpf(N) ** g)))
        for n, ln in enumerate(lt):
            if ln == mpmath.ninf:
                continue
            k = n - N
            if k > 0:
                bound = -(mpmath.mpf(k) ** 2) * mpmath.mpf(N + k) ** (d - 1) / 2
            elif N > 0:
                bound = pre - mpmath.mpf(k) ** 2 * mpmath.mpf(N) ** (d - 1) / 2
            else:
                continue
            if ln - mt.log_mu > bound + tol * max(1, abs(bound)):
                bad.append(n)
        return tuple(bad)


# ---------------------------------------------------------------------------
# tail sums and the ratio form


@dataclass(frozen=True)
class TailCheck:
    lhs: object
    scale: object
    ratio: object
    N: int
    kappa: int


def tail_sum_check(s: AWSeries, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                   mt: MaxTerm | None = None) -> TailCheck:
    """Weighted sum of terms at least kappa away from N, relative to its predicted scale."""
    cfg = cfg or ComparisonConfig()
    mt = mt or maximal_term_detail(s, r, cfg, ctx)
    with ctx.working():
        N = mt.nu
        if N == 0:
            raise KappaExceedsN("central index is 0; the tail window is undefined")
        d = to_mpf(cfg.delta)
        b = mpmath.mpf(N) ** (d - 1)
        kappa = int(mpmath.floor(mpmath.sqrt(to_mpf(cfg.beta) / b * mpmath.log(1 / b))))
        if kappa >= N:
            raise KappaExceedsN(f"kappa = {kappa} >= N = {N}; radius too small for the asymptotic regime")
        h = cfg.h
        lq = s.q.log()

        def weight(k):
            if h == 0:
                return mpmath.mpf(0)
            return -h * k * lq + h * mpmath.log(q_bracket(k, s.q, ctx)) if k else mpmath.ninf

        logs = [ln + weight(k) for k, ln in enumerate(mt.log_terms)
                if abs(k - N) >= kappa and ln != mpmath.ninf]
        log_scale = mt.log_mu + weight(N) + (to_mpf(cfg.omega) - 1) / 2 * mpmath.log(b)
        if not logs or all(v == mpmath.ninf for v in logs):
            lhs = mpmath.mpf(0)
            ratio = mpmath.mpf(0)
        else:
            top = max(logs)
            lsum = top + mpmath.log(mpmath.fsum(mpmath.exp(v - top) for v in logs))
            lhs = mpmath.exp(lsum)
            ratio = mpmath.exp(lsum - log_scale)
        return TailCheck(lhs, mpmath.exp(log_scale), ratio, N, kappa)


WV_NORMALIZATIONS = ("corrected", "published")


def wv_ratio(s: AWSeries, n: int, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
             normalization: str = "corrected", mt: MaxTerm | None = None):
    """R = c(n, N) (x/[N]_q)^n (D^n f)(x) / f(x) at x = -r, N = nu(r).

    ``corrected`` uses c = q^((nN - n(n+1)/2)/2), under which R -> 1 along
    normal radii; ``published`` uses the square of that factor.
    """
    if n < 1:
        raise InputError("wv_ratio needs n >= 1")
    if normalization not in WV_NORMALIZATIONS:
        raise InputError(f"normalization must be one of {WV_NORMALIZATIONS}")
    mt = mt or maximal_term_detail(s, r, cfg, ctx)
    N = mt.nu
    if N == 0:
        raise AsymptoticRegimeNotReached("central index is 0; the ratio is undefined")
    with ctx.working():
        x = -mpmath.mpf(r)
        f = eval_series(s, x, ctx)[0]
        if f == 0 or abs(f) < mpmath.ldexp(1, -ctx.total) * mpmath.exp(mt.log_mu):
            raise ZeroDenominator(f"f(-r) vanishes at working precision (r = {mpmath.nstr(r, 10)})")
        d = s
        for _ in range(n):
            d = dq_series(d, ctx)
        dn = eval_series(d, x, ctx)[0]
        expo = mpmath.mpf(n * N) - mpmath.mpf(n * (n + 1)) / 2
        if normalization == "corrected":
            expo /= 2
        c = mpmath.exp(expo * s.q.log())
        R = c * (x / q_bracket(N, s.q, ctx)) ** n * dn / f
        if isinstance(R, mpmath.mpc) and R.imag == 0:
            R = R.real
        return R


# ---------------------------------------------------------------------------
# orders and types


def _coeff_logs(coeffs) -> list:
    return [(n, -mpmath.log(abs(c))) for n, c in enumerate(coeffs) if c != 0]


def log_order_estimate(coeffs, min_nonzero: int = 32, ctx: PrecisionCtx = DEFAULT_CTX):
    """sigma = 1 + 1/(L - 1), L = min over the last half of ln ln(1/|a_n|) / ln n."""
    if isinstance(coeffs, AWSeries):
        coeffs = coeffs.coeffs
    with ctx.working():
        nz = _coeff_logs(coeffs)
        if len(nz) < min_nonzero:
            raise NotTranscendental(
                f"only {len(nz)} non-zero coefficients; the log-order formula needs an infinite tail"
            )
        half = nz[len(nz) // 2:]
        vals = []
        for n, li in half:
            if n < 2:
                continue
            if li <= 0:
                raise CoefficientNotDecaying(f"|a_{n}| >= 1 in the upper half of the stored range")
            vals.append((mpmath.log(li) / mpmath.log(n), n))
        if not vals:
            raise NotTranscendental("too few usable coefficients")
        L, at = min(vals)
        sigma = mpmath.inf if L <= 1 else 1 + 1 / (L - 1)
        diag = {"L": L, "argmin": at, "range": (half[0][0], half[-1][0]), "count": len(nz)}
        return sigma, diag


def profile_log_order(log_radii, nus, top_fraction: float = 0.5, ctx: PrecisionCtx = DEFAULT_CTX):
    """1 + max over the top part of the grid of ln nu / ln ln r."""
    with ctx.working():
        pts = [(mpmath.mpf(lr), nu) for lr, nu in zip(log_radii, nus)]
        start = int(len(pts) * (1 - top_fraction))
        vals = [mpmath.log(nu) / mpmath.log(lr) for lr, nu in pts[start:] if nu > 0 and lr > 1]
        if not vals:
            raise AsymptoticRegimeNotReached("no grid radius with nu > 0 and ln r > 1")
        return 1 + max(vals)


def log_type_bounds(s: AWSeries, radii, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                    slack: Fraction = Fraction(1, 10), top_fraction: float = 0.5):
    """(tau_mu, coeff_limsup, bracket_ok) for a series of log-order 2."""
    cfg = cfg or ComparisonConfig()
    sigma, _ = log_order_estimate(s.coeffs, ctx=ctx)
    with ctx.working():
        if sigma < 2 - to_mpf(slack):
            raise RegimeMismatch(f"log-order estimate {mpmath.nstr(sigma, 6)} < 2; log-type is 0 there")
        radii = [mpmath.mpf(r) for r in radii]
        start = int(len(radii) * (1 - top_fraction))
        taus = []
        for r in radii[start:]:
            mt = maximal_term_detail(s, r, cfg, ctx)
            taus.append(mt.log_mu / mpmath.log(r) ** 2)
        tau = max(taus)
        nz = _coeff_logs(s.coeffs)
        nz = nz[len(nz) // 2:]
        coeff = max(mpmath.mpf(n) ** 2 / li for n, li in nz if li > 0) / 4
        lq = s.q.log_inv()
        sl = to_mpf(slack)
        lower = 1 / (4 / tau + 2 * lq)
        upper_den = 1 / tau - 2 * lq
        upper = mpmath.inf if upper_den <= 0 else 1 / upper_den
        ok = lower * (1 - sl) <= coeff <= upper * (1 + sl)
        return tau, coeff, bool(ok)


def kn_constant(n: int, q: QParam, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX):
    """K_n = ((1 + c)/(1 - c))^(n+1), c = (q^n + q^-n)/(2 e^(n^gamma)); inf when c >= 1."""
    cfg = cfg or ComparisonConfig()
    with ctx.working():
        qv = q.value()
        c = (qv ** n + qv ** (-n)) / (2 * mpmath.exp(mpmath.mpf(n) ** to_mpf(cfg.gamma)))
        if c >= 1:
            return mpmath.inf
        return ((1 + c) / (1 - c)) ** (n + 1)


def mu_M_sandwich(s: AWSeries, r, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                  mt: MaxTerm | None = None, M=None):
    """(lower_ok, upper_ok, K_N): mu <= K_N M and K_N M <= mu (ln mu)^((1-delta)/2 + eps)."""
    cfg = cfg or ComparisonConfig()
    if all(c == 0 for c in s.coeffs[1:]):
        return True, True, mpmath.mpf(1)
    mt = mt or maximal_term_detail(s, r, cfg, ctx)
    with ctx.working():
        if M is None:
            M = max_modulus(s, r, cfg, ctx)
        N = mt.nu
        kn = kn_constant(N, s.q, cfg, ctx) if N > 0 else mpmath.mpf(1)
        lower_ok = mt.log_mu <= mpmath.log(kn) + mpmath.log(M) + ctx.eps(24) * max(1, abs(mt.log_mu))
        if mt.log_mu <= 0 or kn == mpmath.inf:
            upper_ok = False
        else:
            expo = (1 - to_mpf(cfg.delta)) / 2 + to_mpf(cfg.eps)
            upper_ok = mpmath.log(M) + mpmath.log(kn) <= mt.log_mu + expo * mpmath.log(mt.log_mu)
        return bool(lower_ok), bool(upper_ok), kn


# ---------------------------------------------------------------------------
# profiles


def log10_grid(start, step, count) -> list[tuple[str, Fraction]]:
    """Radii 10^(start + i*step), i < count, as (text, exact exponent)."""
    start, step = _frac(start, "radii start"), _frac(step, "radii step")
    if int(count) != count or count < 1:
        raise InputError("radii count must be a positive integer")
    out = []
    for i in range(int(count)):
        e = start + i * step
        text = f"1e{e.numerator}" if e.denominator == 1 else f"10^({e})"
        out.append((text, e))
    return out


def _radius_from_exponent(e: Fraction):
    if e.denominator == 1:
        return mpmath.mpf(10) ** e.numerator
    return mpmath.power(10, to_mpf(e))


CSV_COLUMNS = ("radius", "log10_mu", "nu", "log10_M", "normal", "wv_ratio_re", "wv_ratio_im", "tail_ratio", "status")


@dataclass
class ProfileRow:
    radius: str
    log10_r: object
    log10_mu: object = None
    nu: int | None = None
    log10_M: object = None
    normal: bool | None = None
    wv_ratio: object = None
    tail_ratio: object = None
    kn: object = None
    decay_violations: tuple = ()
    status: list = field(default_factory=list)


def _profile_row(args):
    s, text, e, cfg, ctx, wv_n = args
    with ctx.working():
        r = _radius_from_exponent(e)
        row = ProfileRow(text, to_mpf(e))
        try:
            mt = maximal_term_detail(s, r, cfg, ctx)
        except AWError as exc:
            row.status.append(f"{type(exc).__name__}: {exc}")
            return row
        ln10 = mpmath.log(10)
        row.log10_mu = mt.log_mu / ln10
        row.nu = mt.nu
        try:
            M = max_modulus(s, r, cfg, ctx)
            row.log10_M = mpmath.log10(M) if M > 0 else mpmath.ninf
            if mt.nu > 0:
                row.kn = kn_constant(mt.nu, s.q, cfg, ctx)
        except AWError as exc:
            row.status.append(f"{type(exc).__name__}: {exc}")
        rep = q_normal_test(s, r, cfg, ctx, mt)
        row.normal = rep.normal
        if rep.normal:
            row.decay_violations = decay_check(s, r, cfg, ctx, mt)
        if wv_n:
            try:
                row.wv_ratio = wv_ratio(s, wv_n, r, cfg, ctx, mt=mt)
            except AWError as exc:
                row.status.append(f"{type(exc).__name__}: {exc}")
        try:
            row.tail_ratio = tail_sum_check(s, r, cfg, ctx, mt).ratio
        except AWError as exc:
            row.status.append(f"{type(exc).__name__}: {exc}")
        return row


def build_profile(s: AWSeries, grid, cfg: ComparisonConfig | None = None, ctx: PrecisionCtx = DEFAULT_CTX,
                  wv_n: int = 1, jobs: int = 1) -> list[ProfileRow]:
    """One row per radius of ``grid`` (from :func:`log10_grid`), in grid order.

    Per-radius failures are recorded in the row's status and do not stop the run.
    """
    cfg = cfg or ComparisonConfig()
    tasks = [(s, text, e, cfg, ctx, wv_n) for text, e in grid]
    if jobs > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_profile_row, tasks))
    return [_profile_row(t) for t in tasks]


def profile_violations(rows: list[ProfileRow]) -> list[str]:
    """Monotonicity failures of nu and mu along the grid."""
    out = []
    prev = None
    for row in rows:
        if row.nu is None:
            continue
        if prev is not None:
            if row.nu < prev.nu:
                out.append(f"nu decreases at {row.radius}: {prev.nu} -> {row.nu}")
            if prev.nu > 0 and row.log10_mu < prev.log10_mu:
                out.append(f"mu decreases at {row.radius}")
        prev = row
    return out


def _cell(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return format_decimal(v, digits)


def profile_to_csv(rows: list[ProfileRow], digits: int = 20, provenance: str | None = None) -> str:
    buf = io.StringIO()
    if provenance:
        buf.write(f"# {provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        R = row.wv_ratio
        re = im = None
        if R is not None:
            R = mpmath.mpmathify(R)
            re = R.real if isinstance(R, mpmath.mpc) else R
            im = R.imag if isinstance(R, mpmath.mpc) else mpmath.mpf(0)
        w.writerow([
            row.radius,
            _cell(row.log10_mu, digits),
            _cell(row.nu, digits),
            _cell(row.log10_M, digits),
            _cell(row.normal, digits),
            _cell(re, digits),
            _cell(im, digits),
            _cell(row.tail_ratio, digits),
            "; ".join(row.status) if row.status else "ok",
        ])
    return buf.getvalue()
