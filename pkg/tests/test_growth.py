from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest

from awcalc.awop import PointEvaluator, PolyRep
from awcalc.awseries import AWSeries, eval_series, phi_eval
from awcalc.errors import (
    AsymptoticRegimeNotReached,
    CoefficientNotDecaying,
    InputError,
    KappaExceedsN,
    NotTranscendental,
    RegimeMismatch,
    TruncationTooShort,
)
from awcalc.growth import (
    CSV_COLUMNS,
    CoefficientFamily,
    ComparisonConfig,
    build_profile,
    comparison_seq,
    decay_check,
    kn_constant,
    log10_grid,
    log_order_estimate,
    log_type_bounds,
    max_modulus,
    maximal_term,
    maximal_term_detail,
    mu_M_sandwich,
    profile_to_csv,
    profile_violations,
    q_normal_test,
    tail_sum_check,
    wv_ratio,
)
from awcalc.numkit import PrecisionCtx, QParam
from awcalc.points import from_z, lift

CTX = PrecisionCtx(512, 64)
QH = QParam("1/2")
CFG = ComparisonConfig()
C1 = lift(1, CTX)
SE2 = CoefficientFamily("stretched-exp", Fraction(2))
GQ = CoefficientFamily("gauss-q")


def _r(e):
    with CTX.working():
        return mpmath.mpf(10) ** e


def _series(values):
    with CTX.working():
        return AWSeries(C1, tuple(mpmath.mpf(v) for v in values), QH)


@pytest.fixture(scope="module")
def se2():
    return SE2.series(QH, 200, CTX)


def test_config_validation():
    assert CFG.m0(QH) == 1
    for bad in ({"delta": "1"}, {"gamma": "1"}, {"beta": "0"}, {"omega": "10"}, {"h": -1}):
        with pytest.raises(InputError):
            ComparisonConfig(**bad)


def test_maximal_term_small_cases():
    for text in ("0.5", "3", "1e40"):
        with CTX.working():
            r = mpmath.mpf(text)
            mu, nu = maximal_term(_series([1, 1]), r, CFG, CTX)
            assert nu == 1
            assert abs(mu - 2 * (r + 1)) <= CTX.eps(8) * mu
        assert maximal_term(_series([5]), r, CFG, CTX) == (5, 0)


def test_maximal_term_ties_go_up():
    # a_1 = 1/4 gives term 2(r + 1)/4 = 1 at r = 1, tying a_0 = 1
    mu, nu = maximal_term(_series([1, "0.25"]), 1, CFG, CTX)
    assert nu == 1


def _brute_force_logs(fam, r, nmax):
    """Direct log of |a_n| 2^n q^(n(n-1)/2) prod_{k<n} (r + (q^k + q^-k)/2)."""
    with CTX.working():
        q = mpmath.mpf(1) / 2
        out = []
        acc = mpmath.mpf(0)
        for n in range(nmax + 1):
            la = -mpmath.mpf(n) ** (1 + fam.gamma.numerator / mpmath.mpf(fam.gamma.denominator))
            out.append(la + n * mpmath.log(2) + n * (n - 1) / 2 * mpmath.log(q) + acc)
            acc += mpmath.log(r + (q ** n + q ** (-n)) / 2)
        return out


def test_maximal_term_matches_exhaustive_scan(se2):
    r = _r(100)
    mt = maximal_term_detail(se2, r, CFG, CTX)
    logs = _brute_force_logs(SE2, r, 10 ** 4)
    best = max(logs)
    assert mt.nu == max(n for n, v in enumerate(logs) if v == best)
    with CTX.working():
        assert abs(mt.log_mu - best) <= CTX.eps(32) * abs(best)
    assert mt.certificate == "model"


def test_truncation_too_short():
    short = SE2.series(QH, 40, CTX)
    with pytest.raises(TruncationTooShort):
        maximal_term(short, _r(100), CFG, CTX)


def test_scaling_equivariance(se2):
    scaled = se2.scaled(3, CTX)
    for e in (10, 100, 500):
        with CTX.working():
            r = _r(e)
            mu, nu = maximal_term(se2, r, CFG, CTX)
            mu3, nu3 = maximal_term(scaled, r, CFG, CTX)
            assert nu3 == nu
            assert abs(mu3 - 3 * mu) <= CTX.eps(24) * mu3


def test_max_modulus_examples(se2):
    assert max_modulus(PointEvaluator(lambda _: mpmath.mpf(-7)), 5, CFG, CTX) == 7
    r = mpmath.mpf("2.5")
    x5 = PolyRep.monomial(5).evaluator()
    m = max_modulus(x5, r, CFG, CTX)
    with CTX.working():
        assert abs(m - r ** 5) <= 1e-20 * r ** 5
        big = _r(50)
        assert max_modulus(se2, big, CFG, CTX) == abs(eval_series(se2, -big, CTX)[0])


def test_max_modulus_sampling_for_mixed_signs():
    alt = CoefficientFamily("stretched-exp", Fraction(2), alternating=True).series(QH, 40, CTX)
    with CTX.working():
        r = mpmath.mpf(3)
        m = max_modulus(alt, r, CFG, CTX, samples=64)
        # the alternating series attains at least its value on the positive axis
        assert m >= abs(eval_series(alt, r, CTX)[0])


def test_mu_below_M_for_positive_series(se2):
    for e in (10, 200, 700):
        r = _r(e)
        mu, _ = maximal_term(se2, r, CFG, CTX)
        assert mu <= max_modulus(se2, r, CFG, CTX)


def test_comparison_sequences():
    a0, r0 = comparison_seq(CFG, 0, CTX)
    assert r0 == 1 and a0 == 1
    with CTX.working():
        assert abs(comparison_seq(CFG, 1, CTX)[1] - mpmath.e ** 2) <= CTX.eps(8)
        prev = mpmath.mpf(0)
        for n in range(1, 101):
            a_prev = comparison_seq(CFG, n - 1, CTX)[0]
            a_n, rho = comparison_seq(CFG, n, CTX)
            a_next = comparison_seq(CFG, n + 1, CTX)[0]
            assert rho > prev
            assert a_prev / a_n < rho < a_n / a_next
            prev = rho


def test_normality_of_constant_series():
    rep = q_normal_test(_series([4]), _r(20), CFG, CTX)
    assert rep.normal and rep.N == 0 and rep.violations == ()


def test_normal_fraction_on_stretched_exp(se2):
    normal = 0
    with CTX.working():
        for i in range(200):
            r = mpmath.power(10, 3 + mpmath.mpf(297) * i / 199)
            rep = q_normal_test(se2, r, CFG, CTX)
            normal += rep.normal
            if rep.normal:
                assert decay_check(se2, r, CFG, CTX) == ()
    assert normal / 200 > 0.9


def test_tail_sum_kappa_and_polynomial_lhs():
    s = _series([0] * 100 + [1])
    tc = tail_sum_check(s, _r(50), CFG, CTX)
    assert tc.N == 100 and tc.kappa == 15
    assert tc.lhs == 0
    spread = _series([0] * 100 + [1] * 6)
    assert tail_sum_check(spread, _r(500), CFG, CTX).lhs == 0
    with pytest.raises(KappaExceedsN):
        tail_sum_check(_series([0, 0, 0, 1]), 10, CFG, CTX)
    with pytest.raises(KappaExceedsN):
        tail_sum_check(_series([1]), 10, CFG, CTX)


def test_tail_ratio_trend(se2):
    lo = tail_sum_check(se2, _r(30), CFG, CTX).ratio
    hi = tail_sum_check(se2, _r(300), CFG, CTX).ratio
    assert hi < lo


def test_wv_ratio_single_term_closed_form():
    m = 12
    s = _series([0] * m + [1])
    r = _r(40)
    q = QH
    with CTX.working():
        x = -r
        for n in (1, 2, 3):
            got = wv_ratio(s, n, r, CFG, CTX)
            lead = mpmath.mpf(1)
            for i in range(n):
                lead *= -2 * q.half_power(i) * (1 - q.value() ** (m - i)) / q.one_minus()
            shifted = from_z(q.half_power(n), CTX)
            dn = lead * phi_eval(m - n, x, shifted, q, CTX)
            bracket = (1 - q.value() ** m) / q.one_minus()
            want = q.value() ** ((mpmath.mpf(n * m) - n * (n + 1) / mpmath.mpf(2)) / 2) \
                * (x / bracket) ** n * dn / phi_eval(m, x, C1, q, CTX)
            assert abs(got - want) <= CTX.eps(32) * abs(want)


def test_wv_ratio_guards_and_trend(se2):
    with pytest.raises(AsymptoticRegimeNotReached):
        wv_ratio(_series([3]), 1, 100, CFG, CTX)
    with pytest.raises(InputError):
        wv_ratio(se2, 0, 100, CFG, CTX)
    with CTX.working():
        lo = abs(wv_ratio(se2, 1, _r(10), CFG, CTX) - 1)
        hi = abs(wv_ratio(se2, 1, _r(1000), CFG, CTX) - 1)
    assert hi < lo


def test_log_order_examples():
    with CTX.working():
        cube = [mpmath.exp(-mpmath.mpf(n) ** 3) for n in range(200)]
        square = [mpmath.exp(-mpmath.mpf(n) ** 2) for n in range(200)]
    s3, diag = log_order_estimate(cube, ctx=CTX)
    s2, _ = log_order_estimate(square, ctx=CTX)
    assert abs(s3 - 1.5) < 1e-3 and diag["count"] == 200
    assert abs(s2 - 2) < 1e-3
    with pytest.raises(NotTranscendental):
        log_order_estimate([1, 2, 3], ctx=CTX)
    with pytest.raises(CoefficientNotDecaying):
        log_order_estimate([2] * 64, ctx=CTX)


def test_log_type_bounds():
    gq = GQ.series(QH, 1400, CTX)
    radii = [_r(10 * k) for k in range(1, 31)]
    tau, coeff, ok = log_type_bounds(gq, radii, CFG, CTX)
    with CTX.working():
        assert abs(coeff - 1 / (4 * mpmath.log(2))) <= 1e-2 * coeff
    assert ok
    with pytest.raises(RegimeMismatch):
        log_type_bounds(SE2.series(QH, 200, CTX), radii, CFG, CTX)


def test_kn_constants_decrease_to_one():
    vals = [kn_constant(n, QH, CFG, CTX) for n in range(1, 201)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    # strict while K_n - 1 is resolvable at working precision
    with CTX.working():
        resolved = [v for v in vals if v - 1 > CTX.eps(8)]
    assert len(resolved) > 20
    assert all(b < a for a, b in zip(resolved, resolved[1:]))
    assert all(v >= 1 for v in vals) and vals[-1] - 1 < 1e-50


def test_mu_M_sandwich(se2):
    lower, _, kn = mu_M_sandwich(se2, _r(100), CFG, CTX)
    assert lower and kn >= 1
    assert mu_M_sandwich(_series([2]), 10, CFG, CTX) == (True, True, 1)


def test_profile_and_csv(se2):
    grid = log10_grid(10, 10, 6)
    assert grid[0] == ("1e10", Fraction(10))
    rows = build_profile(se2, grid, CFG, CTX)
    assert profile_violations(rows) == []
    nus = [row.nu for row in rows]
    assert nus == sorted(nus)
    text = profile_to_csv(rows, provenance="test")
    lines = text.splitlines()
    assert lines[0] == "# test"
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2 + len(grid)
    assert profile_to_csv(build_profile(se2, grid, CFG, CTX, jobs=2), provenance="test") == text


def test_profile_records_failures_in_rows():
    short = SE2.series(QH, 10, CTX)
    rows = build_profile(short, log10_grid(100, 1, 1), CFG, CTX)
    assert rows[0].nu is None and "TruncationTooShort" in rows[0].status[0]


def test_polynomial_profile_saturates():
    poly = _series([1, 2, 3])
    rows = build_profile(poly, log10_grid(10, 10, 3), CFG, CTX)
    assert [row.nu for row in rows] == [2, 2, 2]
