from __future__ import annotations

import json
import random
from fractions import Fraction

import mpmath
import pytest

from awcalc.awop import PointEvaluator, PolyRep, apply_dq
from awcalc.awseries import (
    AWSeries,
    Convergence,
    PowerSeries,
    TailModel,
    aw_to_power,
    classify_convergence,
    dq_series,
    eval_series,
    expand_from_evaluator,
    phi_eval,
    phi_evaluator,
    phi_power_expand,
    power_to_aw,
    read_series,
    series_from_json,
    series_to_json,
    tkn_bound_constant,
    tkn_closed,
    tkn_table,
    write_series,
)
from awcalc.errors import InputError, MissingTailModel, ProbeIsNode
from awcalc.numkit import PrecisionCtx, QParam
from awcalc.points import lift

CTX = PrecisionCtx(512, 64)
QH = QParam("1/2")
C1 = lift(1, CTX)


def rel_close(a, b, slack=32):
    with CTX.working():
        return abs(a - b) <= CTX.eps(slack) * max(abs(b), abs(a), mpmath.mpf(0)) or a == b


def test_phi_examples():
    assert phi_eval(0, "0.3", C1, QH, CTX) == 1
    assert phi_eval(1, 0, C1, QH, CTX) == 2
    assert phi_power_expand(0, C1, QH, CTX).coeffs == PolyRep([1]).coeffs
    p1 = phi_power_expand(1, C1, QH, CTX)
    assert [float(c) for c in p1.coeffs] == [2.0, -2.0]


def test_phi_root_form_cross_check():
    for k in range(12):
        for x in ("-7.5", "0.2", "3"):
            phi_eval(k, x, C1, QH, CTX, cross_check=True)
    other = lift("2.5", CTX)
    for k in range(8):
        phi_eval(k, "-1.5", other, QParam("0.3"), CTX, cross_check=True)


def test_phi_power_expand_matches_product():
    rng = random.Random(3)
    for k in range(10):
        p = phi_power_expand(k, C1, QH, CTX)
        for _ in range(3):
            x = mpmath.mpf(rng.uniform(-5, 5))
            with CTX.working():
                assert rel_close(p(x), phi_eval(k, x, C1, QH, CTX), 40)
    with pytest.raises(InputError):
        phi_power_expand(600, C1, QH, CTX)


def test_tkn_examples():
    t = tkn_table(5, QH, CTX)
    assert t.get(3, 0) == 1 and t.get(2, 3) == 0
    assert rel_close(t.get(1, 1), mpmath.mpf("-0.5"))
    assert rel_close(t.get(2, 1), mpmath.mpf("-1.125"))
    assert rel_close(t.get(2, 2), mpmath.mpf("0.5"))
    assert rel_close(tkn_closed(1, 1, QH, CTX), mpmath.mpf("-0.5"))
    assert rel_close(tkn_closed(2, 2, QH, CTX), mpmath.mpf("0.5"))
    assert rel_close(tkn_closed(5, 2, QH, CTX), t.get(5, 2))


@pytest.mark.parametrize("qs", ["0.3", "0.5", "0.7"])
def test_tkn_closed_form_and_laws(qs):
    q = QParam(qs)
    t = tkn_table(30, q, CTX)
    kc = tkn_bound_constant(q, CTX)
    with CTX.working():
        for k in range(31):
            for n in range(k + 1):
                v = t.get(k, n)
                assert (-1) ** n * v >= 0
                bound = kc * q.value() ** (Fraction(n * (n + 1), 2) - n * k)
                assert (-1) ** n * v <= bound
                if 1 <= n and k <= 20:
                    c = tkn_closed(k, n, q, CTX)
                    tol = CTX.eps(32) * (abs(v) if v != 0 else 1)
                    assert abs(c - v) <= tol


def test_power_to_aw_examples():
    s = power_to_aw(PowerSeries((mpmath.mpf(7),)), QH, CTX)
    assert s.coeffs == (7,)
    s = power_to_aw(PowerSeries((0, 1)), QH, CTX)
    assert s.coeffs[0] == 1 and rel_close(s.coeffs[1], mpmath.mpf("-0.5"))
    assert s.center.x == 1


def test_monomial_round_trip():
    ps = PowerSeries.from_poly(PolyRep.monomial(5))
    s = power_to_aw(ps, QH, CTX)
    t = tkn_table(5, QH, CTX)
    for n in range(6):
        assert rel_close(s.coeffs[n], t.get(5, n))
    rng = random.Random(9)
    with CTX.working():
        for _ in range(10):
            x = mpmath.mpf(rng.uniform(-3, 3))
            val, tail = eval_series(s, x, CTX)
            assert tail == 0
            assert abs(val - x ** 5) <= CTX.eps(32) * max(1, abs(x) ** 5)
        assert rel_close(eval_series(s, 2, CTX)[0], mpmath.mpf(32))
    back = aw_to_power(s, CTX)
    with CTX.working():
        for k, c in enumerate(back.coeffs):
            assert abs(c - (1 if k == 5 else 0)) <= CTX.eps(32)


def test_aw_to_power_examples():
    s = AWSeries(C1, (mpmath.mpf(1),), QH)
    assert list(aw_to_power(s, CTX).coeffs) == [1]
    s = AWSeries(C1, (mpmath.mpf(0), mpmath.mpf(1)), QH)
    assert [float(c) for c in aw_to_power(s, CTX).coeffs] == [2.0, -2.0]


def test_rigorous_conversion_needs_certified_tail():
    ps = PowerSeries((1, 1))
    with pytest.raises(MissingTailModel):
        power_to_aw(ps, QH, CTX, rigorous=True)
    with pytest.raises(MissingTailModel):
        power_to_aw(PowerSeries((1, 1), TailModel("heuristic")), QH, CTX, rigorous=True)
    s = power_to_aw(PowerSeries((1, 1), TailModel("gauss-q")), QH, CTX, rigorous=True)
    assert len(s.meta["tail_bounds"]) == 2
    assert all(b > 0 for b in s.meta["tail_bounds"])


@pytest.mark.parametrize("m", [0, 1, 2, 5, 11, 20, 30])
def test_delta_recovery(m):
    s = expand_from_evaluator(phi_evaluator(m, C1, QH, CTX), C1, m + 4, QH, CTX)
    scales = s.meta["scales"]
    with CTX.working():
        for n, c in enumerate(s.coeffs):
            if n == m:
                assert abs(c - 1) <= CTX.eps(32)
            else:
                assert abs(c) <= CTX.eps(32) * scales[n]


def test_expand_constant():
    s = expand_from_evaluator(PointEvaluator(lambda _: mpmath.mpf(4)), C1, 6, QH, CTX)
    assert s.coeffs[0] == 4
    for c, sc in zip(s.coeffs[1:], s.meta["scales"][1:]):
        assert abs(c) <= CTX.eps(32) * sc


@pytest.mark.parametrize("d", range(13))
def test_pipeline_equivalence(d):
    mono = PolyRep.monomial(d)
    via_table = power_to_aw(PowerSeries.from_poly(mono), QH, CTX)
    via_nodes = expand_from_evaluator(mono.evaluator(), C1, d, QH, CTX)
    with CTX.working():
        for a, b, sc in zip(via_table.coeffs, via_nodes.coeffs, via_nodes.meta["scales"]):
            assert abs(a - b) <= CTX.eps(32) * max(abs(a), sc)


def test_eval_constant_and_tail_bound():
    s = AWSeries(C1, (mpmath.mpf(3),), QH)
    assert eval_series(s, "12.5", CTX) == (3, 0)
    with CTX.working():
        coeffs = tuple(QH.value() ** (n * (n + 1)) for n in range(61))
    s = AWSeries(C1, coeffs, QH, TailModel("gauss-q"))
    val, tail = eval_series(s, -10, CTX)
    assert 0 < tail < 1e-20
    short = AWSeries(C1, coeffs[:30], QH, TailModel("gauss-q"))
    with CTX.working():
        assert abs(eval_series(short, -10, CTX)[0] - val) <= eval_series(short, -10, CTX)[1]


def test_dq_series_examples():
    const = dq_series(AWSeries(C1, (mpmath.mpf(3),), QH), CTX)
    assert all(c == 0 for c in const.coeffs)
    d1 = dq_series(AWSeries(C1, (mpmath.mpf(0), mpmath.mpf(1)), QH), CTX)
    assert d1.coeffs == (-2,)
    with CTX.working():
        assert rel_close(d1.center.x, (QH.sqrt() + 1 / QH.sqrt()) / 2, 8)
    p = lift("3.5", CTX)
    with CTX.working():
        direct = apply_dq(phi_evaluator(1, C1, QH, CTX), p, QH, CTX)
    assert rel_close(direct, mpmath.mpf(-2), 24)


def test_dq_series_termwise():
    rng = random.Random(21)
    for K in (3, 8, 12):
        coeffs = tuple(mpmath.mpf(rng.randint(-9, 9)) for _ in range(K + 1))
        s = AWSeries(C1, coeffs, QH)
        ds = dq_series(s, CTX)
        for _ in range(10):
            p = lift(mpmath.mpf(rng.uniform(-6, 6)), CTX)
            with CTX.working():
                a = eval_series(ds, p, CTX)[0]
                b = apply_dq(s.evaluator(CTX), p, QH, CTX)
                assert abs(a - b) <= CTX.eps(24) * max(1, abs(b), abs(a))


def test_classify_convergence():
    with CTX.working():
        good = AWSeries(C1, tuple(QH.value() ** (n * n) for n in range(80)), QH)
        bad = AWSeries(C1, tuple(QH.value() ** (-n * n) for n in range(80)), QH)
    assert classify_convergence(good, "-3.3", CTX) is Convergence.CONVERGES_EVERYWHERE
    assert classify_convergence(bad, "-3.3", CTX) is Convergence.DIVERGES_OFF_NODES
    poly = AWSeries(C1, (mpmath.mpf(1), mpmath.mpf(2)) + (mpmath.mpf(0),) * 10, QH)
    assert classify_convergence(poly, "7", CTX) is Convergence.CONVERGES_EVERYWHERE
    with pytest.raises(ProbeIsNode):
        classify_convergence(good, 1, CTX)


def test_json_round_trip(tmp_path):
    s = power_to_aw(PowerSeries.from_poly(PolyRep([1, -2, 0, 3])), QH, CTX)
    s = AWSeries(s.center, s.coeffs, s.q, TailModel("stretched-exp", (("gamma", "2"),)))
    doc = series_to_json(s, CTX, {"tool": "test"})
    assert list(doc) == ["q", "center_x", "coefficients", "tail_model", "provenance"]
    path = tmp_path / "s.json"
    write_series(s, path, CTX)
    back = read_series(path, CTX)
    assert back.q.exact == s.q.exact and back.tail_model == s.tail_model
    for a, b in zip(back.coeffs, s.coeffs):
        assert rel_close(a, b, 16)
    again = tmp_path / "t.json"
    write_series(back, again, CTX)
    assert again.read_text() == path.read_text()


def test_json_complex_and_center_z():
    z = mpmath.mpf(-2)
    doc = {"coefficients": [["1", "2"], "3"], "center_z": "-2", "q": "0.25"}
    s = series_from_json(doc, CTX)
    assert s.center.z == z and s.coeffs[0] == mpmath.mpc(1, 2)
    assert list(series_to_json(s, CTX))[:3] == ["q", "center_x", "coefficients"]


def test_json_errors(tmp_path):
    with pytest.raises(InputError, match="coefficients"):
        series_from_json({"q": "0.5"}, CTX)
    with pytest.raises(InputError, match="'q'"):
        series_from_json({"coefficients": ["1"]}, CTX)
    with pytest.raises(InputError):
        series_from_json({"q": "0.5", "coefficients": [1.5]}, CTX)
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(InputError):
        read_series(bad, CTX)
    with pytest.raises(InputError):
        read_series(tmp_path / "missing.json", CTX)
    json.dumps(series_to_json(AWSeries(C1, (mpmath.mpf(1),), QH), CTX))
