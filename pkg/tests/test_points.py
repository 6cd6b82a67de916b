from __future__ import annotations

import mpmath
from hypothesis import given, settings
from hypothesis import strategies as st

from awcalc.numkit import PrecisionCtx, QParam
from awcalc.points import from_z, lift, shift

CTX = PrecisionCtx(256, 64)
Q = QParam("1/4")


def test_lift_examples():
    assert lift(1, CTX).z == 1
    assert lift(-1, CTX).z == -1
    assert lift("1.25", CTX).z == 2


def test_lift_on_cut_uses_upper_half_plane():
    p = lift("0.5", CTX)
    assert p.z.imag > 0
    with CTX.working():
        assert abs(abs(p.z) - 1) < CTX.eps(4)


def test_lift_negative_real_is_outside_unit_circle():
    p = lift(-3, CTX)
    with CTX.working():
        assert abs(p.z) >= 1
        assert abs(p.z - (-3 - mpmath.sqrt(8))) < CTX.eps(4)


def test_shift_examples():
    assert shift(lift(1, CTX), 1, Q, CTX).x == mpmath.mpf("1.25")
    assert shift(lift(1, CTX), 2, Q, CTX).x == mpmath.mpf("2.125")
    p = lift("1.25", CTX)
    assert shift(p, 0, Q, CTX) is p


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=2, max_value=1e6), st.booleans())
def test_round_trip(x, neg):
    x = -x if neg else x
    p = lift(x, CTX)
    with CTX.working():
        assert abs(p.x - x) <= CTX.eps(8) * abs(x)
        assert abs(p.z) >= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(-10, 10), st.integers(-10, 10))
def test_group_law(a, b):
    p = lift("0.3", CTX)
    assert shift(shift(p, a, Q, CTX), b, Q, CTX).z == shift(p, a + b, Q, CTX).z


def test_interpolation_nodes_distinct():
    q = QParam("1/2")
    p = lift(1, CTX)
    xs = [shift(p, 2 * j, q, CTX).x for j in range(101)]
    with CTX.working():
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                assert abs(xs[i] - xs[j]) > CTX.eps(8) * abs(xs[j])


def test_from_z_keeps_branch():
    p = from_z(mpmath.mpf("0.5"), CTX)
    assert p.x == mpmath.mpf("1.25") and p.z == mpmath.mpf("0.5")
