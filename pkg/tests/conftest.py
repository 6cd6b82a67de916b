from __future__ import annotations

import pytest

from awcalc.numkit import PrecisionCtx, QParam


@pytest.fixture
def ctx():
    return PrecisionCtx(512, 64)


@pytest.fixture
def small_ctx():
    return PrecisionCtx(128, 32)


@pytest.fixture
def q_half():
    return QParam("1/2")


@pytest.fixture
def q_quarter():
    return QParam("1/4")
