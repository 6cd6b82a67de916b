"""Arbitrary-precision Askey-Wilson calculus and growth diagnostics."""

from __future__ import annotations

__version__ = "0.1.0"

from .awdeq import AWDiffEq, NewtonPolygon, growth_certificate, newton_polygon, predicted_nu, residual
from .awop import (
    Form,
    PointEvaluator,
    PolyRep,
    apply_aq,
    apply_dq,
    apply_eta,
    dq_iterated,
    dq_nested,
    dq_poly,
    leibniz_rhs,
)
from .awseries import (
    AWSeries,
    PowerSeries,
    TailModel,
    TknTable,
    aw_to_power,
    classify_convergence,
    dq_series,
    eval_series,
    expand_from_evaluator,
    phi_eval,
    phi_power_expand,
    power_to_aw,
    tkn_closed,
    tkn_table,
)
from .errors import *  # noqa: F401,F403
from .growth import (
    CoefficientFamily,
    ComparisonConfig,
    comparison_seq,
    log_order_estimate,
    log_type_bounds,
    max_modulus,
    maximal_term,
    mu_M_sandwich,
    q_normal_test,
    tail_sum_check,
    wv_ratio,
)
from .numkit import PrecisionCtx, QParam, q_binomial, q_bracket, q_factorial, q_pochhammer
from .points import UnitizedPoint, lift, shift
