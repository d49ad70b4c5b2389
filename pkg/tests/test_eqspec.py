import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddestab.certificates import EXACT, SAMPLED
from ddestab.eqspec import (CoefficientFn, DelayFn, EquationSpec, NormContext,
                            SpecError, inf_norm, lag_bounds, one_over_e_check,
                            sup_norm)


# --- coefficients -----------------------------------------------------------

def test_constant_coefficient_declared_bounds_equal_value():
    c = CoefficientFn.constant(3.0)
    assert c.declared_sup == c.declared_inf == 3.0
    assert c(17.2) == 3.0


def test_expression_coefficient_constant_folds():
    c = CoefficientFn.from_expression("3")
    assert c.is_constant and c.value == 3.0
    c2 = CoefficientFn.from_expression("2 + 1")
    assert c2.is_constant and c2.value == 3.0


def test_expression_coefficient_evaluates():
    c = CoefficientFn.from_expression("2 + 0.5*sin(t)")
    assert not c.is_constant
    assert c(0.0) == 2.0
    np.testing.assert_allclose(c.sample([0.0, math.pi / 2]), [2.0, 2.5])


def test_coefficient_from_any_forms():
    assert CoefficientFn.from_any(3).value == 3.0
    assert CoefficientFn.from_any("t + 1")(1.0) == 2.0
    c = CoefficientFn.from_any({"expr": "1.5 + 0.5*sin(t)", "sup": 2.0, "inf": 1.0})
    assert c.declared_sup == 2.0 and c.declared_inf == 1.0
    with pytest.raises(SpecError):
        CoefficientFn.from_any(True)
    with pytest.raises(SpecError):
        CoefficientFn.from_any({"bogus": 1})


# --- delays -----------------------------------------------------------------

def test_affine_delay_simplifies_to_constant_lag():
    d = DelayFn.from_expression("t - 0.1")
    assert d.kind == "constant_lag" and d.lag == 0.1
    assert d.exact_lag() == Fraction(0.1)


def test_identity_delay():
    d = DelayFn.from_expression("t")
    assert d.is_identity
    assert d(5.0) == 5.0
    assert d.exact_lag() == 0


def test_delay_with_constant_subtree_folds():
    d = DelayFn.from_expression("t - (0.1 + 0.2)")
    assert d.kind == "constant_lag"
    assert d.lag == pytest.approx(0.3)


def test_negative_constant_lag_rejected():
    with pytest.raises(SpecError):
        DelayFn.constant_lag(-0.5)
    with pytest.raises(SpecError):
        DelayFn.from_expression("t - (-0.5)")


def test_expression_delay_kept_symbolic():
    d = DelayFn.from_expression("t - (0.1 + 0.05*sin(t))")
    assert d.kind == "expression"
    assert d(0.0) == pytest.approx(-0.1)


# --- norms ------------------------------------------------------------------

def test_sup_norm_constant_exact():
    rep = sup_norm(CoefficientFn.constant(3.0))
    assert rep.value == 3.0 and rep.exactness == EXACT
    rep0 = sup_norm(CoefficientFn.constant(0.0))
    assert rep0.value == 0.0 and rep0.exactness == EXACT
    # norms are of |f|
    assert sup_norm(CoefficientFn.constant(-3.0)).value == 3.0


def test_sup_norm_sampled_sine():
    # analytic sup of 2 + 0.5 sin t is 2.5; the oracle is grid refinement
    f = CoefficientFn.from_expression("2 + 0.5*sin(t)")
    rep = sup_norm(f, from_=0.0, window=100.0, grid=100_000)
    assert rep.exactness == SAMPLED
    assert rep.window == (0.0, 100.0) and rep.grid_points == 100_000
    assert rep.value == pytest.approx(2.5, abs=1e-6)
    assert rep.value <= 2.5  # sampled sup is a lower bound of the true sup


def test_sup_norm_declared_band_exact():
    f = CoefficientFn.from_any({"expr": "1.5 + 0.5*sin(t)", "sup": 2.0, "inf": 1.0})
    rep = sup_norm(f)
    assert rep.value == 2.0 and rep.exactness == EXACT


def test_inf_norm():
    assert inf_norm(CoefficientFn.constant(-1.5)).value == -1.5
    f = CoefficientFn.from_expression("2 + 0.5*sin(t)")
    rep = inf_norm(f, from_=0.0, window=100.0, grid=100_000)
    assert rep.exactness == SAMPLED
    assert rep.value == pytest.approx(1.5, abs=1e-6)
    assert rep.value >= 1.5  # sampled inf is an upper bound of the true inf


@given(st.integers(min_value=2, max_value=400))
@settings(max_examples=60, deadline=None)
def test_sup_norm_monotone_under_grid_refinement(n):
    # a refined grid that nests the coarse one never loses sampled sup
    f = CoefficientFn.from_expression("2 + 0.5*sin(3*t) - cos(t/2)")
    coarse = sup_norm(f, from_=0.0, window=30.0, grid=n).value
    fine = sup_norm(f, from_=0.0, window=30.0, grid=2 * n - 1).value
    assert fine >= coarse - 1e-10


# --- lag bounds ---------------------------------------------------------------

def test_lag_bounds_constant_and_identity():
    rep = lag_bounds(DelayFn.constant_lag(0.1))
    assert rep.value == 0.1 and rep.exactness == EXACT
    rep0 = lag_bounds(DelayFn.identity())
    assert rep0.value == 0.0 and rep0.exactness == EXACT


def test_lag_bounds_sampled():
    # analytic max of 0.1 + 0.05 sin t is 0.15; oracle is refinement
    d = DelayFn.from_expression("t - (0.1 + 0.05*sin(t))")
    rep = lag_bounds(d, from_=0.0, window=100.0, grid=100_000)
    assert rep.exactness == SAMPLED
    assert rep.value == pytest.approx(0.15, abs=1e-6)
    assert rep.value <= 0.15


def test_lag_bounds_rejects_future_delay():
    d = DelayFn.from_expression("t + 0.1*sin(t)")
    with pytest.raises(SpecError, match="g\\(t\\) <= t"):
        lag_bounds(d, from_=0.0, window=10.0, grid=101)


# --- 1/e positivity test ------------------------------------------------------

def test_one_over_e_constant_cases():
    a3 = CoefficientFn.constant(3.0)
    cert = one_over_e_check(a3, DelayFn.constant_lag(0.1))
    assert cert.applicable and cert.satisfied
    assert cert.lhs == pytest.approx(0.3)
    assert cert.margin == pytest.approx(1 / math.e - 0.3, abs=1e-12)
    assert cert.exactness == EXACT

    cert2 = one_over_e_check(a3, DelayFn.constant_lag(0.2))
    assert cert2.applicable and not cert2.satisfied
    assert cert2.lhs == pytest.approx(0.6)

    cert3 = one_over_e_check(CoefficientFn.constant(0.0), DelayFn.constant_lag(5.0))
    assert cert3.satisfied


def test_one_over_e_identity_delay_trivial():
    cert = one_over_e_check(CoefficientFn.constant(7.0), DelayFn.identity())
    assert cert.satisfied and cert.lhs == 0.0


def test_one_over_e_negative_coefficient_inapplicable():
    cert = one_over_e_check(CoefficientFn.constant(-1.0), DelayFn.constant_lag(0.1))
    assert not cert.applicable and not cert.satisfied


def test_one_over_e_sampled_expression():
    # integral of a over [t-lag, t] = a*lag = 0.25 < 1/e for a = 2.5, lag 0.1
    a = CoefficientFn.from_expression("2.5 + 0*sin(t)")
    cert = one_over_e_check(a, DelayFn.constant_lag(0.1), window=20.0, grid=201)
    assert cert.satisfied
    assert cert.exactness == SAMPLED
    assert cert.lhs == pytest.approx(0.25, abs=1e-9)
    assert "worst sampled t" in cert.narrative


# --- equation specs -----------------------------------------------------------

def test_pure_delay_form_rejects_perturbation_terms():
    with pytest.raises(SpecError):
        EquationSpec.from_dict({"form": "pure_delay", "a": 3, "b": 2, "a1": 0.1})


def test_mixed_form_defaults_zero_perturbations():
    s = EquationSpec.mixed(3, 2)
    assert s.a1.value == 0.0 and s.b1.value == 0.0
    assert s.g.is_identity and s.h.is_identity


def test_spec_from_dict_infers_form():
    s = EquationSpec.from_dict({"a": 3, "b": 2, "h": 0.5})
    assert s.form == "pure_delay"
    s2 = EquationSpec.from_dict({"a": 3, "b": 2, "b1": 0.5})
    assert s2.form == "mixed"


def test_spec_requires_a_and_b():
    with pytest.raises(SpecError, match="missing"):
        EquationSpec.from_dict({"a": 3})


def test_spec_rejects_unknown_keys():
    with pytest.raises(SpecError, match="unknown"):
        EquationSpec.from_dict({"a": 3, "b": 2, "frequency": 1.0})


def test_spec_rejects_negative_t0():
    with pytest.raises(SpecError):
        EquationSpec.pure_delay(3, 2, t0=-1.0)


def test_spec_json_round_trip_is_canonical():
    src = ('{"form": "mixed", "a": 3, "b": "2 + 0.5*sin(t)", "a1": 0.1, '
           '"b1": 0.5, "g": "t - 0.1", "h": 0.25, "t0": 0}')
    s1 = EquationSpec.from_json(src)
    echo = s1.to_json()
    s2 = EquationSpec.from_json(echo)
    assert s2.to_json() == echo  # echo is a fixed point
    assert s1.to_dict() == s2.to_dict()
    # affine delay simplified to a constant lag on the way in
    assert s1.g.kind == "constant_lag" and s1.g.lag == 0.1


def test_norm_context_ratio_is_pointwise_not_ratio_of_sups():
    # with a = b = 2 + sin(t) the pointwise quotient is identically 1,
    # whereas the quotient of sups (sup b / inf a = 3) would be wrong
    spec = EquationSpec.pure_delay("2 + sin(t)", "2 + sin(t)", h=0.1)
    ctx = NormContext(spec, window=50.0, grid=20_001)
    ratio = ctx.ratio_norm("b", "a")
    assert ratio.value == pytest.approx(1.0, abs=1e-12)


def test_norm_context_exact_values_are_rational():
    spec = EquationSpec.mixed(3, 2, a1=0.1, b1=0.5)
    ctx = NormContext(spec)
    assert ctx.norm("a").value == Fraction(3)
    assert ctx.ratio_norm("b", "a").value == Fraction(2, 3)
    assert ctx.lag("g").value == 0
    assert ctx.inf("b").value == Fraction(2)
