import math
from fractions import Fraction

import numpy as np
import pytest

from ddestab.eqspec import EquationSpec, NormContext
from ddestab.odebounds import (BoundsUnavailable, condition_38a, lemma2_bounds,
                               lemma7_bounds, quadrature_Y,
                               sample_kernel_columns)


# --- closed-form case bounds -------------------------------------------------

def test_overdamped_case():
    b = lemma2_bounds(3.0, 2.0)
    assert b.case_tag == "overdamped"
    assert b.Y == Fraction(1, 2)
    assert b.Yp == Fraction(3)


def test_underdamped_case():
    b = lemma2_bounds(3.0, 2.5)
    assert b.case_tag == "underdamped"
    assert b.Y == Fraction(4, 3)
    assert b.Yp == Fraction(8, 3)


def test_critical_case():
    b = lemma2_bounds(2.0, 1.0)
    assert b.case_tag == "critical"
    assert b.Y == 1 and b.Yp == 2


def test_irrational_discriminant_falls_back_to_float():
    b = lemma2_bounds(3.0, 1.0)  # disc = 5, sqrt irrational
    assert isinstance(b.Yp, float)
    s = math.sqrt(5.0)
    assert b.Yp == pytest.approx(2 * 3 / (s * (3 - s)))
    assert b.Y == Fraction(1)  # Y = 1/b stays exact


def test_positivity_required():
    with pytest.raises(ValueError):
        lemma2_bounds(0.0, 1.0)
    with pytest.raises(ValueError):
        lemma2_bounds(1.0, -2.0)


def test_near_tie_uses_critical_formulas():
    # inside the tie band the overdamped Yp formula would blow up
    b = lemma2_bounds(2.0, 1.0 + 1e-14)
    assert b.case_tag == "critical"
    assert float(b.Yp) == pytest.approx(2.0, rel=1e-6)


def test_case_boundary_stays_finite():
    for eps in (1e-9, -1e-9):
        b = lemma2_bounds(2.0, 1.0 + eps)
        assert math.isfinite(float(b.Y)) and math.isfinite(float(b.Yp))


# --- positive-kernel route -----------------------------------------------------

def test_condition_38a_constant_cases():
    ok = condition_38a(NormContext(EquationSpec.pure_delay(3, 2, h=0.1)))
    assert ok.satisfied  # 9 >= 8
    bad = condition_38a(NormContext(EquationSpec.pure_delay(3, 2.5, h=0.1)))
    assert not bad.satisfied  # 9 < 10


def test_lemma7_bounds_constants():
    b = lemma7_bounds(EquationSpec.pure_delay(3, 2, h=0.1))
    assert b.Y == Fraction(1, 2)
    assert b.Yp is None
    assert b.case_tag == "lemma7"


def test_lemma7_unavailable_when_gate_fails():
    with pytest.raises(BoundsUnavailable):
        lemma7_bounds(EquationSpec.pure_delay(3, 2.5, h=0.1))


def test_lemma7_declared_band():
    # a = 4 constant, b declared in [1, 2]: gate 16 >= 8 holds, Y = 1/inf b = 1
    spec = EquationSpec.pure_delay(
        4, {"expr": "1.5 + 0.5*sin(t)", "sup": 2.0, "inf": 1.0}, h=0.1)
    b = lemma7_bounds(spec)
    assert b.Y == Fraction(1)


def test_lemma7_kernel_is_positive_and_integral_bounded():
    # numerical validation of the certified facts behind the route:
    # kernel positivity and int Y(t,s) b(s) ds <= 1
    a_fn = lambda t: 4.0
    b_fn = lambda t: 1.5 + 0.5 * math.sin(t)
    s_values = [0.0, 1.0, 2.5]
    ts, cols = sample_kernel_columns(a_fn, b_fn, 0.0, s_values, T=12.0, step=2e-3)
    for s, col in zip(s_values, cols):
        live = ts > s + 1e-9
        assert np.all(col[live] > -1e-12)
    # integral over s at fixed t by trapezoid on a dense s-grid
    s_dense = np.linspace(0.0, 8.0, 161)
    _, cols_d = sample_kernel_columns(a_fn, b_fn, 0.0, s_dense, T=8.0, step=5e-3)
    t_idx = -1  # t = 8
    vals = np.array([c[t_idx] * b_fn(s) for c, s in zip(cols_d, s_dense)])
    integral = np.trapezoid(vals, s_dense)
    assert integral <= 1.0 + 1e-3


# --- numerical cross-check -----------------------------------------------------

def test_quadrature_overdamped_kernel():
    # kernel e^{-u} - e^{-2u} >= 0: |.| integral is exactly 1/2; the
    # derivative's sign-split integral is also exactly 1/2
    y, yp = quadrature_Y(3.0, 2.0)
    assert y == pytest.approx(0.5, abs=1e-6)
    assert yp == pytest.approx(0.5, abs=1e-6)
    assert yp <= 3.0 + 1e-6


def test_quadrature_critical_kernel():
    # kernel u e^{-u} >= 0: integral 1; derivative integral 2/e
    y, yp = quadrature_Y(2.0, 1.0)
    assert y == pytest.approx(1.0, abs=1e-6)
    assert yp == pytest.approx(2.0 / math.e, abs=1e-6)


def test_quadrature_requires_positive_coefficients():
    with pytest.raises(ValueError):
        quadrature_Y(-1.0, 1.0)


def test_quadrature_short_horizon_rejected():
    with pytest.raises(ValueError, match="horizon"):
        quadrature_Y(3.0, 2.0, horizon=1.0)


def test_quadrature_never_exceeds_certified_bounds():
    rng = np.random.default_rng(7)
    for _ in range(12):
        a = float(rng.uniform(0.4, 5.0))
        b = float(rng.uniform(0.1, 6.0))
        bounds = lemma2_bounds(a, b)
        y, yp = quadrature_Y(a, b)
        assert y <= float(bounds.Y) + 1e-6, (a, b)
        assert yp <= float(bounds.Yp) + 1e-6, (a, b)
