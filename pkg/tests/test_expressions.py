import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddestab.expressions import (BinOp, Call, EvaluationError, Neg, Num,
                                 ParseError, Var, evaluate, evaluate_array,
                                 parse, to_source)


def test_parse_number_literal():
    assert parse("3") == Num(3.0)
    assert parse("2.5e-3") == Num(0.0025)
    assert parse(".5") == Num(0.5)


def test_parse_variable_and_constants():
    assert parse("t") == Var()
    assert parse("pi") == Num(math.pi)
    assert parse("e") == Num(math.e)


def test_parse_grammar_exercise():
    node = parse("2 + 0.5*sin(t)")
    assert node == BinOp("+", Num(2.0), BinOp("*", Num(0.5), Call("sin", (Var(),))))


def test_parse_precedence_and_unary_minus():
    assert parse("1 - 2 - 3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse("-t*2") == BinOp("*", Neg(Var()), Num(2.0))
    assert parse("2*(t + 1)") == BinOp("*", Num(2.0), BinOp("+", Var(), Num(1.0)))


def test_parse_min_max_two_args():
    node = parse("max(t, 0.5)")
    assert node == Call("max", (Var(), Num(0.5)))
    assert evaluate(node, 0.1) == 0.5
    assert evaluate(node, 2.0) == 2.0


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as exc:
        parse("2 + * 3")
    assert "position 4" in str(exc.value)


def test_parse_error_expected_token():
    with pytest.raises(ParseError, match="expected"):
        parse("sin(t")


def test_unknown_identifier():
    with pytest.raises(ParseError, match="unknown identifier"):
        parse("2 + q")


def test_arity_mismatch():
    with pytest.raises(ParseError, match="argument"):
        parse("sin(t, 1)")
    with pytest.raises(ParseError, match="argument"):
        parse("min(t)")


def test_trailing_input_rejected():
    with pytest.raises(ParseError, match="trailing"):
        parse("1 2")


def test_evaluate_division_by_zero():
    node = parse("1 / t")
    with pytest.raises(EvaluationError):
        evaluate(node, 0.0)


def test_evaluate_overflow():
    node = parse("exp(exp(t))")
    with pytest.raises(EvaluationError):
        evaluate(node, 10.0)


def test_array_matches_scalar():
    node = parse("2 + 0.5*sin(t) - cos(t)/(3 + t)")
    ts = np.linspace(0.0, 20.0, 97)
    arr = evaluate_array(node, ts)
    scal = np.array([evaluate(node, t) for t in ts])
    np.testing.assert_allclose(arr, scal, rtol=0, atol=0)


def test_array_division_by_zero():
    node = parse("1 / (t - 1)")
    with pytest.raises(EvaluationError):
        evaluate_array(node, np.linspace(0.0, 2.0, 3))


# --- round-trip property --------------------------------------------------

_numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False,
                     allow_infinity=False)


def _exprs():
    leaves = st.one_of(_numbers.map(Num), st.just(Var()))

    def extend(children):
        unary = children.map(Neg)
        call1 = st.tuples(st.sampled_from(["sin", "cos", "exp", "abs"]),
                          children).map(lambda p: Call(p[0], (p[1],)))
        call2 = st.tuples(st.sampled_from(["min", "max"]), children,
                          children).map(lambda p: Call(p[0], (p[1], p[2])))
        binop = st.tuples(st.sampled_from("+-*/"), children, children).map(
            lambda p: BinOp(p[0], p[1], p[2]))
        return st.one_of(unary, call1, call2, binop)

    return st.recursive(leaves, extend, max_leaves=25)


@given(_exprs())
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(node):
    assert parse(to_source(node)) == node
