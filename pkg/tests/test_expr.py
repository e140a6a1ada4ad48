import pytest
from hypothesis import given, strategies as st

from ehw.expr import (
    BOTTOM, FALSE, INT_MAX, TRUE, And, Arith, Cmp, Const, EvalBottom, ExprTypeError, Not, Or,
    Param, Reg, eval_expr, eval_guard, negate, render,
)


def test_display_sum():
    e = Arith("+", Reg("r2"), Param("i2"))
    assert eval_expr(e, {"r2": 50}, {"i2": 50}) == 100


def test_threshold_false_below():
    assert eval_guard(Cmp(">=", Reg("r2"), Const(100)), {"r2": 0}) is False


def test_product_with_negative_argument():
    e = Arith("*", Param("i_a"), Reg("r_b"))
    assert eval_expr(e, {"r_b": 3}, {"i_a": -5}) == -15


def test_unset_register_is_an_error():
    with pytest.raises(EvalBottom):
        eval_expr(Arith("+", Reg("r"), Const(1)), {"r": BOTTOM})


def test_arithmetic_on_symbols_is_a_type_error():
    with pytest.raises(ExprTypeError):
        eval_expr(Arith("+", Reg("r1"), Const(1)), {"r1": "tea"})


def test_symbols_only_compare_for_equality():
    assert eval_guard(Cmp("==", Reg("r1"), Const("tea")), {"r1": "tea"})
    with pytest.raises(ExprTypeError):
        eval_guard(Cmp("<", Reg("r1"), Const("tea")), {"r1": "coffee"})


def test_non_boolean_guard_rejected():
    with pytest.raises(ExprTypeError):
        eval_guard(Const(3), {})


def test_overflow_aborts():
    with pytest.raises(OverflowError):
        eval_expr(Arith("+", Const(INT_MAX), Const(1)), {})


def test_boolean_connectives():
    regs = {"x": 3}
    gt = Cmp(">", Reg("x"), Const(1))
    lt = Cmp("<", Reg("x"), Const(1))
    assert eval_guard(And(gt, Not(lt)), regs)
    assert eval_guard(Or(lt, gt), regs)
    assert not eval_guard(And(gt, lt), regs)


def test_negate_flips_comparisons_and_literals():
    assert negate(Cmp(">=", Reg("t"), Const(100))) == Cmp("<", Reg("t"), Const(100))
    assert negate(TRUE) == FALSE
    assert negate(Not(Reg("b"))) == Reg("b")


def test_render_precedence():
    e = Arith("*", Arith("+", Reg("a"), Reg("b")), Reg("c"))
    assert render(e) == "(a + b) * c"
    assert render(Arith("-", Reg("a"), Arith("-", Reg("b"), Reg("c")))) == "a - (b - c)"


def test_render_marks_shadowed_registers():
    e = Cmp(">=", Reg("r_a"), Param("r_a"))
    assert render(e, frozenset({"r_a"})) == "@r_a >= r_a"


ints = st.integers(-1000, 1000)


@given(ints, ints, st.sampled_from(["<", "<=", "==", "!=", ">=", ">"]))
def test_negation_is_complement(a, b, op):
    g = Cmp(op, Reg("x"), Const(b))
    assert eval_guard(g, {"x": a}) != eval_guard(negate(g), {"x": a})
