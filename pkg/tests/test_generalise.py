import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ehw.expr import BOTTOM, Const, Param, Reg, negate, render
from ehw.generalise import (
    GpSettings, Row, SynthesisFailure, _guard, infer_guard, infer_output_fn, run_gp,
)

VENDING_RG = ["i1", "i2", "b", "t"]
TINY_GP = {"settings": GpSettings(population=20, generations=3)}


def vend_row(t, i1="coffee"):
    return Row({"i1": i1, "i2": 50, "b": BOTTOM, "t": t}, {})


def truth(e, row):
    return e.eval(row.registers, row.params)


def test_display_is_register_plus_coin():
    # t before the step and the coin value, Display shows their sum
    pairs = [(0, 50), (0, 100), (50, 50), (100, 50)]
    rows = [Row({"i1": "coffee", "i2": i2, "b": BOTTOM, "t": t}, {"i2": i2}) for t, i2 in pairs]
    e, stage = infer_output_fn(rows, [t + i2 for t, i2 in pairs], VENDING_RG, ["i2"])
    assert stage == "two-terminal"
    for t, i2 in itertools.product(range(0, 301, 25), range(0, 301, 25)):
        assert truth(e, Row({"t": t, "i2": 0, "i1": "tea", "b": BOTTOM}, {"i2": i2})) == t + i2


def test_all_zero_outputs_give_constant():
    rows = [vend_row(t) for t in (0, 50, 100)]
    assert infer_output_fn(rows, [0, 0, 0], VENDING_RG, []) == (Const(0), "constant")


def test_serve_becomes_register_once_tea_is_seen():
    coffee = [vend_row(100), vend_row(150)]
    e, stage = infer_output_fn(coffee, ["coffee", "coffee"], VENDING_RG, [])
    assert (e, stage) == (Const("coffee"), "constant")
    rows = coffee + [vend_row(100, "tea")]
    e, stage = infer_output_fn(rows, ["coffee", "coffee", "tea"], VENDING_RG, [])
    assert (e, stage) == (Reg("i1"), "terminal")


def test_vend_guard_threshold():
    pos = [vend_row(t) for t in (100, 150, 200, 300)]
    neg = [vend_row(t) for t in (0, 50)]
    g, stage = infer_guard(pos, neg, VENDING_RG, [])
    assert stage == "comparison"
    assert render(g) == "t >= 100"
    assert render(negate(g)) == "t < 100"


def test_no_negatives_means_unguarded():
    g, stage = infer_guard([vend_row(0)], [], VENDING_RG, [])
    assert stage == "unguarded" and truth(g, vend_row(5)) is True


def b_row(ra, ib):
    return Row({"r_a": ra, "r_b": 0}, {"r_b": ib})


def test_b_branch_compares_input_with_register():
    pos = [b_row(ra, ib) for ra, ib in ((0, 0), (-5, 0), (1, 1), (-5, -5))]
    neg = [b_row(ra, ib) for ra, ib in ((1, 0), (0, -5), (1, -5))]
    g, stage = infer_guard(pos, neg, ["r_a", "r_b"], ["r_b"])
    assert stage == "comparison"
    for ra, ib in itertools.product(range(-6, 7), repeat=2):
        assert truth(g, b_row(ra, ib)) is (ib >= ra)


def gp_rows(seed):
    rng = random.Random(seed)
    rows = [Row({"r": rng.randint(-5, 5)}, {"a": rng.randint(-5, 5)}) for _ in range(12)]
    return rows, [2 * r.params["a"] + r.registers["r"] for r in rows]


def test_gp_runs_are_identical_for_a_seed():
    rows, targets = gp_rows(0)
    consts = sorted(set(targets) | {0, 1})
    a = run_gp(rows, targets, [Param("a"), Reg("r")], consts, seed=7)
    b = run_gp(rows, targets, [Param("a"), Reg("r")], consts, seed=7)
    assert a is not None and a == b


def test_gp_finds_target_outside_the_ladder():
    rows, targets = gp_rows(1)
    e, stage = infer_output_fn(rows, targets, ["r"], ["a"], seed=0)
    assert stage == "gp"
    assert [truth(e, r) for r in rows] == targets


def test_output_failure_is_reported():
    rows = [Row({"r": 0}, {"a": 0}), Row({"r": 0}, {"a": 0})]
    with pytest.raises(SynthesisFailure):
        infer_output_fn(rows, [1, 2], ["r"], ["a"], gp=TINY_GP)


def test_enumerated_guard_is_marked_failed():
    rows = [Row({"r": r}, {"a": a}) for r in range(4) for a in range(4)]
    pos = [x for x in rows if (x.registers["r"] * 3 + x.params["a"]) % 5 in (0, 2)]
    neg = [x for x in rows if x not in pos]
    g, stage, failed = _guard(pos, neg, ["r"], ["a"], 0, TINY_GP)
    assert stage == "enumerated" and failed
    assert all(truth(g, x) is True for x in pos)
    assert all(truth(g, x) is False for x in neg)


def test_coinciding_rows_fail_synthesis():
    row = Row({"r": 1}, {"a": 1})
    g, stage, failed = _guard([row], [row], ["r"], ["a"], 0, TINY_GP)
    assert (stage, failed) == ("failed", True)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=2, max_size=15,
                unique=True),
       st.integers(-20, 20))
def test_two_way_guards_partition_rows(points, cut):
    rows = [Row({"r": r}, {"a": a}) for r, a in points]
    pos = [x for x in rows if x.params["a"] - x.registers["r"] >= cut]
    neg = [x for x in rows if x not in pos]
    if not pos or not neg:
        return
    g, stage = infer_guard(pos, neg, ["r"], ["a"], gp=TINY_GP)
    h = negate(g) if stage == "comparison" else infer_guard(neg, pos, ["r"], ["a"], gp=TINY_GP)[0]
    for x in rows:
        assert (truth(g, x) is True) != (truth(h, x) is True)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), min_size=1, max_size=10),
       st.sampled_from(["a + r", "a - r", "r", "7", "a * r"]))
def test_output_functions_are_exact_on_rows(points, shape):
    rows = [Row({"r": r}, {"a": a}) for r, a in points]
    f = {"a + r": lambda a, r: a + r, "a - r": lambda a, r: a - r, "r": lambda a, r: r,
         "7": lambda a, r: 7, "a * r": lambda a, r: a * r}[shape]
    targets = [f(a, r) for r, a in points]
    e, _ = infer_output_fn(rows, targets, ["r"], ["a"])
    assert [truth(e, x) for x in rows] == targets


def test_vending_model_shape(vending_run):
    model = vending_run.model
    assert model.states == ("q0", "q1") and model.initial == "q0"
    assert not vending_run.generalisation.failures
    stages = {(e.input, e.output, e.what): e.stage for e in vending_run.report}
    assert stages[("vend", "Serve", "guard")] == "comparison"
    assert stages[("coin", "Display", "t")] == "two-terminal"
