import pytest

from ehw.config import format_config, parse_config
from ehw.dsl import (
    ParseError, load_efsm, parse_efsm, parse_input, parse_input_sequence, parse_output,
    serialize_efsm,
)
from ehw.efsm import NO_EFFECT, NOT_APPLICABLE, ConcreteInput, ConcreteOutput

from conftest import MODELS

HEADER = """inputs: go(n:int)
outputs: Ok(n:int)
registers:
states: s
initial: s
"""


def test_vending_file_shape(vending):
    assert len(vending.states) == 2
    assert len(vending.transitions) == 4
    assert vending.initial == "s0"


@pytest.mark.parametrize("name", ["vending.efsm", "fig8.efsm", "fig8_observable.efsm"])
def test_round_trip(name):
    m = load_efsm(MODELS / name)
    text = serialize_efsm(m)
    assert serialize_efsm(parse_efsm(text)) == text
    assert parse_efsm(text) == m


def test_empty_transition_section_rejected():
    with pytest.raises(ParseError) as err:
        parse_efsm(HEADER)
    assert "transition" in str(err.value)


def test_error_carries_position_and_expected_tokens():
    with pytest.raises(ParseError) as err:
        parse_efsm(HEADER + "s -- go(n) / Ok(n) --> t\n")
    assert err.value.line == 6
    assert err.value.column > 1
    assert "s" in err.value.expected


def test_undeclared_name_in_expression():
    with pytest.raises(ParseError):
        parse_efsm(HEADER + "s -- go(n) / Ok(m) --> s\n")


def test_shadowed_register_reads_previous_value():
    m = parse_efsm(HEADER.replace("registers:", "registers: n:int = 7") +
                   "s -- go(n) [@n < n] / Ok(@n) --> s\n")
    from ehw.efsm import Interpreter
    run = Interpreter(m).run([ConcreteInput("go", (9,)), ConcreteInput("go", (1,))])
    assert run == [ConcreteOutput("Ok", (7,)), NOT_APPLICABLE]


def test_concrete_events():
    assert parse_input("coin(100)") == ConcreteInput("coin", (100,))
    assert parse_input("vend") == parse_input("vend()") == ConcreteInput("vend", ())
    assert parse_input("a(-5)") == ConcreteInput("a", (-5,))
    assert parse_output("Ω") == NOT_APPLICABLE
    assert parse_output("omega") == NO_EFFECT
    assert parse_input_sequence("coin(100).vend.select(coffee)") == [
        ConcreteInput("coin", (100,)), ConcreteInput("vend", ()), ConcreteInput("select", ("coffee",))]


def test_config_cumulative_sets(vending_config):
    c = vending_config
    assert [str(x) for x in c.h] == ["coin(100)", "vend()", "select(coffee)"]
    assert c.W == ((ConcreteInput("select", ("coffee",)),),)
    assert set(c.I1) <= set(c.I2) <= set(c.Is)
    assert ConcreteInput("select", ("tea",)) in c.Is
    assert c.Rw == ("i1",) and c.Rg == ("i1", "i2", "b", "t")


def test_config_round_trip(vending_config):
    assert parse_config(format_config(vending_config)) == vending_config


def test_config_errors():
    with pytest.raises(ParseError):
        parse_config("h: a\nW:\n  a\nI1: a\nRw:\nRg:\nbogus: 1\n")
    with pytest.raises(ParseError):
        parse_config("h: a\nI1: a\nRw:\nRg:\n")


def test_config_problems():
    c = parse_config("h: a\nW:\n  b\nI1: a\nRw: x\nRg:\n")
    probs = c.problems()
    assert any("b()" in p for p in probs)
    assert any("Rw" in p for p in probs)
