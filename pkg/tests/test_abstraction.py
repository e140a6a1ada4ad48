import random

from hypothesis import given, settings, strategies as st

from ehw.abstraction import Alphabet, Trace, abstract, rho, rho_g, rho_w
from ehw.dsl import parse_input, parse_input_sequence, parse_output
from ehw.efsm import NO_EFFECT, NOT_APPLICABLE, ConcreteInput, ConcreteOutput, Interpreter
from ehw.expr import BOTTOM


def pairs(*items):
    return [(parse_input(x), parse_output(y)) for x, y in items]


def test_abstract_strips_values():
    assert abstract(pairs(("select(tea)", "Pay(0)"))) == [("select", "Pay")]
    assert abstract([]) == []
    assert abstract([NOT_APPLICABLE, NO_EFFECT]) == ["Omega", "omega"]


def test_abstract_example_trace():
    t = pairs(("select(tea)", "Pay(0)"), ("coin(50)", "Display(50)"), ("vend", "ω"),
              ("coin(50)", "Display(100)"), ("coin(50)", "Display(150)"), ("vend", "Serve(tea)"))
    assert abstract(t) == [("select", "Pay"), ("coin", "Display"), ("vend", "omega"),
                           ("coin", "Display"), ("coin", "Display"), ("vend", "Serve")]


def test_rho_select(vending):
    al = Alphabet.of(vending)
    r = rho(al, al.empty_config(), pairs(("select(tea)", "Pay(0)")))
    assert dict(r) == {"i1": "tea", "i2": BOTTOM, "t": 0, "b": BOTTOM}


def test_rho_empty_is_identity(vending):
    al = Alphabet.of(vending)
    r = rho(al, al.empty_config(), pairs(("coin(5)", "Display(5)")))
    assert rho(al, r, []) == r


def test_rho_w_after_homing(vending):
    al = Alphabet.of(vending)
    h = pairs(("coin(100)", "Ω"), ("vend", "Ω"), ("select(coffee)", "Pay(0)"))
    assert dict(rho_w(al, al.empty_config(), h, ["i1"])) == {"i1": "coffee"}


def test_refusal_changes_nothing(vending):
    al = Alphabet.of(vending)
    r = rho(al, al.empty_config(), pairs(("select(tea)", "Pay(0)")))
    assert rho(al, r, pairs(("coin(100)", "Ω"))) == r


def test_no_effect_refreshes_input_registers_only():
    al = Alphabet((("go", ("n",)),), (("Out", ("m",)),))
    r = al.empty_config().set({"n": 1, "m": 2})
    assert dict(rho(al, r, [(ConcreteInput("go", (5,)), NO_EFFECT)])) == {"n": 5, "m": 2}
    frozen = Alphabet(al.inputs, al.outputs, refresh_on_no_effect=False)
    assert rho(frozen, r, [(ConcreteInput("go", (5,)), NO_EFFECT)]) == r


# --- compositionality ---------------------------------------------------------------

def _random_event(rng, al):
    name, params = rng.choice(al.inputs)
    x = ConcreteInput(name, tuple(rng.choice([0, 1, 50, "tea", "coffee"]) for _ in params))
    kind = rng.random()
    if kind < 0.2:
        return x, NOT_APPLICABLE
    if kind < 0.3:
        return x, NO_EFFECT
    oname, oparams = rng.choice(al.outputs)
    return x, ConcreteOutput(oname, tuple(rng.randint(-9, 9) for _ in oparams))


def random_trace(rng, al, n):
    return [_random_event(rng, al) for _ in range(n)]


def check_split(al, r, sigma, k):
    return rho(al, rho(al, r, sigma[:k]), sigma[k:]) == rho(al, r, sigma)


def test_rho_compositional_on_ten_thousand_traces(vending):
    al = Alphabet.of(vending)
    rng = random.Random(2024)
    for _ in range(10_000):
        sigma = random_trace(rng, al, rng.randint(0, 12))
        assert check_split(al, al.empty_config(), sigma, rng.randint(0, len(sigma)))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(0, 20), st.data())
def test_rho_compositional(vending, seed, n, data):
    al = Alphabet.of(vending)
    sigma = random_trace(random.Random(seed), al, n)
    k = data.draw(st.integers(0, n))
    assert check_split(al, al.empty_config(), sigma, k)
    rw = ["i1"]
    assert rho_w(al, al.empty_config(), sigma, rw) == \
        rho_g(al, al.empty_config(), sigma, al.register_names).project(rw)


def test_tracked_registers_match_interpreter(vending):
    al = Alphabet.of(vending)
    interp = Interpreter(vending)
    rng = random.Random(7)
    xs = parse_input_sequence("select(tea) coin(50) vend coin(50) coin(50) vend select(coffee)")
    r = al.empty_config()
    for _ in range(300):
        x = rng.choice(xs)
        y = interp.step(x)
        r = rho(al, r, [(x, y)])
        for p in al.register_names:
            assert r[p] == interp.registers[p]


def test_trace_jsonl_round_trip():
    t = Trace()
    for x, y in pairs(("coin(100)", "Ω"), ("select(tea)", "Pay(0)"), ("vend", "ω")):
        t.append(x, y)
    back = Trace.from_jsonl(t.to_jsonl())
    assert back.steps == t.steps
    assert back.abstract_outputs() == ["Omega", "Pay", "omega"]
