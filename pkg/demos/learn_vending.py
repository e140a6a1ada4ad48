"""Learn the vending machine from scratch and check the result.

Run from the repository root:  python demos/learn_vending.py
"""
import random
from pathlib import Path

from ehw import Alphabet, Interpreter, ehw_main, load_config, load_efsm, serialize_efsm
from ehw.oracle import conformance_walk

MODELS = Path(__file__).resolve().parent.parent / "models"


def main():
    machine = load_efsm(MODELS / "vending.efsm")
    config = load_config(MODELS / "vending.cfg")
    result = ehw_main(Interpreter(machine), Alphabet.of(machine), config, interface=machine)

    print("first 16 abstract outputs:", " ".join(result.trace.abstract_outputs(1, 16)))
    print()
    print(serialize_efsm(result.model))
    for key in ("states_before_reduce", "states_after_reduce", "steps", "steps_total", "ce_count"):
        print(f"{key:22} {result.stats[key]}")

    # a fresh copy of the black box, walked side by side with the model
    div = conformance_walk(result, Interpreter(machine), 1000, random.Random(0))
    print("1000-step conformance walk:", "no divergence" if div is None else div)


if __name__ == "__main__":
    main()
