"""The four-state example with guarded characterization.

First the machine as drawn with a single characterizing sequence, which
stops with a W inconsistency, then the observable variant with a second
sequence that separates the states the first one conflates.

Run from the repository root:  python demos/learn_fig8.py
"""
import random
from pathlib import Path

from ehw import Alphabet, Interpreter, WInconsistency, ehw_main, load_config, load_efsm, serialize_efsm
from ehw.oracle import conformance_walk

MODELS = Path(__file__).resolve().parent.parent / "models"


def learn(efsm, cfg):
    machine = load_efsm(MODELS / efsm)
    config = load_config(MODELS / cfg)
    return machine, ehw_main(Interpreter(machine), Alphabet.of(machine), config, interface=machine)


def main():
    try:
        learn("fig8.efsm", "fig8.cfg")
    except WInconsistency as exc:
        print(f"fig8.efsm + fig8.cfg: {exc}")

    machine, result = learn("fig8_observable.efsm", "fig8_extended.cfg")
    print()
    print(serialize_efsm(result.model))
    print(f"states {result.stats['states_before_reduce']} -> {result.stats['states_after_reduce']}, "
          f"learning steps {result.stats['steps']}, total steps {result.stats['steps_total']}")
    div = conformance_walk(result, Interpreter(machine), 1000, random.Random(0))
    print("1000-step conformance walk:", "no divergence" if div is None else div)


if __name__ == "__main__":
    main()
