from pathlib import Path

import pytest

from ehw import Alphabet, Interpreter, ehw_main, load_config, load_efsm

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def model_path(name):
    return MODELS / name


@pytest.fixture(scope="session")
def vending():
    return load_efsm(MODELS / "vending.efsm")


@pytest.fixture(scope="session")
def vending_config():
    return load_config(MODELS / "vending.cfg")


@pytest.fixture(scope="session")
def vending_run(vending, vending_config):
    return ehw_main(Interpreter(vending), Alphabet.of(vending), vending_config, interface=vending)


@pytest.fixture(scope="session")
def fig8_observable():
    return load_efsm(MODELS / "fig8_observable.efsm")
