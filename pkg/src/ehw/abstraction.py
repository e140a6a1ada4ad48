"""Abstraction of concrete events, last-value register tracking and the learning trace."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .efsm import (
    NO_EFFECT_NAME, NOT_APPLICABLE_NAME, ConcreteInput, ConcreteOutput, Efsm,
)
from .expr import BOTTOM, is_int
from .registers import UNKNOWN, RegisterConfig

__all__ = ["Alphabet", "RegisterConfig", "Trace", "abstract", "rho", "rho_w", "rho_g"]


@dataclass(frozen=True)
class Alphabet:
    """Parameter names of each abstract input and output.

    This is the interface knowledge the learner has about the black box; the
    register space is the set of all parameter names.
    """

    inputs: tuple  # ((name, (param, ...)), ...)
    outputs: tuple
    refresh_on_no_effect: bool = True

    @classmethod
    def of(cls, machine: Efsm, refresh_on_no_effect: bool = True) -> "Alphabet":
        return cls(
            tuple((n, s.param_names) for n, s in machine.inputs.items()),
            tuple((n, s.param_names) for n, s in machine.outputs.items()),
            refresh_on_no_effect,
        )

    def __post_init__(self):
        object.__setattr__(self, "_in", dict(self.inputs))
        object.__setattr__(self, "_out", dict(self.outputs))

    def input_params(self, name: str) -> tuple:
        return self._in[name]

    def output_params(self, name: str) -> tuple:
        return self._out.get(name, ())

    @property
    def input_names(self) -> tuple:
        return tuple(n for n, _ in self.inputs)

    @property
    def register_names(self) -> tuple:
        seen = {}
        for _, ps in self.inputs + self.outputs:
            for p in ps:
                seen.setdefault(p, None)
        return tuple(seen)

    def empty_config(self) -> RegisterConfig:
        return RegisterConfig(self.register_names)

    def updates(self, x: ConcreteInput, y: ConcreteOutput) -> dict:
        """Register writes caused by one event under last-value semantics."""
        if y.name == NOT_APPLICABLE_NAME:
            return {}
        if y.name == NO_EFFECT_NAME:
            return dict(zip(self._in[x.name], x.args)) if self.refresh_on_no_effect else {}
        out = dict(zip(self._in[x.name], x.args))
        out.update(zip(self._out.get(y.name, ()), y.args))
        return out


def abstract(seq: Iterable) -> list:
    """Strip parameter values: ``[(select(tea), Pay(0))] -> [("select", "Pay")]``.

    Items may be (input, output) pairs or single concrete events.
    """
    out = []
    for item in seq:
        if isinstance(item, tuple) and not isinstance(item, (ConcreteInput, ConcreteOutput)):
            out.append(tuple(e.name for e in item))
        else:
            out.append(item.name)
    return out


def rho(alphabet: Alphabet, r: RegisterConfig, sigma: Sequence) -> RegisterConfig:
    """Apply the register writes of the i/o sequence ``sigma`` to ``r``."""
    writes = {}
    for x, y in sigma:
        writes.update(alphabet.updates(x, y))
    return r.set(writes)


def rho_w(alphabet: Alphabet, r: RegisterConfig, sigma: Sequence, rw: Sequence[str]) -> RegisterConfig:
    return rho(alphabet, r, sigma).project(rw)


def rho_g(alphabet: Alphabet, r: RegisterConfig, sigma: Sequence, rg: Sequence[str]) -> RegisterConfig:
    return rho(alphabet, r, sigma).project(rg)


def _encode_value(v):
    if v is BOTTOM:
        return None
    if v is UNKNOWN:
        return "?"
    return v


def _decode_value(v):
    return BOTTOM if v is None else v


@dataclass
class Trace:
    """The single, append-only learning trace.  Steps are numbered from 1."""

    steps: list = field(default_factory=list)  # [(ConcreteInput, ConcreteOutput)]
    configs: list = field(default_factory=list)  # full configuration after each step

    def append(self, x: ConcreteInput, y: ConcreteOutput, r_after: RegisterConfig = None):
        self.steps.append((x, y))
        self.configs.append(r_after)

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def abstract_outputs(self, start: int = 1, stop: int = None) -> list:
        """Abstract outputs of steps ``start..stop`` (1-based, inclusive)."""
        stop = len(self.steps) if stop is None else stop
        return [y.name for _, y in self.steps[start - 1:stop]]

    def to_records(self, rg: Sequence[str] = ()) -> list:
        recs = []
        for i, ((x, y), r) in enumerate(zip(self.steps, self.configs), 1):
            rec = {"step": i, "input": str(x), "output": _output_text(y)}
            if r is not None and rg:
                rec["rg"] = {n: _encode_value(r[n]) for n in rg}
            recs.append(rec)
        return recs

    def to_jsonl(self, rg: Sequence[str] = ()) -> str:
        return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in self.to_records(rg))

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        from .dsl import parse_input, parse_output

        t = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            t.append(parse_input(rec["input"]), parse_output(rec["output"]), None)
        return t


def _output_text(y: ConcreteOutput) -> str:
    if y.name in (NOT_APPLICABLE_NAME, NO_EFFECT_NAME):
        return y.name
    return f"{y.name}({','.join(str(a) if is_int(a) else str(a) for a in y.args)})"
