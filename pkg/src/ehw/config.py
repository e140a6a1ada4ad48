"""Learner configuration and its flat text format.

::

    h: coin(100).vend.select(coffee)
    W:
      select(coffee)
    I1:
      coin(100)
      select(coffee)
      vend
    I2:
      coin(50)
    Is:
    Rw: i1
    Rg: i1 i2 b t
    seed: 0

``I2`` and ``Is`` list only the inputs they add: the loaded configuration
holds ``I2 = I1 + I2`` and ``Is = I2 + Is``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .dsl import ParseError, parse_input, parse_input_sequence

_LIST_KEYS = {"W", "I1", "I2", "Is"}
_INT_KEYS = {"seed", "k", "nfsm_walks", "nfsm_walk_length", "efsm_walks", "efsm_walk_length",
             "max_rounds", "max_steps"}
_BOOL_KEYS = {"bounded_transfer", "repair_w"}
_KNOWN = _LIST_KEYS | _INT_KEYS | _BOOL_KEYS | {"h", "Rw", "Rg"}


def _merge(*groups) -> tuple:
    out = {}
    for g in groups:
        for x in g:
            out.setdefault(x, None)
    return tuple(out)


@dataclass(frozen=True)
class LearnerConfig:
    h: tuple
    W: tuple  # tuple of input sequences
    I1: tuple
    I2: tuple
    Is: tuple
    Rw: tuple
    Rg: tuple
    seed: int = 0
    k: Optional[int] = None  # transfer search bound; None means 2|Q| + |h|
    bounded_transfer: bool = True
    repair_w: bool = False  # extend W on a sample conflict instead of aborting
    nfsm_walks: int = 20
    nfsm_walk_length: int = 50
    efsm_walks: int = 50
    efsm_walk_length: int = 100
    max_rounds: int = 12
    max_steps: int = 200000

    def __post_init__(self):
        object.__setattr__(self, "I2", _merge(self.I1, self.I2))
        object.__setattr__(self, "Is", _merge(self.I2, self.Is))

    def with_(self, **changes) -> "LearnerConfig":
        return replace(self, **changes)

    def problems(self) -> list:
        """Static sanity checks; an empty list means the configuration is usable."""
        out = []
        i1 = set(self.I1)
        for x in self.h:
            if x not in i1:
                out.append(f"homing input {x} is not in I1")
        for w in self.W:
            for x in w:
                if x not in i1:
                    out.append(f"characterizing input {x} is not in I1")
        if not set(self.Rw) <= set(self.Rg):
            out.append("Rw must be a subset of Rg")
        if not self.h:
            out.append("h must not be empty")
        if not self.W:
            out.append("W must not be empty")
        return out


def parse_config(text: str) -> LearnerConfig:
    values: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line[0].isspace():
            if current is None:
                raise ParseError("indented entry outside a list", lineno, 1, sorted(_LIST_KEYS))
            entry = line.strip()
            try:
                if current == "W":
                    values[current].append(tuple(parse_input_sequence(entry)))
                else:
                    values[current].append(parse_input(entry))
            except ParseError as exc:
                raise ParseError(f"bad entry {entry!r}: {exc}", lineno, 1) from None
            continue
        if ":" not in line:
            raise ParseError("expected 'key: value'", lineno, 1, sorted(_KNOWN))
        key, _, rest = line.partition(":")
        key, rest = key.strip(), rest.strip()
        if key not in _KNOWN:
            raise ParseError(f"unknown key {key!r}", lineno, 1, sorted(_KNOWN))
        current = None
        if key in _LIST_KEYS:
            values[key] = []
            current = key
            if rest:
                if key == "W":
                    values[key].append(tuple(parse_input_sequence(rest)))
                else:
                    values[key].extend(parse_input_sequence(rest))
        elif key == "h":
            values[key] = tuple(parse_input_sequence(rest))
        elif key in ("Rw", "Rg"):
            values[key] = tuple(rest.replace(",", " ").split())
        elif key in _BOOL_KEYS:
            values[key] = rest.lower() in ("1", "true", "yes", "on")
        else:
            try:
                values[key] = int(rest)
            except ValueError:
                raise ParseError(f"{key} must be an integer", lineno, len(key) + 2) from None
    for key in ("h", "W", "I1", "Rw", "Rg"):
        if key not in values:
            raise ParseError(f"missing key {key!r}", 0, 0, [key])
    for key in _LIST_KEYS:
        values.setdefault(key, [])
        values[key] = tuple(values[key])
    return LearnerConfig(**values)


def load_config(path) -> LearnerConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())


def format_config(cfg: LearnerConfig) -> str:
    def seq(xs):
        return ".".join(str(x) for x in xs)

    lines = [f"h: {seq(cfg.h)}", "W:"]
    lines += [f"  {seq(w)}" for w in cfg.W]
    lines.append("I1:")
    lines += [f"  {x}" for x in cfg.I1]
    lines.append("I2:")
    lines += [f"  {x}" for x in cfg.I2 if x not in cfg.I1]
    lines.append("Is:")
    lines += [f"  {x}" for x in cfg.Is if x not in cfg.I2]
    lines.append(f"Rw: {' '.join(cfg.Rw)}")
    lines.append(f"Rg: {' '.join(cfg.Rg)}")
    lines.append(f"seed: {cfg.seed}")
    if cfg.k is not None:
        lines.append(f"k: {cfg.k}")
    if cfg.repair_w:
        lines.append("repair_w: true")
    return "\n".join(lines) + "\n"
