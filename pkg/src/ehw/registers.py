from __future__ import annotations

from typing import Iterable, Mapping

from .expr import BOTTOM

_INDEX: dict = {}


def _index(names: tuple) -> dict:
    idx = _INDEX.get(names)
    if idx is None:
        idx = _INDEX[names] = {n: i for i, n in enumerate(names)}
    return idx


class _Unknown:
    """Placeholder for a register value a planner cannot predict."""

    def __repr__(self):
        return "?"


UNKNOWN = _Unknown()


class RegisterConfig(Mapping):
    """Immutable, hashable register valuation over a fixed ordered name set."""

    __slots__ = ("names", "values", "_hash")

    def __init__(self, names: Iterable[str], values: Iterable = None):
        self.names = tuple(names)
        if values is None:
            self.values = (BOTTOM,) * len(self.names)
        else:
            self.values = tuple(values)
            if len(self.values) != len(self.names):
                raise ValueError("names and values differ in length")
        self._hash = None

    @classmethod
    def from_mapping(cls, names, mapping: Mapping) -> "RegisterConfig":
        names = tuple(names)
        return cls(names, (mapping.get(n, BOTTOM) for n in names))

    def __getitem__(self, key):
        return self.values[_index(self.names)[key]]

    def __contains__(self, key):
        return key in _index(self.names)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        if isinstance(other, RegisterConfig):
            return self.names == other.names and self.values == other.values
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.names, self.values))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{n}={v!r}" if isinstance(v, str) else f"{n}={v}"
                          for n, v in zip(self.names, self.values))
        return f"[{inner}]"

    def set(self, assignments: Mapping) -> "RegisterConfig":
        if not assignments:
            return self
        idx = _index(self.names)
        values = list(self.values)
        for k, v in assignments.items():
            try:
                values[idx[k]] = v
            except KeyError:
                raise KeyError(f"unknown register {k!r}") from None
        return RegisterConfig(self.names, values)

    def project(self, names: Iterable[str]) -> "RegisterConfig":
        names = tuple(names)
        if names == self.names:
            return self
        idx = _index(self.names)
        return RegisterConfig(names, (self.values[idx[n]] for n in names))

    def is_known(self) -> bool:
        return not any(v is UNKNOWN for v in self.values)
