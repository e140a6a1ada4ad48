"""The learner's knowledge: NFSM states, the sampled machine (Δ, Λ), the homing
dictionary, the access table, path planning and the trimmed graph used for the
termination test.

An NFSM state is a pair (characterization, R_w configuration).  Because the
R_w part of a target is fixed by the concrete step that reaches it, Δ maps
``(q, x, y)`` to a small table ``rw -> target``; the abstract control graph may
therefore be nondeterministic while tracking a concrete run stays
deterministic.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import networkx as nx

from .abstraction import Alphabet
from .efsm import (
    NO_EFFECT, NO_EFFECT_NAME, NOT_APPLICABLE, NOT_APPLICABLE_NAME, ConcreteInput,
    ConcreteOutput,
)
from .registers import UNKNOWN, RegisterConfig


class WInconsistency(Exception):
    """The same state, R_g configuration and concrete input gave two abstract outputs."""

    def __init__(self, message, state=None, x=None, steps=()):
        super().__init__(message)
        self.state = state
        self.input = x
        self.steps = tuple(steps)


@dataclass(frozen=True)
class NfsmState:
    charac: tuple  # abstract response (tuple of output names) per W entry
    rw: RegisterConfig

    def label(self) -> str:
        ch = ",".join(".".join(_sym(o) for o in resp) for resp in self.charac)
        return f"({ch},{_cfg(self.rw)})"

    def __repr__(self):
        return self.label()


def _sym(o: str) -> str:
    return {NOT_APPLICABLE_NAME: "Ω", NO_EFFECT_NAME: "ω"}.get(o, o)


def _cfg(r: RegisterConfig) -> str:
    return "[" + ",".join(str(v) for v in r.values) + "]"


class Stub:
    """Target of an abstract transition whose characterization is still partial."""

    _ids = itertools.count()

    def __init__(self, rw: RegisterConfig, n_w: int, origin):
        self.rw = rw
        self.charac = [None] * n_w
        self.origin = origin  # (q, x, y)
        self.id = next(Stub._ids)

    def missing(self) -> Optional[int]:
        for i, c in enumerate(self.charac):
            if c is None:
                return i
        return None

    def is_complete(self) -> bool:
        return self.missing() is None

    def state(self) -> NfsmState:
        return NfsmState(tuple(self.charac), self.rw)

    def __repr__(self):
        return f"Stub#{self.id}{self.charac}"


@dataclass(frozen=True)
class Sample:
    """One observed concrete transition instance (r, X, Y, r1)."""

    r: RegisterConfig
    x: ConcreteInput
    y: ConcreteOutput
    r1: RegisterConfig
    step: int = field(default=0, compare=False)


class SampledFsm:
    """Q, Δ and Λ, with indexes used by the planner."""

    def __init__(self, alphabet: Alphabet, rw: Sequence[str], rg: Sequence[str]):
        self.alphabet = alphabet
        self.rw_names = tuple(rw)
        self.rg_names = tuple(rg)
        self.states: list = []
        self._state_set: set = set()
        self.delta: dict = {}  # (q, x, y) -> {rw: NfsmState | Stub}
        self.lam: dict = {}  # (q, x, y) -> [Sample]
        self._outs: dict = {}  # (q, x) -> {y}
        self._by_rg: dict = {}  # (q, X, rg) -> Sample
        self._by_full: dict = {}  # (q, X, r) -> Sample
        self._sampled: set = set()  # (q, X)
        self.members: dict = {}  # q -> states it stands for after a reduction

    # states -----------------------------------------------------------------
    def add_state(self, q: NfsmState) -> bool:
        if q in self._state_set:
            return False
        self._state_set.add(q)
        self.states.append(q)
        return True

    def __contains__(self, q):
        return q in self._state_set

    # Δ -----------------------------------------------------------------------
    def set_target(self, q, x: str, y: str, target, rw: RegisterConfig = None):
        """Δ(q, x, y) reaches ``target`` when R_w ends as ``rw`` (default: its own)."""
        table = self.delta.setdefault((q, x, y), {})
        table[target.rw if rw is None else rw] = target
        self._outs.setdefault((q, x), set()).add(y)

    def target(self, q, x: str, y: str, rw1: RegisterConfig):
        return self.delta.get((q, x, y), {}).get(rw1)

    def outputs(self, q, x: str) -> set:
        return self._outs.get((q, x), set())

    def refused(self, q, x: str) -> bool:
        return NOT_APPLICABLE_NAME in self._outs.get((q, x), ())

    def edges(self):
        """All (q, x, y, target) entries with a fully defined target."""
        for (q, x, y), table in self.delta.items():
            for t in table.values():
                yield q, x, y, t

    def stubs(self) -> list:
        return [t for _, _, _, t in self.edges() if isinstance(t, Stub)]

    def resolve_stub(self, stub: Stub, state: NfsmState):
        q, x, y = stub.origin
        self.delta[(q, x, y)][stub.rw] = state

    # Λ -----------------------------------------------------------------------
    def rg(self, r: RegisterConfig) -> RegisterConfig:
        return r.project(self.rg_names)

    def rw(self, r: RegisterConfig) -> RegisterConfig:
        return r.project(self.rw_names)

    def add_sample(self, q, s: Sample) -> bool:
        """Record a quadruple.  Raises :class:`WInconsistency` on conflict."""
        expect = s.r.set(self.alphabet.updates(s.x, s.y))
        assert expect == s.r1, f"sample {s} breaks last-value update"
        key = (q, s.x, self.rg(s.r))
        prev = self._by_rg.get(key)
        if prev is not None and prev.y.name != s.y.name:
            raise WInconsistency(
                f"in {q!r} with {self.rg(s.r)!r}, {s.x} gave {prev.y} at step {prev.step} "
                f"and {s.y} at step {s.step}", q, s.x, (prev.step, s.step))
        rows = self.lam.setdefault((q, s.x.name, s.y.name), [])
        if s in rows:
            return False
        rows.append(s)
        self._by_rg.setdefault(key, s)
        self._by_full.setdefault((q, s.x, s.r), s)
        self._sampled.add((q, s.x))
        return True

    def sampled(self, q, x: ConcreteInput) -> bool:
        return (q, x) in self._sampled

    def row_full(self, q, x: ConcreteInput, r: RegisterConfig):
        return self._by_full.get((q, x, r))

    def row_rg(self, q, x: ConcreteInput, rg: RegisterConfig):
        return self._by_rg.get((q, x, rg))

    def samples(self):
        for (q, x, y), rows in self.lam.items():
            for s in rows:
                yield q, s

    def lambda_size(self) -> int:
        return sum(len(v) for v in self.lam.values())

    # completeness ------------------------------------------------------------
    def complete_over(self, q, inputs: Iterable[ConcreteInput]) -> bool:
        """Every input has been sampled in ``q`` or is refused there."""
        for x in inputs:
            if not (self.sampled(q, x) or self.refused(q, x.name)):
                return False
        for (qq, _, _), table in self.delta.items():
            if qq == q and any(isinstance(t, Stub) for t in table.values()):
                return False
        return True


class HomingDict:
    """η -> characterization (one entry per W member, ``None`` while unknown)."""

    def __init__(self, n_w: int):
        self.n_w = n_w
        self.table: dict = {}

    def get(self, eta: tuple) -> list:
        return self.table.setdefault(eta, [None] * self.n_w)

    def missing(self, eta: tuple) -> Optional[int]:
        for i, c in enumerate(self.get(eta)):
            if c is None:
                return i
        return None

    def record(self, eta: tuple, i: int, resp: tuple):
        ch = self.get(eta)
        if ch[i] is not None and ch[i] != resp:
            raise WInconsistency(f"homing response {eta} answered W[{i}] with {ch[i]} and {resp}")
        ch[i] = resp

    def charac(self, eta: tuple) -> Optional[tuple]:
        ch = self.get(eta)
        return None if any(c is None for c in ch) else tuple(ch)


class AccessTable:
    """η -> {(q, r): access sequence of (X, Y) from the end of the homing}."""

    def __init__(self):
        self.table: dict = {}

    def record(self, eta: tuple, q, r: RegisterConfig, access: Sequence) -> bool:
        entries = self.table.setdefault(eta, {})
        old = entries.get((q, r))
        if old is not None and len(old) <= len(access):
            return False
        entries[(q, r)] = tuple(access)
        return True

    def entries(self, eta: tuple) -> dict:
        return self.table.get(eta, {})


# --- Δ* ---------------------------------------------------------------------

def step_target(fsm: SampledFsm, q, r: RegisterConfig, x: ConcreteInput, y: ConcreteOutput):
    """Next NFSM state after the concrete step ``x/y`` from ``(q, r)``, or ``None``.

    Ω, and ω that leaves R_w untouched, stay in place even without an entry.
    """
    r1 = r.set(fsm.alphabet.updates(x, y))
    rw1 = fsm.rw(r1)
    if y.name == NOT_APPLICABLE_NAME or (y.name == NO_EFFECT_NAME and rw1 == q.rw):
        return q, r1
    t = fsm.target(q, x.name, y.name, rw1)
    if isinstance(t, NfsmState):
        return t, r1
    return None, r1


def delta_star(fsm: SampledFsm, q, seq: Sequence, r: RegisterConfig = None):
    """Follow Δ along an i/o sequence; ``None`` as soon as a step is missing.

    ``seq`` holds concrete (X, Y) pairs when ``r`` is given, else abstract
    (x, y) name pairs, in which case each step needs a unique target.
    """
    for x, y in seq:
        if q is None:
            return None
        if r is not None:
            q, r = step_target(fsm, q, r, x, y)
            continue
        if y == NOT_APPLICABLE_NAME:
            continue
        table = fsm.delta.get((q, x, y), {})
        targets = [t for t in table.values() if isinstance(t, NfsmState)]
        if len(targets) != 1:
            if y == NO_EFFECT_NAME and not table:
                continue
            return None
        q = targets[0]
    return q


# --- prediction and planning --------------------------------------------------

@dataclass(frozen=True)
class Prediction:
    y: str  # abstract output
    output: Optional[ConcreteOutput]  # None when parameter values are not predictable
    r1: RegisterConfig
    target: object  # NfsmState, Stub or None
    basis: str  # "refused" | "exact" | "rg" | "optimistic"


def _unknown_output(alphabet: Alphabet, y: str) -> dict:
    return {p: UNKNOWN for p in alphabet.output_params(y)}


def predict(fsm: SampledFsm, q, r: RegisterConfig, x: ConcreteInput) -> Optional[Prediction]:
    """What the learned knowledge says ``x`` does from ``(q, r)``."""
    outs = fsm.outputs(q, x.name)
    if not outs:
        return None
    if outs == {NOT_APPLICABLE_NAME}:
        return Prediction(NOT_APPLICABLE_NAME, NOT_APPLICABLE, r, q, "refused")
    al = fsm.alphabet
    row = fsm.row_full(q, x, r) if r.is_known() else None
    if row is not None:
        y, out, r1, basis = row.y.name, row.y, row.r1, "exact"
    else:
        rg = fsm.rg(r)
        hit = fsm.row_rg(q, x, rg) if rg.is_known() else None
        if hit is not None:
            y, basis = hit.y.name, "rg"
        else:
            live = outs - {NOT_APPLICABLE_NAME}
            if len(live) != 1:
                return None
            (y,) = live
            basis = "optimistic"
        out = NO_EFFECT if y == NO_EFFECT_NAME else None
        writes = dict(zip(al.input_params(x.name), x.args))
        if y == NO_EFFECT_NAME:
            if not al.refresh_on_no_effect:
                writes = {}
        else:
            writes.update(_unknown_output(al, y))
        r1 = r.set(writes)
    rw1 = fsm.rw(r1)
    if y == NO_EFFECT_NAME and rw1 == q.rw:
        return Prediction(y, out, r1, q, basis)
    if not rw1.is_known():
        return Prediction(y, out, r1, None, basis)
    return Prediction(y, out, r1, fsm.target(q, x.name, y, rw1), basis)


@dataclass
class Plan:
    path: list  # [(X, Prediction, q_before)]
    q: object  # state where the goal input is applied
    r: RegisterConfig
    goal: ConcreteInput
    kind: str  # "learn" | "stub" | "sample"


def input_key(x: ConcreteInput):
    return (x.name, tuple((0, a) if isinstance(a, int) else (1, str(a)) for a in x.args))


def plan_path(fsm: SampledFsm, start_q, start_r: RegisterConfig, inputs: Sequence[ConcreteInput],
              goal: Callable, bound: Optional[int], seeds: Iterable = (), max_nodes: int = 20000):
    """Shortest predicted path to a node where ``goal(q, r)`` names an input.

    ``goal`` returns ``(X, kind)`` or ``None``.  ``seeds`` are extra starting
    points ``(q, r, path)`` reached by replaying recorded access sequences.
    Ties between equal-length paths go to the lexicographically smallest
    input sequence.
    """
    inputs = sorted(set(inputs), key=input_key)
    counter = itertools.count()
    heap = []

    def push(q, r, path):
        key = (len(path), tuple(input_key(s[0]) for s in path))
        heapq.heappush(heap, (key, next(counter), q, r, path))

    push(start_q, start_r, [])
    for q, r, path in seeds:
        push(q, r, list(path))
    seen = set()
    while heap and len(seen) < max_nodes:
        _, _, q, r, path = heapq.heappop(heap)
        if (q, r) in seen:
            continue
        seen.add((q, r))
        g = goal(q, r)
        if g is not None:
            return Plan(path, q, r, g[0], g[1])
        if bound is not None and len(path) >= bound:
            continue
        for x in inputs:
            p = predict(fsm, q, r, x)
            if p is None or not isinstance(p.target, NfsmState):
                continue
            if (p.target, p.r1) in seen:
                continue
            push(p.target, p.r1, path + [(x, p, q)])
    return None


def replay_access(fsm: SampledFsm, q, r: RegisterConfig, access: Sequence):
    """Replay a recorded (X, Y) sequence through Δ; ``(q, r)`` or ``(None, r)``."""
    for x, y in access:
        q, r = step_target(fsm, q, r, x, y)
        if q is None:
            return None, r
    return q, r


# --- Δ⁻ and the termination test ---------------------------------------------------

def delta_minus(fsm: SampledFsm, start_q, start_r: RegisterConfig, inputs: Sequence[ConcreteInput],
                access: dict = None, max_nodes: int = 20000) -> nx.MultiDiGraph:
    """Edges of Δ that can actually be exercised from a post-homing configuration.

    Starting from ``(start_q, start_r)`` and the recorded accesses, explore the
    (state, configuration) product graph using only steps whose outcome is
    pinned by Λ (or refused outright) and keep the abstract edges traversed.
    """
    g = nx.MultiDiGraph()
    if start_q is None:
        return g
    frontier = [(start_q, start_r)]
    for (q, r), acc in (access or {}).items():
        frontier.append((q, r))
    seen = set()
    edge_keys = set()
    while frontier and len(seen) < max_nodes:
        q, r = frontier.pop()
        if (q, r) in seen or not isinstance(q, NfsmState):
            continue
        seen.add((q, r))
        g.add_node(q)
        for x in inputs:
            p = predict(fsm, q, r, x)
            if p is None or p.basis == "optimistic":
                continue
            t = p.target
            key = (q, x.name, p.y, t)
            if key not in edge_keys and t is not None:
                edge_keys.add(key)
                g.add_edge(q, t, key=(x.name, p.y), x=x.name, y=p.y)
            if isinstance(t, NfsmState):
                frontier.append((t, p.r1))
    return g


def find_complete_scc(graph: nx.DiGraph, is_complete: Callable) -> Optional[set]:
    """A closed strongly connected component whose states all satisfy ``is_complete``."""
    if graph.number_of_nodes() == 0:
        return None
    cond = nx.condensation(nx.DiGraph(graph))
    members = cond.graph["mapping"]
    comps = {}
    for node, c in members.items():
        comps.setdefault(c, set()).add(node)
    for c in nx.topological_sort(cond):
        if cond.out_degree(c) != 0:
            continue
        states = comps[c]
        if any(isinstance(s, Stub) for s in states):
            continue
        if all(is_complete(s) for s in states):
            return states
    return None
