"""EFSM model, its interpreter (the System Under Learning) and the validator.

The register file of a running machine holds the declared registers plus one
register per parameter name.  Parameter registers keep the last value seen for
that name, so output parameters of different outputs that share a name (``t``
of ``Pay`` and ``Display``) share one register.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

from .expr import (
    TRUE, And, Cmp, Const, EvalBottom, Expr, ExprTypeError, Param, Reg, eval_guard, is_int,
)
from .registers import RegisterConfig

NOT_APPLICABLE_NAME = "Omega"
NO_EFFECT_NAME = "omega"
SPECIAL_OUTPUTS = (NOT_APPLICABLE_NAME, NO_EFFECT_NAME)


@dataclass(frozen=True)
class Domain:
    kind: str  # "int" or "enum"
    symbols: tuple = ()

    def __str__(self):
        return "int" if self.kind == "int" else f"enum({','.join(self.symbols)})"

    def contains(self, v) -> bool:
        if self.kind == "int":
            return is_int(v)
        return v in self.symbols


INT = Domain("int")


def enum(*symbols: str) -> Domain:
    return Domain("enum", tuple(symbols))


@dataclass(frozen=True)
class Signature:
    name: str
    params: tuple = ()  # ((name, Domain), ...)

    @property
    def param_names(self) -> tuple:
        return tuple(p for p, _ in self.params)

    def __str__(self):
        return f"{self.name}({', '.join(f'{p}:{d}' for p, d in self.params)})"


@dataclass(frozen=True, order=True)
class ConcreteInput:
    name: str
    args: tuple = ()

    def __str__(self):
        return f"{self.name}({','.join(map(str, self.args))})"

    __repr__ = __str__


@dataclass(frozen=True, order=True)
class ConcreteOutput:
    name: str
    args: tuple = ()

    def __str__(self):
        if self.name == NOT_APPLICABLE_NAME:
            return "Ω"
        if self.name == NO_EFFECT_NAME:
            return "ω"
        return f"{self.name}({','.join(map(str, self.args))})"

    __repr__ = __str__

    @property
    def is_special(self) -> bool:
        return self.name in SPECIAL_OUTPUTS


NOT_APPLICABLE = ConcreteOutput(NOT_APPLICABLE_NAME)  # Ω: input refused
NO_EFFECT = ConcreteOutput(NO_EFFECT_NAME)  # ω: accepted, no visible effect


class NondeterminismError(Exception):
    pass


@dataclass(frozen=True)
class Transition:
    source: str
    input: str
    guard: Expr
    output: str
    output_exprs: tuple = ()
    updates: tuple = ()  # ((register, Expr), ...)
    target: str = ""

    @property
    def is_no_effect(self) -> bool:
        return self.output == NO_EFFECT_NAME


@dataclass
class Efsm:
    states: tuple
    initial: str
    inputs: dict  # name -> Signature
    outputs: dict  # name -> Signature
    registers: dict  # explicitly declared register name -> Domain
    transitions: tuple
    register_init: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = tuple(self.states)
        self.transitions = tuple(self.transitions)
        self._by_source: dict = {}
        for t in self.transitions:
            self._by_source.setdefault((t.source, t.input), []).append(t)

    @property
    def param_names(self) -> tuple:
        seen = {}
        for sig in itertools.chain(self.inputs.values(), self.outputs.values()):
            for p in sig.param_names:
                seen.setdefault(p, None)
        return tuple(seen)

    @property
    def register_names(self) -> tuple:
        names = dict.fromkeys(self.registers)
        for p in self.param_names:
            names.setdefault(p, None)
        return tuple(names)

    def domain_of(self, name: str) -> Domain:
        if name in self.registers:
            return self.registers[name]
        for sig in itertools.chain(self.inputs.values(), self.outputs.values()):
            for p, d in sig.params:
                if p == name:
                    return d
        raise KeyError(name)

    def initial_registers(self) -> RegisterConfig:
        return RegisterConfig.from_mapping(self.register_names, self.register_init)

    def transitions_from(self, state: str, input_name: str) -> list:
        return self._by_source.get((state, input_name), [])

    def symbols(self) -> set:
        out = set()
        for name in self.register_names:
            d = self.domain_of(name)
            out.update(d.symbols)
        return out


def _bind(sig: Signature, args: Sequence) -> dict:
    if len(args) != len(sig.params):
        raise ValueError(f"{sig.name} expects {len(sig.params)} argument(s), got {len(args)}")
    return dict(zip(sig.param_names, args))


def sul_step(machine: Efsm, state: str, registers: RegisterConfig, x: ConcreteInput,
             refresh_on_no_effect: bool = True):
    """Fire one concrete input.  Returns ``(output, next_state, registers)``."""
    sig = machine.inputs.get(x.name)
    if sig is None:
        raise KeyError(f"unknown input {x.name!r}")
    params = _bind(sig, x.args)
    candidates = machine.transitions_from(state, x.name)
    holding = [t for t in candidates if eval_guard(t.guard, registers, params)]
    if len(holding) > 1:
        raise NondeterminismError(
            f"{len(holding)} guards hold in {state} for {x} with {registers}")
    if not holding:
        return NOT_APPLICABLE, state, registers
    t = holding[0]
    if t.is_no_effect:
        if refresh_on_no_effect:
            registers = registers.set(params)
        return NO_EFFECT, t.target, registers
    values = tuple(e.eval(registers, params) for e in t.output_exprs)
    out_sig = machine.outputs[t.output]
    updates = {r: e.eval(registers, params) for r, e in t.updates}
    updates.update(params)
    updates.update(zip(out_sig.param_names, values))
    return ConcreteOutput(t.output, values), t.target, registers.set(updates)


class Interpreter:
    """An EFSM run as a black box: one input in, one output out, no reset."""

    def __init__(self, machine: Efsm, state: str = None, registers: RegisterConfig = None,
                 refresh_on_no_effect: bool = True):
        self.machine = machine
        self.state = machine.initial if state is None else state
        self.registers = machine.initial_registers() if registers is None else registers
        self.refresh_on_no_effect = refresh_on_no_effect
        self.steps = 0

    def step(self, x: ConcreteInput) -> ConcreteOutput:
        y, self.state, self.registers = sul_step(
            self.machine, self.state, self.registers, x, self.refresh_on_no_effect)
        self.steps += 1
        return y

    def run(self, xs: Iterable[ConcreteInput]) -> list:
        return [self.step(x) for x in xs]


# --- validation -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # determinism | observability | connectivity | omega | reference | bottom
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "OK: deterministic, observable, strongly connected"
        return "\n".join(f"{v.kind}: {v.message}" for v in self.violations)


def _single_var_interval(guard: Expr):
    """(variable, lo, hi) for guards over one integer variable, else None."""
    if guard == TRUE:
        return ("*", None, None)
    if isinstance(guard, Cmp) and guard.op not in ("==", "!="):
        left, right, op = guard.left, guard.right, guard.op
        if isinstance(left, Const) and isinstance(right, (Reg, Param)):
            left, right = right, left
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
        if isinstance(left, (Reg, Param)) and isinstance(right, Const) and is_int(right.value):
            c = right.value
            lo, hi = {"<": (None, c - 1), "<=": (None, c), ">": (c + 1, None),
                      ">=": (c, None)}[op]
            return (left, lo, hi)
        return None
    if isinstance(guard, And):
        a, b = _single_var_interval(guard.left), _single_var_interval(guard.right)
        if a is None or b is None:
            return None
        if a[0] == "*":
            return b
        if b[0] == "*":
            return a
        if a[0] != b[0]:
            return None
        lo = max((v for v in (a[1], b[1]) if v is not None), default=None)
        hi = min((v for v in (a[2], b[2]) if v is not None), default=None)
        return (a[0], lo, hi)
    return None


def _intervals_overlap(a, b) -> bool | None:
    """True/False when decidable symbolically, None otherwise."""
    if a is None or b is None:
        return None
    if a[0] != "*" and b[0] != "*" and a[0] != b[0]:
        return None
    lo = max((v for v in (a[1], b[1]) if v is not None), default=None)
    hi = min((v for v in (a[2], b[2]) if v is not None), default=None)
    return lo is None or hi is None or lo <= hi


def _check_references(machine: Efsm, report: ValidationReport):
    states = set(machine.states)
    regs = set(machine.register_names)
    if machine.initial not in states:
        report.violations.append(Violation("reference", f"initial state {machine.initial} undeclared"))
    for t in machine.transitions:
        where = f"{t.source} -- {t.input} --> {t.target}"
        if t.source not in states or t.target not in states:
            report.violations.append(Violation("reference", f"{where}: undeclared state"))
        sig = machine.inputs.get(t.input)
        if sig is None:
            report.violations.append(Violation("reference", f"{where}: undeclared input"))
            continue
        exprs = [t.guard, *t.output_exprs, *(e for _, e in t.updates)]
        for e in exprs:
            for kind, name in e.names():
                if kind == "param" and name not in sig.param_names:
                    report.violations.append(Violation(
                        "reference", f"{where}: {name} is not a parameter of {t.input}"))
                if kind == "reg" and name not in regs:
                    report.violations.append(Violation(
                        "reference", f"{where}: unknown register {name}"))
        for r, _ in t.updates:
            if r not in regs:
                report.violations.append(Violation("reference", f"{where}: unknown register {r}"))
        if not t.is_no_effect:
            osig = machine.outputs.get(t.output)
            if osig is None:
                report.violations.append(Violation("reference", f"{where}: undeclared output {t.output}"))
            elif len(osig.params) != len(t.output_exprs):
                report.violations.append(Violation(
                    "reference", f"{where}: {t.output} expects {len(osig.params)} value(s)"))


def validate_efsm(machine: Efsm, probe: Iterable[ConcreteInput] = (), max_depth: int = 6,
                  max_configs: int = 20000) -> ValidationReport:
    """Check the tractability assumptions the learner relies on.

    Determinism is settled symbolically for pairs of guards that constrain a
    single integer variable; other pairs are checked on every configuration
    reachable from the initial one with at most ``max_depth`` probe inputs.
    """
    report = ValidationReport()
    _check_references(machine, report)
    if report.violations:
        return report
    probe = list(probe)

    # observability and omega well-formedness
    for (src, inp), ts in sorted(machine._by_source.items()):
        outs = [t.output for t in ts]
        for o in sorted(set(outs)):
            if outs.count(o) > 1:
                report.violations.append(Violation(
                    "observability", f"{src} has {outs.count(o)} transitions on {inp} producing {o}"))
    for t in machine.transitions:
        if t.is_no_effect and t.source != t.target:
            report.violations.append(Violation(
                "omega", f"omega transition must not change state ({t.source} -- {t.input} --> {t.target})"))
        if t.is_no_effect and t.updates:
            report.violations.append(Violation(
                "omega", f"omega transition must not update registers ({t.source} -- {t.input})"))

    # connectivity of the control machine
    g = nx.DiGraph()
    g.add_nodes_from(machine.states)
    g.add_edges_from((t.source, t.target) for t in machine.transitions)
    if machine.states and not nx.is_strongly_connected(g):
        comps = sorted(sorted(c) for c in nx.strongly_connected_components(g))
        report.violations.append(Violation(
            "connectivity", f"control machine is not strongly connected: components {comps}"))

    # determinism
    seen_pairs = set()
    undecided = []
    for (src, inp), ts in sorted(machine._by_source.items()):
        for t1, t2 in itertools.combinations(ts, 2):
            verdict = _intervals_overlap(_single_var_interval(t1.guard), _single_var_interval(t2.guard))
            if verdict is True:
                seen_pairs.add((src, inp))
                report.violations.append(Violation(
                    "determinism", f"{src} on {inp}: guards [{t1.guard}] and [{t2.guard}] overlap"))
            elif verdict is None:
                undecided.append((src, inp))
    undecided = set(undecided)
    bottom_seen = set()
    if probe:
        start = (machine.initial, machine.initial_registers())
        seen = {start}
        frontier = deque([(start, 0)])
        while frontier:
            (state, regs), depth = frontier.popleft()
            for x in probe:
                sig = machine.inputs[x.name]
                params = _bind(sig, x.args)
                holding = []
                for t in machine.transitions_from(state, x.name):
                    try:
                        if eval_guard(t.guard, regs, params):
                            holding.append(t)
                    except EvalBottom as exc:
                        key = (state, x.name, str(exc))
                        if key not in bottom_seen:
                            bottom_seen.add(key)
                            report.violations.append(Violation(
                                "bottom", f"guard [{t.guard}] in {state} on {x} reads unset {exc}"))
                    except ExprTypeError as exc:
                        report.violations.append(Violation("reference", str(exc)))
                if len(holding) > 1 and (state, x.name) in undecided and (state, x.name) not in seen_pairs:
                    seen_pairs.add((state, x.name))
                    report.violations.append(Violation(
                        "determinism", f"{state} on {x} with {regs}: {len(holding)} guards hold"))
                if depth + 1 > max_depth or len(seen) >= max_configs:
                    continue
                try:
                    _, nstate, nregs = sul_step(machine, state, regs, x)
                except (NondeterminismError, EvalBottom, ExprTypeError, OverflowError):
                    continue
                if (nstate, nregs) not in seen:
                    seen.add((nstate, nregs))
                    frontier.append(((nstate, nregs), depth + 1))
    return report
