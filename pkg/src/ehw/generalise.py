"""Synthesis of guards and output functions from sampled transitions.

Both searches walk an Occam ladder of small expression shapes and only fall
back to genetic programming when none of them is exact on the samples.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .control import Sample
from .efsm import (
    INT, NO_EFFECT_NAME, NOT_APPLICABLE_NAME, Efsm, Signature, Transition, enum,
)
from .expr import (
    BOTTOM, FALSE, TRUE, And, Arith, Cmp, Const, EvalBottom, Expr, ExprTypeError, Not, Or,
    Param, Reg, conj, disj, is_int, negate, render,
)


class SynthesisFailure(Exception):
    pass


@dataclass(frozen=True)
class Row:
    """One sample seen through the features available to an expression."""

    registers: dict
    params: dict
    values: tuple = ()  # observed output parameter values

    @classmethod
    def of(cls, s: Sample, rg: Sequence[str], input_params: Sequence[str]) -> "Row":
        return cls({n: s.r[n] for n in rg}, dict(zip(input_params, s.x.args)), tuple(s.y.args))


def _eval(e: Expr, row: Row):
    try:
        return e.eval(row.registers, row.params)
    except (EvalBottom, ExprTypeError, OverflowError):
        return BOTTOM


def _terminals(rows: Sequence[Row], rg: Sequence[str], input_params: Sequence[str]):
    """Input parameters then registers, split by the type their values take."""
    ints, syms = [], []
    cands = [Param(p) for p in input_params] + [Reg(n) for n in rg]
    for t in cands:
        vals = [_eval(t, r) for r in rows]
        if any(v is BOTTOM for v in vals):
            continue
        if all(is_int(v) for v in vals):
            ints.append(t)
        elif all(isinstance(v, str) for v in vals):
            syms.append(t)
    return ints, syms


# --- output functions ------------------------------------------------------

def _fits(e: Expr, rows, targets) -> bool:
    return all(_eval(e, r) == v for r, v in zip(rows, targets))


def infer_output_fn(rows: Sequence[Row], targets: Sequence, rg: Sequence[str],
                    input_params: Sequence[str], seed: int = 0, gp=None):
    """Smallest expression reproducing ``targets`` on ``rows``; returns ``(expr, stage)``."""
    if not rows:
        raise SynthesisFailure("no samples")
    if len(set(targets)) == 1:
        return Const(targets[0]), "constant"
    ints, syms = _terminals(rows, rg, input_params)
    for t in ints + syms:
        if _fits(t, rows, targets):
            return t, "terminal"
    if all(is_int(v) for v in targets):
        for op in ("+", "-", "*"):
            pairs = (itertools.combinations_with_replacement(ints, 2) if op != "-"
                     else itertools.permutations(ints, 2))
            for a, b in pairs:
                e = Arith(op, a, b)
                if _fits(e, rows, targets):
                    return e, "two-terminal"
        consts = sorted({v for v in targets} | {0, 1})
        e = run_gp(rows, targets, ints, consts, seed=seed, **(gp or {}))
        if e is not None:
            return e, "gp"
    raise SynthesisFailure(f"no expression fits {len(rows)} samples")


# --- guards ------------------------------------------------------------------

def _separates(e: Expr, pos, neg) -> bool:
    return all(_eval(e, r) is True for r in pos) and all(_eval(e, r) is False for r in neg)


def _atoms(pos, neg, ints, syms) -> list:
    """Candidate single comparisons, in ladder order."""
    out = []
    for t in ints:
        pv = sorted({_eval(t, r) for r in pos})
        nv = sorted({_eval(t, r) for r in neg})
        if pv:
            out.append(Cmp(">=", t, Const(pv[0])))
        if nv:
            out.append(Cmp("<", t, Const(nv[0])))
        if len(pv) == 1:
            out.append(Cmp("==", t, Const(pv[0])))
        if len(nv) == 1:
            out.append(Cmp("!=", t, Const(nv[0])))
        if pv:
            out.append(Cmp("<=", t, Const(pv[-1])))
        if nv:
            out.append(Cmp(">", t, Const(nv[-1])))
    for t in syms:
        pv = sorted({_eval(t, r) for r in pos})
        nv = sorted({_eval(t, r) for r in neg})
        if len(pv) == 1:
            out.append(Cmp("==", t, Const(pv[0])))
        if len(nv) == 1:
            out.append(Cmp("!=", t, Const(nv[0])))
    for a, b in itertools.permutations(ints, 2):
        for op in (">=", "<", ">", "<=", "==", "!="):
            if op in ("==", "!=") and repr(a) > repr(b):
                continue
            out.append(Cmp(op, a, b))
    for a, b in itertools.combinations(syms, 2):
        out.append(Cmp("==", a, b))
        out.append(Cmp("!=", a, b))
    return out


def infer_guard(pos: Sequence[Row], neg: Sequence[Row], rg: Sequence[str],
                input_params: Sequence[str], seed: int = 0, gp=None):
    """Guard true on ``pos`` and false on ``neg``; returns ``(expr, stage)``."""
    if not neg:
        return TRUE, "unguarded"
    ints, syms = _terminals(list(pos) + list(neg), rg, input_params)
    atoms = _atoms(pos, neg, ints, syms)
    for a in atoms:
        if _separates(a, pos, neg):
            return a, "comparison"
    covering = [a for a in atoms if all(_eval(a, r) is True for r in pos)]
    for a, b in itertools.combinations(covering, 2):
        e = And(a, b)
        if _separates(e, pos, neg):
            return e, "conjunction"
    consts = sorted({_eval(t, r) for t in ints for r in list(pos) + list(neg)} | {0, 1})
    e = run_gp_guard(pos, neg, ints, consts, seed=seed, **(gp or {}))
    if e is not None:
        return e, "gp"
    return _enumerated_guard(pos, neg, ints + syms), "enumerated"


def _enumerated_guard(pos, neg, terms) -> Expr:
    """Exact disjunction over the positive rows; sound on the evidence only."""
    clauses = []
    for r in pos:
        clause = conj(*(Cmp("==", t, Const(_eval(t, r))) for t in terms))
        if clause not in clauses:
            clauses.append(clause)
    e = disj(*clauses) if clauses else FALSE
    if not _separates(e, pos, neg):
        raise SynthesisFailure("positive and negative samples coincide on every feature")
    return e


# --- genetic programming ---------------------------------------------------------

@dataclass
class GpSettings:
    population: int = 200
    max_depth: int = 5
    tournament: int = 4
    crossover: float = 0.8
    mutation: float = 0.15
    generations: int = 200


class _Gp:
    def __init__(self, leaves: list, ops: list, rng: random.Random, s: GpSettings, fitness,
                 atomic=(), consts=()):
        self.leaves, self.ops, self.rng, self.s, self.fitness = leaves, ops, rng, s, fitness
        self.consts = list(consts)  # drawn less often than ``leaves``
        self.atomic = tuple(atomic)  # node types never split by crossover or mutation

    def leaf(self) -> Expr:
        if self.consts and self.rng.random() < 0.25:
            return self.rng.choice(self.consts)
        return self.rng.choice(self.leaves)

    def grow(self, depth: int) -> Expr:
        if depth <= 1 or self.rng.random() < 0.3:
            return self.leaf()
        op = self.rng.choice(self.ops)
        return op(self.grow(depth - 1), self.grow(depth - 1))

    def nodes(self, e: Expr, path=()):
        yield path, e
        if self.atomic and isinstance(e, self.atomic):
            return
        for i, c in enumerate(_children(e)):
            yield from self.nodes(c, path + (i,))

    def depth(self, e: Expr) -> int:
        ch = _children(e)
        return 1 + (max(self.depth(c) for c in ch) if ch else 0)

    def pick(self, pop, scores):
        best = None
        for _ in range(self.s.tournament):
            i = self.rng.randrange(len(pop))
            if best is None or scores[i] > scores[best]:
                best = i
        return pop[best]

    def run(self) -> Optional[Expr]:
        pop = [self.grow(self.rng.randint(2, self.s.max_depth)) for _ in range(self.s.population)]
        for _ in range(self.s.generations):
            scores = [self.fitness(e) for e in pop]
            top = max(range(len(pop)), key=lambda i: scores[i])
            if scores[top][0] == 1:
                return pop[top]
            nxt = [pop[top]]
            while len(nxt) < len(pop):
                u = self.rng.random()
                a = self.pick(pop, scores)
                if u < self.s.crossover:
                    child = self.cross(a, self.pick(pop, scores))
                elif u < self.s.crossover + self.s.mutation:
                    child = self.mutate(a)
                else:
                    child = a
                if self.depth(child) > self.s.max_depth:
                    child = a
                nxt.append(child)
            pop = nxt
        return None

    def cross(self, a: Expr, b: Expr) -> Expr:
        pa = [p for p, _ in self.nodes(a)]
        nb = [n for _, n in self.nodes(b)]
        return _replace(a, self.rng.choice(pa), self.rng.choice(nb))

    def mutate(self, a: Expr) -> Expr:
        pa = [p for p, _ in self.nodes(a)]
        return _replace(a, self.rng.choice(pa), self.grow(2))


def _children(e: Expr) -> tuple:
    if isinstance(e, (Arith, Cmp, And, Or)):
        return (e.left, e.right)
    if isinstance(e, Not):
        return (e.operand,)
    return ()


def _replace(e: Expr, path: tuple, sub: Expr) -> Expr:
    if not path:
        return sub
    i, rest = path[0], path[1:]
    if isinstance(e, Not):
        return Not(_replace(e.operand, rest, sub))
    left, right = e.left, e.right
    if i == 0:
        left = _replace(left, rest, sub)
    else:
        right = _replace(right, rest, sub)
    if isinstance(e, (Arith, Cmp)):
        return type(e)(e.op, left, right)
    return type(e)(left, right)


def run_gp(rows, targets, ints, consts, seed: int = 0, settings: GpSettings = None) -> Optional[Expr]:
    """Integer symbolic regression; ``None`` when no exact tree is found."""
    s = settings or GpSettings()
    rng = random.Random(seed)
    leaves = list(ints)
    consts = [Const(c) for c in consts if is_int(c)]
    if not leaves:
        return None
    ops = [lambda a, b, o=o: Arith(o, a, b) for o in ("+", "-", "*")]

    def fitness(e):
        hit = sum(1 for r, v in zip(rows, targets) if _eval(e, r) == v)
        return (1 if hit == len(rows) else 0, hit, -e.size())

    return _Gp(leaves, ops, rng, s, fitness, consts=consts).run()


def run_gp_guard(pos, neg, ints, consts, seed: int = 0, settings: GpSettings = None) -> Optional[Expr]:
    s = settings or GpSettings()
    rng = random.Random(seed)
    if not ints:
        return None
    terms = list(ints) + [Const(c) for c in consts if is_int(c)]
    leaves = [Cmp(op, a, b) for a in ints for b in terms if a != b for op in (">=", "<", "==")]
    ops = [lambda a, b: And(a, b), lambda a, b: Or(a, b)]

    def fitness(e):
        hit = sum(1 for r in pos if _eval(e, r) is True) + sum(1 for r in neg if _eval(e, r) is False)
        total = len(pos) + len(neg)
        return (1 if hit == total else 0, hit, -e.size())

    return _Gp(leaves, ops, rng, s, fitness, atomic=(Cmp,)).run()


# --- model assembly ----------------------------------------------------------------

@dataclass
class SynthesisEntry:
    source: str
    input: str
    output: str
    target: str
    what: str  # "guard" or an output parameter name
    stage: str
    expr: str
    samples: int
    failed: bool = False

    def as_record(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Generalisation:
    model: Efsm
    report: list = field(default_factory=list)  # [SynthesisEntry]
    state_names: dict = field(default_factory=dict)  # representative -> model state

    @property
    def failures(self) -> list:
        return [e for e in self.report if e.failed]


def _infer_domains(alphabet, rows_by_name: dict, kind: str) -> dict:
    out = {}
    entries = alphabet.inputs if kind == "in" else alphabet.outputs
    for name, params in entries:
        sig_params = []
        for i, p in enumerate(params):
            vals = {v[i] for v in rows_by_name.get(name, ()) if i < len(v)}
            if vals and all(isinstance(v, str) for v in vals):
                sig_params.append((p, enum(*sorted(vals))))
            else:
                sig_params.append((p, INT))
        out[name] = Signature(name, tuple(sig_params))
    return out


def generalise(reduction, rg: Sequence[str], seed: int = 0, interface: Efsm = None,
               gp: dict = None) -> Generalisation:
    """Assemble an EFSM from a reduced sampled machine.

    States are named ``q0, q1, ...`` in discovery order.  Ω rows act only as
    negative evidence; ω transitions stay guarded self-loops.  ``interface``
    supplies parameter domains; without it they are read off the samples.
    """
    fsm = reduction.fsm
    al = fsm.alphabet
    names = {q: f"q{i}" for i, q in enumerate(fsm.states)}
    edge_rows = reduction.edge_rows

    if interface is not None:
        inputs, outputs = dict(interface.inputs), dict(interface.outputs)
    else:
        seen_in, seen_out = {}, {}
        for (_, _, _, _), rows in edge_rows.items():
            for s in rows:
                seen_in.setdefault(s.x.name, []).append(s.x.args)
                seen_out.setdefault(s.y.name, []).append(s.y.args)
        inputs = _infer_domains(al, seen_in, "in")
        outputs = _infer_domains(al, seen_out, "out")

    by_source: dict = {}
    for (q, x, y, t), rows in edge_rows.items():
        by_source.setdefault((q, x), []).append((y, t, rows))

    transitions, report = [], []
    for q in fsm.states:
        for x in al.input_names:
            branches = sorted(by_source.get((q, x), []), key=lambda b: (b[0], names.get(b[1], "")))
            if not branches:
                continue
            ip = al.input_params(x)
            live = [b for b in branches if b[0] != NOT_APPLICABLE_NAME]
            refused = [s for b in branches if b[0] == NOT_APPLICABLE_NAME for s in b[2]]
            guards = {}
            if len(live) == 2 and not refused:
                a, b = live
                pos = [Row.of(s, rg, ip) for s in a[2]]
                neg = [Row.of(s, rg, ip) for s in b[2]]
                g, stage, failed = _guard(pos, neg, rg, ip, seed, gp)
                guards[0] = (g, stage, failed, len(pos))
                if stage in ("comparison", "unguarded"):
                    guards[1] = (negate(g), stage, failed, len(neg))
                else:
                    g2, st2, f2 = _guard(neg, pos, rg, ip, seed, gp)
                    guards[1] = (g2, st2, f2, len(neg))
            else:
                for i, br in enumerate(live):
                    pos = [Row.of(s, rg, ip) for s in br[2]]
                    neg = [Row.of(s, rg, ip) for j, o in enumerate(live) if j != i for s in o[2]]
                    neg += [Row.of(s, rg, ip) for s in refused]
                    g, stage, failed = _guard(pos, neg, rg, ip, seed, gp)
                    guards[i] = (g, stage, failed, len(pos))
            for i, (y, t, rows) in enumerate(live):
                g, stage, failed, n = guards[i]
                src = names[q]
                tgt = src if y == NO_EFFECT_NAME else names.get(t, src)
                report.append(SynthesisEntry(src, x, y, tgt, "guard", stage, render(g), n, failed))
                exprs = []
                if y != NO_EFFECT_NAME:
                    out_params = al.output_params(y)
                    prows = [Row.of(s, rg, ip) for s in rows]
                    for k, p in enumerate(out_params):
                        targets = [r.values[k] for r in prows]
                        try:
                            e, st = infer_output_fn(prows, targets, rg, ip, seed, gp)
                            bad = False
                        except SynthesisFailure:
                            e, st, bad = Const(max(set(targets), key=targets.count)), "failed", True
                        exprs.append(e)
                        report.append(SynthesisEntry(src, x, y, tgt, p, st, render(e), len(prows), bad))
                transitions.append(Transition(src, x, g, y, tuple(exprs), (), tgt))

    states = tuple(names[q] for q in fsm.states)
    model = Efsm(states, states[0], inputs, outputs, {}, tuple(transitions))
    return Generalisation(model, report, names)


def _guard(pos, neg, rg, ip, seed, gp):
    try:
        g, stage = infer_guard(pos, neg, rg, ip, seed, gp)
        return g, stage, stage == "enumerated"
    except SynthesisFailure:
        return TRUE, "failed", True
