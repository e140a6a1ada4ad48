"""Equivalence queries approximated by random walks on the black box, and the
handling of the counterexamples they produce.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .control import NfsmState, Sample, WInconsistency, step_target
from .efsm import ConcreteInput, Efsm, NondeterminismError, sul_step
from .expr import EvalBottom, ExprTypeError, is_int

log = logging.getLogger(__name__)


@dataclass
class Counterexample:
    step: int  # trace position (1-based) of the diverging input
    kind: str  # "structural" | "data" | "conflict"
    q: object  # tracked NFSM state before the step (None if unknown)
    r0: object
    x: ConcreteInput
    y: object  # observed output
    r1: object
    expected: object = None  # model output or previously recorded output
    explained: bool = False  # the abstract branch already exists in the learned structure
    rep: object = None  # reduced state the EFSM walk was in
    earlier: Optional[int] = None  # step of the recorded row a conflict contradicts

    def as_record(self) -> dict:
        return {"kind": "CE", "step": self.step, "ce_kind": self.kind, "input": str(self.x),
                "observed": str(self.y), "expected": str(self.expected),
                "explained": self.explained}


def nfsm_counterexample(learner, inputs: Sequence[ConcreteInput], walks: int, length: int,
                        rng: random.Random) -> Optional[Counterexample]:
    """Random walks over ``inputs`` compared with Δ and Λ; harvests Λ on the way."""
    inputs = list(inputs)
    learner.oracle_mode = True
    try:
        for _ in range(walks):
            if learner.q is None:
                learner.home()
            for _ in range(length):
                x = rng.choice(inputs)
                q, r0 = learner.q, learner.r
                y = learner.apply(x, track=False)
                r1 = learner.r
                fsm = learner.fsm
                prev = fsm.row_rg(q, x, fsm.rg(r0))
                if prev is not None and prev.y.name != y.name:
                    learner.q = q
                    return Counterexample(len(learner.trace), "conflict", q, r0, x, y, r1, prev.y,
                                          earlier=prev.step)
                known = y.name in fsm.outputs(q, x.name)
                nxt, _ = step_target(fsm, q, r0, x, y)
                if known and nxt is None and x not in learner.I2:
                    fsm.add_sample(q, Sample(r0, x, y, r1, len(learner.trace)))
                    learner.q = None
                    break
                if not known or nxt is None:
                    learner.q = q
                    return Counterexample(len(learner.trace), "structural", q, r0, x, y, r1,
                                          None, known)
                learner.q = learner._follow(q, r0, x, y)
                if learner.q is None:
                    break
        return None
    finally:
        learner.oracle_mode = False


@dataclass
class WalkValues:
    """Where the EFSM-level oracle draws concrete inputs from.

    Each abstract input is drawn uniformly; each parameter takes a value seen
    in the configured inputs or, for integers, a fresh one in ``[-spread, spread]``.
    """

    alphabet: object
    pools: dict  # (input name, position) -> [values]
    spread: int = 10

    @classmethod
    def from_inputs(cls, alphabet, inputs: Sequence[ConcreteInput], spread: int = 10):
        pools: dict = {}
        for x in inputs:
            for i, v in enumerate(x.args):
                lst = pools.setdefault((x.name, i), [])
                if v not in lst:
                    lst.append(v)
        return cls(alphabet, pools, spread)

    def draw(self, rng: random.Random) -> ConcreteInput:
        name = rng.choice(self.alphabet.input_names)
        args = []
        for i, _ in enumerate(self.alphabet.input_params(name)):
            pool = self.pools.get((name, i), [])
            ints = bool(pool) and all(is_int(v) for v in pool)
            if (not pool or ints) and rng.random() < 0.5:
                args.append(rng.randint(-self.spread, self.spread))
            elif pool:
                args.append(rng.choice(pool))
            else:
                args.append(rng.randint(-self.spread, self.spread))
        return ConcreteInput(name, tuple(args))


def efsm_counterexample(learner, gen, reduction, walks: int, length: int, rng: random.Random,
                        values: WalkValues, extra_rows: dict) -> Optional[Counterexample]:
    """Random concrete walks run in lockstep on the learned model and the black box.

    Matching steps are kept as extra samples of the reduced state they were
    taken from.  ``gen`` is the current :class:`Generalisation`.
    """
    model: Efsm = gen.model
    by_name = {v: k for k, v in gen.state_names.items()}
    learner.oracle_mode = True
    try:
        for _ in range(walks):
            learner.home()
            rep = reduction.block_of.get(learner.q)
            if rep is None:
                continue
            for _ in range(length):
                x = values.draw(rng)
                r0 = learner.r
                regs = r0.project(model.register_names)
                try:
                    y_m, s_m, _ = sul_step(model, gen.state_names[rep], regs, x,
                                           learner.alphabet.refresh_on_no_effect)
                except (EvalBottom, ExprTypeError, OverflowError, NondeterminismError):
                    y_m, s_m = None, None
                y = learner.apply(x, track=False)
                r1 = learner.r
                sample = Sample(r0, x, y, r1, len(learner.trace))
                if y_m is None or y_m.name != y.name:
                    explained = y.name in reduction.fsm.outputs(rep, x.name)
                    return Counterexample(len(learner.trace), "structural",
                                          _member(learner, reduction, rep, r0), r0, x, y, r1,
                                          y_m, explained, rep)
                if y_m != y:
                    return Counterexample(len(learner.trace), "data", None, r0, x, y, r1, y_m,
                                          True, rep)
                extra_rows.setdefault(rep, []).append(sample)
                rep = by_name[s_m]
        return None
    finally:
        learner.oracle_mode = False


def _member(learner, reduction, rep, r):
    """The unreduced state of ``rep``'s block whose R_w part matches ``r``."""
    rw = learner.fsm.rw(r)
    for block in reduction.blocks:
        if block[0] == rep:
            hits = [q for q in block if q.rw == rw]
            return hits[0] if len(hits) == 1 else None
    return None


def process_counterexample(learner, ce: Counterexample, extra_rows: dict = None) -> str:
    """Fold a counterexample into the learner.

    Returns ``"reset"`` when W was extended and the tables cleared, ``"rows"``
    when only samples were added, and ``"structure"`` when the control
    structure changed.
    """
    learner.emit("CE", ce_kind=ce.kind, input=str(ce.x), observed=str(ce.y),
                 expected=str(ce.expected), position=ce.step)
    x = ce.x
    if ce.kind == "conflict":
        w = (x,)
        if w in learner.W or not learner.config.repair_w:
            why = "W already contains" if w in learner.W else "W repair is off; W lacks"
            steps = (ce.step,) if ce.earlier is None else (ce.earlier, ce.step)
            where = " and ".join(map(str, steps))
            raise WInconsistency(
                f"{why} {x} and cannot separate the states merged in {ce.q!r} "
                f"({x} gave {ce.expected} and {ce.y} at steps {where})", ce.q, x, steps)
        log.warning("W extended with %s after conflicting samples at step %d", x, ce.step)
        learner.W.append(w)
        _add(learner.I1, x)
        _add(learner.I2, x)
        _add(learner.Is, x)
        learner.reset_knowledge()
        return "reset"
    _add(learner.Is, x)
    if ce.kind == "data" or ce.explained:
        if extra_rows is not None and ce.rep is not None:
            extra_rows.setdefault(ce.rep, []).append(Sample(ce.r0, ce.x, ce.y, ce.r1, ce.step))
        return "rows"
    _add(learner.I1, x)
    _add(learner.I2, x)
    if isinstance(ce.q, NfsmState) and ce.q in learner.fsm:
        learner.observe_branch(ce.q, ce.r0, x, ce.y, ce.r1, ce.step)
    else:
        learner.q = None
    return "structure"


def _add(lst: list, x):
    if x not in lst:
        lst.append(x)


@dataclass
class Divergence:
    step: int  # 1-based, counted after the homing sequence
    x: Optional[ConcreteInput]
    observed: object
    predicted: object
    reason: str = "output"  # "output" | "homing" | "unmapped"


def conformance_walk(result, sul, steps: int, rng: random.Random,
                     values: WalkValues = None) -> Optional[Divergence]:
    """Home ``sul`` with h, then run ``result.model`` next to it on random inputs.

    The homing response and the R_w part of the tracked registers name an
    NFSM state; its block in the reduction gives the model state to start
    from.  Returns the first divergence, or ``None`` after ``steps`` matching
    steps.
    """
    learner = result.learner
    al = learner.alphabet
    model: Efsm = result.model
    values = values or WalkValues.from_inputs(al, learner.Is)
    r = al.empty_config()
    eta = []
    for x in learner.config.h:
        y = sul.step(x)
        r = r.set(al.updates(x, y))
        eta.append(y.name)
    charac = learner.H.charac(tuple(eta))
    if charac is None:
        return Divergence(0, None, ".".join(eta), None, "homing")
    rep = result.reduction.block_of.get(NfsmState(charac, learner.fsm.rw(r)))
    if rep is None:
        return Divergence(0, None, NfsmState(charac, learner.fsm.rw(r)), None, "unmapped")
    state = result.generalisation.state_names[rep]
    regs = r.project(model.register_names)
    for i in range(1, steps + 1):
        x = values.draw(rng)
        try:
            y_m, state, regs = sul_step(model, state, regs, x, al.refresh_on_no_effect)
        except (EvalBottom, ExprTypeError, OverflowError, NondeterminismError) as exc:
            y_m = exc
        y = sul.step(x)
        if y_m != y:
            return Divergence(i, x, y, y_m)
    return None
