"""The inference engine: homing, transfer, backbone exploration and the main loop."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .abstraction import Alphabet, Trace
from .config import LearnerConfig
from .control import (
    AccessTable, HomingDict, NfsmState, Prediction, Sample, SampledFsm, Stub,
    WInconsistency, delta_minus, find_complete_scc, input_key, plan_path, predict,
    replay_access, step_target,
)
from .expr import BOTTOM
from .efsm import NO_EFFECT_NAME, NOT_APPLICABLE_NAME, ConcreteInput, ConcreteOutput

log = logging.getLogger(__name__)


class SulAdapter(Protocol):
    def step(self, x: ConcreteInput) -> ConcreteOutput: ...


class NoPathFound(Exception):
    pass


class BudgetExceeded(Exception):
    pass


class InferenceFailed(Exception):
    pass


@dataclass
class Event:
    kind: str  # HOME, CHARACTERIZE, LEARN, SAMPLE, TRANSFER, GUARD-DISCOVERED, CE, ...
    step: int
    detail: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {"kind": self.kind, "step": self.step, **self.detail}


@dataclass
class TransferResult:
    q: NfsmState
    r: object
    x: ConcreteInput
    y: ConcreteOutput
    r1: object
    step: int  # trace position of the X step (1-based)


class Learner:
    """Mutable learning session over one black box, without reset."""

    def __init__(self, sul: SulAdapter, alphabet: Alphabet, config: LearnerConfig):
        problems = config.problems()
        if problems:
            raise ValueError("; ".join(problems))
        self.sul = sul
        self.alphabet = alphabet
        self.config = config
        self.W = [tuple(w) for w in config.W]
        self.I1 = list(config.I1)
        self.I2 = list(config.I2)
        self.Is = list(config.Is)
        self.trace = Trace()
        self.r = alphabet.empty_config()
        self.events: list = []
        self.oracle_mode = False
        self.oracle_steps = 0
        self.warnings: list = []
        self.reset_knowledge()

    # --- bookkeeping ---------------------------------------------------------
    def reset_knowledge(self):
        self.fsm = SampledFsm(self.alphabet, self.config.Rw, self.config.Rg)
        self.H = HomingDict(len(self.W))
        self.A = AccessTable()
        self.q = None
        self.eta = None
        self.home_pos = None
        self.home_state = None
        self.home_r = None

    def emit(self, event: str, **detail):
        self.events.append(Event(event, len(self.trace), detail))

    @property
    def steps(self) -> int:
        return len(self.trace)

    @property
    def learning_steps(self) -> int:
        return len(self.trace) - self.oracle_steps

    # --- talking to the black box --------------------------------------------
    def apply(self, x: ConcreteInput, track: bool = True) -> ConcreteOutput:
        """Feed one input; update registers, the trace and (optionally) Λ."""
        if len(self.trace) >= self.config.max_steps:
            raise BudgetExceeded(f"step budget {self.config.max_steps} exhausted")
        r0 = self.r
        y = self.sul.step(x)
        self.r = r0.set(self.alphabet.updates(x, y))
        self.trace.append(x, y, self.r)
        if self.oracle_mode:
            self.oracle_steps += 1
        if track and self.q is not None:
            self.q = self._follow(self.q, r0, x, y)
        elif not track:
            self.q = None
        return y

    def apply_seq(self, xs: Sequence[ConcreteInput], track: bool = True) -> list:
        return [self.apply(x, track) for x in xs]

    def _follow(self, q, r0, x, y):
        """Track a step from a known state, harvesting Λ; ``None`` when lost."""
        nxt, r1 = step_target(self.fsm, q, r0, x, y)
        if nxt is None:
            return None
        if y.name in (NOT_APPLICABLE_NAME, NO_EFFECT_NAME) and not self.fsm.target(
                q, x.name, y.name, self.fsm.rw(r1)):
            self.fsm.set_target(q, x.name, y.name, q)
        self.fsm.add_sample(q, Sample(r0, x, y, r1, len(self.trace)))
        return nxt

    # --- Home ------------------------------------------------------------------
    def home(self):
        """Apply h (and W queries) until the reached state is known."""
        h = self.config.h
        while True:
            outs = self.apply_seq(h, track=True)
            eta = tuple(y.name for y in outs)
            self.emit("HOME", response=".".join(eta))
            i = self.H.missing(eta)
            if i is not None:
                resp = self.apply_seq(self.W[i], track=False)
                self.H.record(eta, i, tuple(y.name for y in resp))
                self.emit("CHARACTERIZE", response=".".join(eta), w=i,
                          answer=".".join(y.name for y in resp))
                continue
            rg = self.fsm.rg(self.r)
            if any(v is BOTTOM for v in rg.values):
                msg = f"registers {rg!r} not all set after homing response {'.'.join(eta)}"
                if msg not in self.warnings:
                    self.warnings.append(msg)
                    log.warning(msg)
            q = NfsmState(self.H.charac(eta), self.fsm.rw(self.r))
            if self.fsm.add_state(q):
                self.emit("NEW-STATE", state=q.label())
            self.q = q
            self.eta = eta
            self.home_pos = len(self.trace)
            self.home_state = q
            self.home_r = self.r
            self.A.record(eta, q, self.r, ())
            return q

    # --- access table --------------------------------------------------------
    def update_access(self, q, r, upto: int = None):
        """Record the trace suffix since the last homing as an access to (q, r)."""
        if self.home_pos is None:
            return False
        upto = len(self.trace) if upto is None else upto
        access = self.trace.steps[self.home_pos:upto]
        got_q, got_r = replay_access(self.fsm, self.home_state, self.home_r, access)
        if got_q != q or got_r != r:
            return False
        return self.A.record(self.eta, q, r, access)

    # --- Transfer --------------------------------------------------------------
    def _goal_learn(self, J):
        i1 = sorted(self.I1, key=input_key)
        js = sorted(J, key=input_key)
        fsm = self.fsm

        def goal(q, r):
            for x in i1:
                if not fsm.outputs(q, x.name):
                    return x, "learn"
            for x in js:
                if not fsm.outputs(q, x.name):
                    continue
                p = _pinned(fsm, q, r, x)
                if p is not None and isinstance(p.target, Stub):
                    return x, "stub"
            return None
        return goal

    def _goal_sample(self, J):
        js = sorted(J, key=input_key)
        fsm = self.fsm

        def goal(q, r):
            for x in js:
                if not fsm.sampled(q, x) and not fsm.refused(q, x.name):
                    return x, "sample"
            return None
        return goal

    def _access_seeds(self):
        seeds = []
        for (q, r), access in self.A.entries(self.eta).items():
            if not access:
                continue
            path, cq, cr = [], self.q, self.r
            for x, y in access:
                nq, nr = step_target(self.fsm, cq, cr, x, y)
                if nq is None:
                    break
                path.append((x, Prediction(y.name, y, nr, nq, "access"), cq))
                cq, cr = nq, nr
            else:
                seeds.append((cq, cr, path))
        return seeds

    def _plan(self, J, bounded: bool):
        inputs = list(dict.fromkeys(list(self.I1) + list(J)))
        if bounded:
            k = self.config.k if self.config.k is not None else 2 * len(self.fsm.states) + len(self.config.h)
            for goal in (self._goal_learn(J), self._goal_sample(J)):
                plan = plan_path(self.fsm, self.q, self.r, inputs, goal, k)
                if plan is not None:
                    return plan
            return None
        seeds = self._access_seeds()
        for goal in (self._goal_learn(J), self._goal_sample(J)):
            plan = plan_path(self.fsm, self.q, self.r, inputs, goal, None, seeds)
            if plan is not None:
                return plan
        return None

    def transfer(self, J) -> Optional[TransferResult]:
        """Move to the next transition to learn or sample and fire it.

        Returns ``None`` when the plan had to be abandoned without discovering
        anything (the caller simply plans again).
        """
        plan = self._plan(J, self.config.bounded_transfer) if self.config.bounded_transfer else None
        if plan is None:
            self.home()
            plan = self._plan(J, bounded=False)
            if plan is None:
                raise NoPathFound("no reachable state or transition left to learn or sample")
        if plan.path:
            self.emit("TRANSFER", path=".".join(str(x) for x, _, _ in plan.path),
                      goal=str(plan.goal), purpose=plan.kind)
        for x, pred, q_before in plan.path:
            r0 = self.r
            y = self.apply(x, track=False)
            nxt, r1 = step_target(self.fsm, q_before, r0, x, y)
            known = y.name in self.fsm.outputs(q_before, x.name)
            if nxt is None or y.name != pred.y:
                if nxt is not None and known:
                    # known behaviour, wrong prediction of which branch: resume from here
                    self.q = self._follow(q_before, r0, x, y)
                    return None
                self.q = q_before
                if known or self.fsm.outputs(q_before, x.name):
                    self.emit("GUARD-DISCOVERED", state=q_before.label(), input=str(x), output=str(y))
                return TransferResult(q_before, r0, x, y, r1, len(self.trace))
            self.q = self._follow(q_before, r0, x, y)
        self.update_access(self.q, self.r)
        q1, r1 = self.q, self.r
        y = self.apply(plan.goal, track=False)
        self.q = q1
        return TransferResult(q1, r1, plan.goal, y, self.r, len(self.trace))

    # --- learning one transition -------------------------------------------------
    def learn(self, res: TransferResult):
        """Record the fired transition; learn the tail of a new one with W."""
        fsm = self.fsm
        q, r0, x, y, r1 = res.q, res.r, res.x, res.y, res.r1
        sample = Sample(r0, x, y, r1, res.step)
        rw1 = fsm.rw(r1)
        kind = "SAMPLE" if fsm.sampled(q, x) or fsm.outputs(q, x.name) else "LEARN"
        if y.name == NOT_APPLICABLE_NAME or (y.name == NO_EFFECT_NAME and rw1 == q.rw):
            fsm.set_target(q, x.name, y.name, q)
            fsm.add_sample(q, sample)
            self.emit(kind, state=q.label(), input=str(x), output=str(y))
            self.q = q
            return
        t = fsm.target(q, x.name, y.name, rw1)
        if isinstance(t, NfsmState):
            fsm.add_sample(q, sample)
            self.emit(kind, state=q.label(), input=str(x), output=str(y))
            self.q = t
            return
        if t is None and x not in self.I2 and y.name in fsm.outputs(q, x.name):
            # sample-only input reaching a known branch: no new state for its value
            fsm.add_sample(q, sample)
            self.emit("SAMPLE", state=q.label(), input=str(x), output=str(y))
            self.q = None
            return
        if t is None:
            t = Stub(rw1, len(self.W), (q, x.name, y.name))
            fsm.set_target(q, x.name, y.name, t)
        fsm.add_sample(q, sample)
        self.emit(kind, state=q.label(), input=str(x), output=str(y))
        x_pos = len(self.trace)
        i = t.missing()
        w = self.W[i]
        resp = self.apply_seq(w, track=False)
        t.charac[i] = tuple(o.name for o in resp)
        self.emit("CHARACTERIZE", w=i, answer=".".join(t.charac[i]))
        if not t.is_complete():
            self.q = None
            return
        s = t.state()
        fsm.resolve_stub(t, s)
        if fsm.add_state(s):
            self.emit("NEW-STATE", state=s.label())
            self.update_access(s, r1, upto=x_pos)
        cur, cr = s, r1
        for xx, yy in zip(w, resp):
            cur, cr = step_target(fsm, cur, cr, xx, yy)
            if cur is None:
                break
        self.q = cur

    def observe_branch(self, q, r0, x, y, r1, step: int):
        """Learn a transition discovered outside a transfer (for instance by the oracle)."""
        self.learn(TransferResult(q, r0, x, y, r1, step))

    # --- Backbone ----------------------------------------------------------------
    def _reachable_complete(self, J) -> bool:
        """No unsampled state or transition is reachable from the last homing."""
        if self.home_state is None:
            return False
        if self.q is not None and not self.fsm.complete_over(self.q, J):
            return False
        inputs = list(dict.fromkeys(list(self.I1) + list(J)))
        access = {}
        for (q, r), acc in self.A.entries(self.eta).items():
            got = replay_access(self.fsm, self.home_state, self.home_r, acc)
            if got[0] is not None:
                access[got] = acc
        g = delta_minus(self.fsm, self.home_state, self.home_r, inputs, access)
        if any(isinstance(n, Stub) for n in g.nodes):
            return False
        if not all(self.fsm.complete_over(n, J) for n in g.nodes):
            return False
        return find_complete_scc(g, lambda s: self.fsm.complete_over(s, J)) is not None

    def backbone(self, I_o: Sequence[ConcreteInput]):
        """Explore until Δ, Λ are complete over ``I_o`` on the reachable component."""
        I_o = list(dict.fromkeys(list(self.I1) + list(I_o)))
        J = list(self.I1)
        idle = 0
        while True:
            if self.q is None:
                self.home()
            if self._reachable_complete(J):
                if set(J) >= set(I_o):
                    return
                J = I_o
                continue
            try:
                res = self.transfer(J)
            except NoPathFound:
                if set(J) >= set(I_o):
                    self.emit("INCOMPLETE", inputs=len(I_o))
                    return
                J = I_o
                continue
            if res is None:
                idle += 1
                if idle > 1000:
                    raise RuntimeError("transfer keeps failing without progress")
                continue
            idle = 0
            self.learn(res)

    # --- staging -------------------------------------------------------------------
    def stage_inputs(self) -> list:
        """I_o sets for successive backbone calls: I1, one R_w input at a time, then R_g."""
        extra = [x for x in self.I2 if x not in self.I1]
        rw, rg = set(self.config.Rw), set(self.config.Rg)

        def feeds(x, regs):
            return any(p in regs for p in self.alphabet.input_params(x.name))

        by_rw = [x for x in extra if feeds(x, rw)]
        by_rg = [x for x in extra if feeds(x, rg) and x not in by_rw]
        rest = [x for x in extra if x not in by_rw and x not in by_rg]
        stages, cur = [list(self.I1)], list(self.I1)
        for x in by_rw + by_rg + rest:
            cur = cur + [x]
            stages.append(list(cur))
        return stages

    def nfsm_check_sets(self) -> list:
        extra = [x for x in self.I2 if x not in self.I1]
        rw, rg = set(self.config.Rw), set(self.config.Rg)

        def feeds(x, regs):
            return any(p in regs for p in self.alphabet.input_params(x.name))

        with_rw = list(self.I1) + [x for x in extra if feeds(x, rw)]
        with_rg = with_rw + [x for x in extra if feeds(x, rg) and x not in with_rw]
        sets = []
        for s in (list(self.I1), with_rw, with_rg):
            if s not in sets:
                sets.append(s)
        return sets


def _pinned(fsm: SampledFsm, q, r, x):
    p = predict(fsm, q, r, x)
    if p is None or p.basis not in ("exact", "rg", "refused"):
        return None
    return p


# --- main loop ---------------------------------------------------------------------

@dataclass
class LearnResult:
    model: object  # Efsm
    report: list
    stats: dict
    learner: Learner
    reduction: object
    generalisation: object

    @property
    def trace(self) -> Trace:
        return self.learner.trace

    @property
    def events(self) -> list:
        return self.learner.events


def _explore(learner: Learner, rng, nfsm_counterexample):
    """Backbone over the staged input sets, with abstract checks in between."""
    config = learner.config
    checks = learner.nfsm_check_sets() + [list(learner.Is)]
    for stage in learner.stage_inputs() + [list(learner.Is)]:
        learner.backbone(stage)
        if stage not in checks:
            continue
        ce = nfsm_counterexample(learner, stage, config.nfsm_walks, config.nfsm_walk_length, rng)
        if ce is not None:
            return ce
    return None


def ehw_main(sul: SulAdapter, alphabet: Alphabet, config: LearnerConfig, interface=None,
             learner: Learner = None) -> LearnResult:
    """Learn an EFSM of ``sul`` without ever resetting it.

    Backbone stages over growing input sets, each followed by an abstract
    equivalence check, then reduction, generalisation and concrete
    equivalence checks until no counterexample turns up or the round budget
    is spent.  ``interface`` (an :class:`Efsm` of the same signature) only
    supplies parameter domains for the emitted model.
    """
    from .generalise import generalise
    from .oracle import (
        Counterexample, WalkValues, efsm_counterexample, nfsm_counterexample,
        process_counterexample,
    )
    from .reduce import reduce_fsm

    learner = learner or Learner(sul, alphabet, config)
    rng = random.Random(config.seed)
    extra: dict = {}
    ce_count = 0
    stats: dict = {}
    red = gen = None
    rounds = 0
    while True:
        rounds += 1
        if rounds > config.max_rounds:
            learner.emit("GIVE-UP", rounds=config.max_rounds)
            break
        try:
            ce = _explore(learner, rng, nfsm_counterexample)
        except WInconsistency as exc:
            if not config.repair_w or exc.input is None or (exc.input,) in learner.W:
                raise
            ce = Counterexample(len(learner.trace), "conflict", exc.state, None, exc.input,
                                None, None)
        if ce is not None:
            ce_count += 1
            if process_counterexample(learner, ce, extra) == "reset":
                extra.clear()
            continue
        stats["steps_at_reduce"] = learner.learning_steps
        stats["states_before_reduce"] = len(learner.fsm.states)
        values = WalkValues.from_inputs(alphabet, learner.Is)
        structural = False
        while True:
            red = reduce_fsm(learner.fsm, extra)
            gen = generalise(red, config.Rg, config.seed, interface)
            ce = efsm_counterexample(learner, gen, red, config.efsm_walks, config.efsm_walk_length,
                                     rng, values, extra)
            if ce is None:
                break
            ce_count += 1
            if process_counterexample(learner, ce, extra) != "rows":
                structural = True
                break
            rounds += 1
            if rounds > config.max_rounds:
                learner.emit("GIVE-UP", rounds=config.max_rounds)
                break
        if not structural:
            break
    if red is None:
        if not learner.fsm.states:
            raise InferenceFailed(f"no model after {config.max_rounds} rounds")
        red = reduce_fsm(learner.fsm, extra)
        gen = generalise(red, config.Rg, config.seed, interface)
    stats.setdefault("steps_at_reduce", learner.learning_steps)
    stats.setdefault("states_before_reduce", len(learner.fsm.states))
    stats.update(
        steps=learner.learning_steps,
        steps_total=len(learner.trace),
        states_after_reduce=len(red.fsm.states),
        transitions=len(gen.model.transitions),
        ce_count=ce_count,
        lambda_size=learner.fsm.lambda_size(),
        synthesis_failures=len(gen.failures),
    )
    return LearnResult(gen.model, gen.report, stats, learner, red, gen)
