"""Merge NFSM states that are copies of one black-box state under different registers."""
from __future__ import annotations

from dataclasses import dataclass, field

from .control import NfsmState, SampledFsm, Stub, step_target


@dataclass
class Reduction:
    fsm: SampledFsm  # states are block representatives
    block_of: dict  # original state -> representative
    blocks: list  # [[state, ...]] in discovery order
    edge_rows: dict = field(default_factory=dict)  # (rep, x, y, target rep) -> [Sample]

    def representative(self, q):
        return self.block_of.get(q)


def _rows_by_state(fsm: SampledFsm) -> dict:
    out = {}
    for q, s in fsm.samples():
        out.setdefault(q, []).append(s)
    return out


def _compatible_rows(fsm: SampledFsm, rows: list) -> bool:
    """No two rows with equal (X, R_g configuration) but different abstract
    outputs, and none with equal (X, full configuration) but different results."""
    by_rg, by_full = {}, {}
    for s in rows:
        if by_rg.setdefault((s.x, fsm.rg(s.r)), s.y.name) != s.y.name:
            return False
        if by_full.setdefault((s.x, s.r), s.r1) != s.r1:
            return False
    return True


class _Partition:
    """Union-find over states with the bookkeeping a merge needs to check."""

    def __init__(self, fsm, states, rows, order):
        self.fsm = fsm
        self.order = order
        self.parent = {q: q for q in states}
        self.members = {q: list(fsm.members.get(q, (q,))) for q in states}
        self.rows = {q: list(rows.get(q, [])) for q in states}
        self.edges = {q: {} for q in states}  # root -> {(x, y): {target state}}
        for (q, x, y), table in fsm.delta.items():
            for t in table.values():
                if isinstance(t, NfsmState):
                    self.edges[q].setdefault((x, y), set()).add(t)

    def copy(self) -> "_Partition":
        p = object.__new__(_Partition)
        p.fsm, p.order = self.fsm, self.order
        p.parent = dict(self.parent)
        p.members = {k: list(v) for k, v in self.members.items()}
        p.rows = {k: list(v) for k, v in self.rows.items()}
        p.edges = {k: {e: set(ts) for e, ts in v.items()} for k, v in self.edges.items()}
        return p

    def find(self, q):
        while self.parent[q] != q:
            self.parent[q] = self.parent[self.parent[q]]
            q = self.parent[q]
        return q

    def merge(self, a, b) -> bool:
        """Merge the blocks of ``a`` and ``b`` and fold their successors."""
        todo = [(a, b)]
        while todo:
            a, b = (self.find(s) for s in todo.pop())
            if a == b:
                continue
            if self.order[b] < self.order[a]:
                a, b = b, a
            ma, mb = self.members[a], self.members[b]
            for p in ma:
                for q in mb:
                    if p.rw == q.rw and p.charac != q.charac:
                        return False
            rows = self.rows[a] + self.rows[b]
            if not _compatible_rows(self.fsm, rows):
                return False
            self.parent[b] = a
            ma.extend(mb)
            self.rows[a] = rows
            for e, ts in self.edges.pop(b).items():
                self.edges[a].setdefault(e, set()).update(ts)
            del self.members[b], self.rows[b]
            for e, ts in self.edges[a].items():
                roots = sorted({self.find(t) for t in ts}, key=self.order.get)
                todo.extend((roots[0], r) for r in roots[1:])
        return True


def reduce_fsm(fsm: SampledFsm, extra_rows: dict = None) -> Reduction:
    """Greedy merge of states that behave alike and whose samples agree.

    States are visited in discovery order and each one is merged into the
    first earlier block that accepts it.  A merge also merges the successors
    reached by the same abstract input and output, and is undone if any
    resulting block holds contradictory samples or two states with the same
    R_w configuration but different characterizations.  States of an already
    reduced machine carry their original members into that check, so reducing
    twice changes nothing.  ``extra_rows`` maps a state to additional samples
    attributed to it.
    """
    states = list(fsm.states)
    order = {q: i for i, q in enumerate(states)}
    rows = _rows_by_state(fsm)
    for q, extra in (extra_rows or {}).items():
        if q in order:
            rows.setdefault(q, []).extend(extra)

    part = _Partition(fsm, states, rows, order)
    for q in states:
        if part.find(q) != q:
            continue
        for root in [s for s in states if order[s] < order[q] and part.find(s) == s]:
            trial = part.copy()
            if trial.merge(root, q):
                part = trial
                break

    blocks = [[q for q in states if part.find(q) == root] for root in states if part.find(root) == root]
    block_of = {q: b[0] for b in blocks for q in b}
    out = SampledFsm(fsm.alphabet, fsm.rw_names, fsm.rg_names)
    for b in blocks:
        out.add_state(b[0])
        out.members[b[0]] = tuple(m for q in b for m in fsm.members.get(q, (q,)))
    for (q, x, y), table in fsm.delta.items():
        rep = block_of[q]
        for rw, t in table.items():
            if isinstance(t, Stub):
                continue
            out.set_target(rep, x, y, block_of[t], rw)
    edge_rows: dict = {}
    for q in states:
        for s in rows.get(q, []):
            rep = block_of[q]
            out.add_sample(rep, s)
            nxt, _ = step_target(fsm, q, s.r, s.x, s.y)
            if nxt is not None:
                tgt = block_of[nxt]
            else:
                known = set(out.delta.get((rep, s.x.name, s.y.name), {}).values())
                if len(known) != 1:
                    continue
                (tgt,) = known
            edge_rows.setdefault((rep, s.x.name, s.y.name, tgt), []).append(s)
    return Reduction(out, block_of, blocks, edge_rows)
