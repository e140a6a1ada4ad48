"""Graphviz DOT text for EFSMs and for the sampled control machine."""
from __future__ import annotations

from .control import NfsmState, SampledFsm, Stub, _sym
from .efsm import NOT_APPLICABLE_NAME, Efsm, Transition
from .expr import TRUE, render


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def transition_label(machine: Efsm, t: Transition) -> str:
    shadowed = frozenset(machine.inputs[t.input].param_names)
    label = t.input
    if t.guard != TRUE:
        label += f" [{render(t.guard, shadowed)}]"
    if t.is_no_effect:
        label += " / ω"
    else:
        args = ", ".join(render(e, shadowed) for e in t.output_exprs)
        label += f" / {t.output}({args})" if t.output_exprs else f" / {t.output}"
    if t.updates:
        label += " {" + ", ".join(f"{k} := {render(e, shadowed)}" for k, e in t.updates) + "}"
    return label


def efsm_to_dot(machine: Efsm, name: str = "efsm") -> str:
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in machine.states:
        shape = "doublecircle" if s == machine.initial else "circle"
        lines.append(f"  {_quote(s)} [shape={shape}];")
    lines.append(f"  __start -> {_quote(machine.initial)};")
    for t in machine.transitions:
        lines.append(f"  {_quote(t.source)} -> {_quote(t.target)} "
                     f"[label={_quote(transition_label(machine, t))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def nfsm_snapshot(fsm: SampledFsm) -> dict:
    """A JSON-ready record of the abstract transitions of ``fsm``.

    Edges to a stub point at its partial characterization; Ω entries are
    listed with the input they refuse.
    """
    states = [q.label() for q in fsm.states]
    edges, seen = [], set()
    for q, x, y, t in fsm.edges():
        if (q, x, y, t) in seen:
            continue
        seen.add((q, x, y, t))
        if isinstance(t, Stub):
            target, partial = repr(t), True
        elif isinstance(t, NfsmState):
            target, partial = t.label(), False
        else:
            continue
        edges.append({"source": q.label(), "input": x, "output": y, "target": target,
                      "partial": partial, "samples": len(fsm.lam.get((q, x, y), []))})
    return {"states": states, "edges": edges}


def snapshot_to_dot(snap: dict, name: str = "nfsm", with_samples: bool = False) -> str:
    """Draw a snapshot; Ω self-loops are left out and stubs are dashed."""
    ids = {s: f"n{i}" for i, s in enumerate(snap["states"])}
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;"]
    for s, i in ids.items():
        lines.append(f"  {i} [label={_quote(s)}];")
    for e in snap["edges"]:
        if e["output"] == NOT_APPLICABLE_NAME:
            continue
        if e["target"] not in ids:
            ids[e["target"]] = f"n{len(ids)}"
            style = ", style=dashed" if e.get("partial") else ""
            lines.append(f"  {ids[e['target']]} [label={_quote(e['target'])}{style}];")
        label = f"{e['input']} / {_sym(e['output'])}"
        if with_samples:
            label += f" ({e.get('samples', 0)})"
        lines.append(f"  {ids[e['source']]} -> {ids[e['target']]} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def nfsm_to_dot(fsm: SampledFsm, name: str = "nfsm", with_samples: bool = False) -> str:
    return snapshot_to_dot(nfsm_snapshot(fsm), name, with_samples)
