"""Command line driver: ``ehw validate | infer | replay | export-dot``.

Exit codes: 0 success, 1 validation or inference failure, 2 usage error
(bad arguments or unreadable input files).
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import time
from pathlib import Path

from .abstraction import Alphabet, Trace
from .backbone import BudgetExceeded, InferenceFailed, Learner, NoPathFound, ehw_main
from .config import load_config
from .control import WInconsistency
from .dot import efsm_to_dot, nfsm_snapshot, nfsm_to_dot, snapshot_to_dot
from .dsl import ParseError, load_efsm, parse_input_sequence, serialize_efsm
from .efsm import ConcreteInput, Efsm, Interpreter, NondeterminismError, validate_efsm
from .expr import And, Arith, Cmp, Const, EvalBottom, ExprTypeError, Not, Or, is_int

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_machine(path) -> Efsm:
    try:
        return load_efsm(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _constants(e, out: set):
    if isinstance(e, Const) and is_int(e.value):
        out.add(e.value)
    elif isinstance(e, (Arith, Cmp, And, Or)):
        _constants(e.left, out)
        _constants(e.right, out)
    elif isinstance(e, Not):
        _constants(e.operand, out)


def default_probe(machine: Efsm, limit: int = 64) -> list:
    """Concrete inputs for the bounded determinism check.

    Integer parameters range over 0, 1 and every integer constant of the
    machine with its neighbours; enumerated parameters over their symbols.
    """
    consts = {0, 1}
    for t in machine.transitions:
        for e in (t.guard, *t.output_exprs, *(u for _, u in t.updates)):
            _constants(e, consts)
    ints = sorted({c + d for c in consts for d in (-1, 0, 1)})
    probe = []
    for name, sig in machine.inputs.items():
        pools = [list(d.symbols) if d.symbols else ints for _, d in sig.params]
        for args in itertools.islice(itertools.product(*pools), limit):
            probe.append(ConcreteInput(name, tuple(args)))
    return probe


# --- validate -------------------------------------------------------------------

def cmd_validate(args) -> int:
    machine = _load_machine(args.efsm)
    if args.probe is not None:
        try:
            probe = parse_input_sequence(args.probe)
        except ParseError as exc:
            raise UsageError(f"--probe: {exc}") from None
    else:
        probe = default_probe(machine)
    report = validate_efsm(machine, probe, max_depth=args.depth)
    print(report.summary())
    if args.json:
        rec = {"file": str(args.efsm), "ok": report.ok,
               "violations": [{"kind": v.kind, "message": v.message} for v in report.violations]}
        print(json.dumps(rec))
    return EXIT_OK if report.ok else EXIT_FAIL


# --- infer ------------------------------------------------------------------------

def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def _dump_session(out: Path, learner: Learner, rg):
    _write(out / "trace.log", learner.trace.to_jsonl(rg))
    _write(out / "events.jsonl", "".join(json.dumps(e.as_record(), ensure_ascii=False) + "\n"
                                         for e in learner.events))
    snap = nfsm_snapshot(learner.fsm)
    _write(out / "nfsm.json", json.dumps(snap, indent=1, ensure_ascii=False) + "\n")
    _write(out / "nfsm.dot", snapshot_to_dot(snap, with_samples=True))


def cmd_infer(args) -> int:
    machine = _load_machine(args.efsm)
    try:
        config = load_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
    except ParseError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.no_bounded_transfer:
        changes["bounded_transfer"] = False
    if args.repair_w:
        changes["repair_w"] = True
    config = config.with_(**changes)
    problems = config.problems()
    if problems:
        raise UsageError("; ".join(problems))

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    alphabet = Alphabet.of(machine)
    learner = Learner(Interpreter(machine), alphabet, config)
    t0 = time.perf_counter()
    try:
        result = ehw_main(learner.sul, alphabet, config, interface=machine, learner=learner)
    except (WInconsistency, InferenceFailed, BudgetExceeded, NoPathFound,
            NondeterminismError) as exc:
        _dump_session(out, learner, config.Rg)
        stats = {"aborted": type(exc).__name__, "message": str(exc),
                 "position": len(learner.trace), "steps_total": len(learner.trace),
                 "runtime_s": round(time.perf_counter() - t0, 3)}
        _write(out / "stats.json", json.dumps(stats, indent=1) + "\n")
        print(f"inference aborted at trace position {len(learner.trace)}: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    stats = dict(result.stats, runtime_s=round(time.perf_counter() - t0, 3))
    _dump_session(out, learner, config.Rg)
    _write(out / "learned.efsm", serialize_efsm(result.model))
    _write(out / "learned.dot", efsm_to_dot(result.model, "learned"))
    _write(out / "reduced.dot", nfsm_to_dot(result.reduction.fsm, "reduced", with_samples=True))
    _write(out / "synthesis.json", json.dumps([e.as_record() for e in result.report], indent=1,
                                              ensure_ascii=False) + "\n")
    _write(out / "stats.json", json.dumps(stats, indent=1) + "\n")
    print(serialize_efsm(result.model), end="")
    print(json.dumps(stats))
    if result.generalisation.failures:
        print(f"warning: {len(result.generalisation.failures)} synthesis failure(s), "
              f"see synthesis.json", file=sys.stderr)
    return EXIT_OK


# --- replay -----------------------------------------------------------------------

def replay(trace: Trace, machine: Efsm):
    """Run the logged inputs on ``machine`` from its initial state.

    Returns ``None`` on a match, else ``(step, expected, got)`` for the first
    divergence, where ``expected`` is the logged output.
    """
    interp = Interpreter(machine)
    for i, (x, y) in enumerate(trace.steps, 1):
        try:
            got = interp.step(x)
        except (NondeterminismError, EvalBottom, ExprTypeError, OverflowError, KeyError) as exc:
            return i, y, exc
        if got != y:
            return i, y, got
    return None


def cmd_replay(args) -> int:
    machine = _load_machine(args.efsm)
    try:
        text = Path(args.log).read_text(encoding="utf-8")
        trace = Trace.from_jsonl(text)
    except OSError as exc:
        raise UsageError(f"cannot read {args.log}: {exc.strerror}") from None
    except (ValueError, KeyError, ParseError) as exc:
        raise UsageError(f"{args.log}: malformed log ({exc})") from None
    verdict = replay(trace, machine)
    if verdict is None:
        print(f"match ({len(trace)} steps)")
        return EXIT_OK
    step, expected, got = verdict
    print(f"divergence at step {step}: log has {expected}, model gives {got}")
    return EXIT_FAIL


# --- export-dot -------------------------------------------------------------------

def cmd_export_dot(args) -> int:
    path = Path(args.source)
    if path.suffix == ".json":
        try:
            snap = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
        text = snapshot_to_dot(snap, path.stem, with_samples=True)
    else:
        text = efsm_to_dot(_load_machine(path), path.stem)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ehw", description="Learn EFSMs from a black box without reset.")
    p.add_argument("-v", "--verbose", action="store_true", help="log learner progress")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check an EFSM against the learner's assumptions")
    v.add_argument("efsm")
    v.add_argument("--probe", help="concrete inputs for the bounded check, e.g. 'a(0) a(1) b(0)'")
    v.add_argument("--depth", type=int, default=6, help="exploration depth of the bounded check")
    v.add_argument("--json", action="store_true", help="also print a machine-readable record")
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("infer", help="learn a model of an EFSM used as black box")
    i.add_argument("efsm")
    i.add_argument("config")
    i.add_argument("-o", "--output", required=True, help="directory for the artifacts")
    i.add_argument("--seed", type=int)
    i.add_argument("--no-bounded-transfer", action="store_true",
                   help="search transfer paths without the length bound")
    i.add_argument("--repair-w", action="store_true",
                   help="extend W with the conflicting input instead of aborting")
    i.set_defaults(func=cmd_infer)

    r = sub.add_parser("replay", help="re-run a trace log on an EFSM")
    r.add_argument("log")
    r.add_argument("efsm")
    r.set_defaults(func=cmd_replay)

    d = sub.add_parser("export-dot", help="DOT text for an .efsm file or an nfsm.json snapshot")
    d.add_argument("source")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_export_dot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
