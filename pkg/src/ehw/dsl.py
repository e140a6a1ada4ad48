"""Plain-text EFSM format.

Example::

    inputs: select(i1:enum(tea,coffee)), coin(i2:int), vend()
    outputs: Pay(t:int), Display(t:int), Serve(b:enum(tea,coffee))
    registers: r1:enum(tea,coffee), r2:int
    states: s0, s1
    initial: s0
    s0 -- select(i1) / Pay(0) {r1 := i1, r2 := 0} --> s1
    s1 -- vend() [r2 < 100] / omega --> s1

Inside a transition a bare name is resolved as an input parameter of that
transition, then a register, then an enumeration symbol.  ``@name`` always
means the register, which is how a guard reads the previous value of a
parameter it shadows.  A register may be declared with an initial value
(``ra:int = 0``); otherwise it starts unset.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .efsm import (
    INT, NO_EFFECT_NAME, NOT_APPLICABLE, NO_EFFECT, ConcreteInput, ConcreteOutput,
    Domain, Efsm, Signature, Transition,
)
from .expr import (
    BOTTOM, TRUE, And, Arith, Cmp, Const, Expr, Not, Or, Param, Reg, is_int, render,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        where = f"line {line}, column {column}: " if line else ""
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}{message}{exp}")


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>-->)
  | (?P<dash>--)
  | (?P<assign>:=)
  | (?P<op><=|>=|==|!=|≤|≥|≠|[<>=])
  | (?P<int>\d+)
  | (?P<str>'[^']*')
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\]{},:/+\-*×@])
""", re.VERBOSE)

_OP_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "=": "==", "×": "*"}
KEYWORDS = {"and", "or", "not", "true", "false", "omega", "int", "enum"}


@dataclass
class Token:
    kind: str
    text: str
    col: int


def tokenize(text: str, line: int = 1, col0: int = 1) -> list:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            t = m.group()
            if kind == "op":
                t = _OP_ALIASES.get(t, t)
            elif kind == "punct" and t == "×":
                t = "*"
            toks.append(Token(kind, t, col0 + pos))
        pos = m.end()
    toks.append(Token("eol", "", col0 + len(text)))
    return toks


class _Cursor:
    def __init__(self, toks, line):
        self.toks = toks
        self.i = 0
        self.line = line

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, *texts) -> bool:
        return self.tok.text in texts and self.tok.kind != "str"

    def error(self, msg, expected=()):
        raise ParseError(msg, self.line, self.tok.col, expected)

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            self.error(f"unexpected {self.tok.text or 'end of line'!r}", [repr(text)])
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.peek(text):
            self.i += 1
            return True
        return False

    def name(self, what="identifier") -> str:
        if self.tok.kind != "name" or self.tok.text in KEYWORDS:
            self.error(f"unexpected {self.tok.text or 'end of line'!r}", [what])
        t = self.tok.text
        self.i += 1
        return t

    def end(self):
        if self.tok.kind != "eol":
            self.error(f"unexpected {self.tok.text!r}", ["end of line"])


# --- declarations -----------------------------------------------------------

def _domain(c: _Cursor) -> Domain:
    if c.accept("int"):
        return INT
    if c.accept("enum"):
        c.expect("(")
        syms = [c.name("symbol")]
        while c.accept(","):
            syms.append(c.name("symbol"))
        c.expect(")")
        return Domain("enum", tuple(syms))
    c.error(f"unexpected {c.tok.text or 'end of line'!r}", ["int", "enum"])


def _signatures(c: _Cursor) -> list:
    sigs = []
    while True:
        name = c.name("event name")
        params = []
        if c.accept("("):
            if not c.peek(")"):
                while True:
                    p = c.name("parameter name")
                    c.expect(":")
                    params.append((p, _domain(c)))
                    if not c.accept(","):
                        break
            c.expect(")")
        sigs.append(Signature(name, tuple(params)))
        if not c.accept(","):
            break
    c.end()
    return sigs


def _literal(c: _Cursor):
    neg = c.accept("-")
    if c.tok.kind == "int":
        v = int(c.tok.text)
        c.i += 1
        return -v if neg else v
    if neg:
        c.error("expected an integer after '-'", ["integer"])
    if c.tok.kind == "str":
        v = c.tok.text[1:-1]
        c.i += 1
        return v
    return c.name("value")


# --- expressions ------------------------------------------------------------

class _ExprParser:
    def __init__(self, c: _Cursor, params: tuple, registers: set, symbols: set):
        self.c = c
        self.params = params
        self.registers = registers
        self.symbols = symbols

    def parse(self) -> Expr:
        return self.or_()

    def or_(self):
        e = self.and_()
        while self.c.accept("or"):
            e = Or(e, self.and_())
        return e

    def and_(self):
        e = self.not_()
        while self.c.accept("and"):
            e = And(e, self.not_())
        return e

    def not_(self):
        if self.c.accept("not"):
            return Not(self.not_())
        return self.cmp()

    def cmp(self):
        e = self.sum()
        if self.c.tok.kind == "op":
            op = self.c.tok.text
            self.c.i += 1
            e = Cmp(op, e, self.sum())
        return e

    def sum(self):
        e = self.prod()
        while self.c.peek("+", "-"):
            op = self.c.tok.text
            self.c.i += 1
            e = Arith(op, e, self.prod())
        return e

    def prod(self):
        e = self.unary()
        while self.c.accept("*"):
            e = Arith("*", e, self.unary())
        return e

    def unary(self):
        if self.c.accept("-"):
            if self.c.tok.kind == "int":
                v = int(self.c.tok.text)
                self.c.i += 1
                return Const(-v)
            return Arith("-", Const(0), self.unary())
        return self.atom()

    def atom(self):
        c = self.c
        t = c.tok
        if t.kind == "int":
            c.i += 1
            return Const(int(t.text))
        if t.kind == "str":
            c.i += 1
            return Const(t.text[1:-1])
        if c.accept("true"):
            return TRUE
        if c.accept("false"):
            return Const(False)
        if c.accept("("):
            e = self.parse()
            c.expect(")")
            return e
        if c.accept("@"):
            name = c.name("register")
            if name not in self.registers:
                c.i -= 1
                c.error(f"unknown register {name!r}")
            return Reg(name)
        if t.kind == "name" and t.text not in KEYWORDS:
            c.i += 1
            if t.text in self.params:
                return Param(t.text)
            if t.text in self.registers:
                return Reg(t.text)
            if t.text in self.symbols:
                return Const(t.text)
            c.i -= 1
            c.error(f"unknown identifier {t.text!r}")
        c.error(f"unexpected {t.text or 'end of line'!r}",
                ["expression", "integer", "identifier", "'('", "'@'"])


# --- file -------------------------------------------------------------------

_HEADERS = ("inputs", "outputs", "registers", "states", "initial")


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == "'":
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def parse_efsm(text: str) -> Efsm:
    headers = {}
    transition_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = re.match(r"\s*([A-Za-z_]+)\s*:(?!=)", line)
        if m and m.group(1) in _HEADERS and "--" not in line:
            key = m.group(1)
            if key in headers:
                raise ParseError(f"duplicate '{key}:' section", lineno, 1)
            if transition_lines:
                raise ParseError(f"'{key}:' after transitions", lineno, 1)
            headers[key] = (lineno, line[m.end():], m.end() + 1)
        else:
            transition_lines.append((lineno, line))

    missing = [h for h in _HEADERS if h not in headers]
    if missing:
        raise ParseError(f"missing section '{missing[0]}:'", 0, 0, [f"{h}:" for h in missing])

    def cursor(key):
        lineno, body, col = headers[key]
        return _Cursor(tokenize(body, lineno, col), lineno)

    inputs = {s.name: s for s in _signatures(cursor("inputs"))}
    c = cursor("outputs")
    outputs = {} if c.tok.kind == "eol" else {s.name: s for s in _signatures(c)}
    for name in outputs:
        if name in (NO_EFFECT_NAME, "Omega"):
            raise ParseError(f"output name {name!r} is reserved", headers["outputs"][0], 1)

    registers, init = {}, {}
    c = cursor("registers")
    if c.tok.kind != "eol":
        while True:
            name = c.name("register name")
            c.expect(":")
            registers[name] = _domain(c)
            if c.accept("=") or c.accept("=="):
                init[name] = _literal(c)
            if not c.accept(","):
                break
        c.end()

    c = cursor("states")
    states = [c.name("state")]
    while c.accept(","):
        states.append(c.name("state"))
    c.end()
    c = cursor("initial")
    initial = c.name("state")
    c.end()

    machine_regs = set(registers)
    symbols = set()
    for sig in list(inputs.values()) + list(outputs.values()):
        for p, d in sig.params:
            machine_regs.add(p)
            symbols.update(d.symbols)
    for d in registers.values():
        symbols.update(d.symbols)

    if not transition_lines:
        last = max(v[0] for v in headers.values())
        raise ParseError("at least one transition is required", last + 1, 1, ["transition"])

    transitions = []
    for lineno, line in transition_lines:
        c = _Cursor(tokenize(line, lineno), lineno)
        src = c.name("state")
        if src not in states:
            c.i -= 1
            c.error(f"undeclared state {src!r}", states)
        c.expect("--")
        inp = c.name("input")
        sig = inputs.get(inp)
        if sig is None:
            c.i -= 1
            c.error(f"undeclared input {inp!r}", list(inputs))
        if c.accept("("):
            given = []
            if not c.peek(")"):
                given.append(c.name("parameter"))
                while c.accept(","):
                    given.append(c.name("parameter"))
            c.expect(")")
            if tuple(given) != sig.param_names:
                c.i -= 1
                c.error(f"parameters of {inp} are ({', '.join(sig.param_names)})")
        ep = _ExprParser(c, sig.param_names, machine_regs, symbols)
        guard = TRUE
        if c.accept("["):
            guard = ep.parse()
            c.expect("]")
        c.expect("/")
        if c.accept("omega"):
            out, exprs = NO_EFFECT_NAME, ()
        else:
            out = c.name("output")
            osig = outputs.get(out)
            if osig is None:
                c.i -= 1
                c.error(f"undeclared output {out!r}", list(outputs) + ["omega"])
            exprs = []
            if c.accept("("):
                if not c.peek(")"):
                    exprs.append(ep.parse())
                    while c.accept(","):
                        exprs.append(ep.parse())
                c.expect(")")
            if len(exprs) != len(osig.params):
                c.error(f"{out} takes {len(osig.params)} value(s), got {len(exprs)}")
            exprs = tuple(exprs)
        updates = []
        if c.accept("{"):
            if not c.peek("}"):
                while True:
                    reg = c.name("register")
                    if reg not in machine_regs:
                        c.i -= 1
                        c.error(f"unknown register {reg!r}")
                    c.expect(":=")
                    updates.append((reg, ep.parse()))
                    if not c.accept(","):
                        break
            c.expect("}")
        c.expect("-->")
        dst = c.name("state")
        if dst not in states:
            c.i -= 1
            c.error(f"undeclared state {dst!r}", states)
        c.end()
        transitions.append(Transition(src, inp, guard, out, exprs, tuple(updates), dst))

    if initial not in states:
        raise ParseError(f"initial state {initial!r} undeclared", headers["initial"][0], 1, states)
    return Efsm(tuple(states), initial, inputs, outputs, registers, tuple(transitions), init)


def _fmt_value(v, quoted=frozenset()) -> str:
    if is_int(v):
        return str(v)
    if v in quoted:
        return f"'{v}'"
    return str(v)


def _fmt_sig(sig: Signature) -> str:
    return f"{sig.name}({', '.join(f'{p}:{d}' for p, d in sig.params)})"


def serialize_efsm(machine: Efsm) -> str:
    regs = set(machine.register_names)
    names_in_scope = regs | set(machine.inputs) | set(machine.outputs) | set(machine.states)
    syms = machine.symbols()
    quoted = frozenset(s for s in syms if s in names_in_scope or s in KEYWORDS)
    lines = [
        "inputs: " + ", ".join(_fmt_sig(s) for s in machine.inputs.values()),
        "outputs: " + ", ".join(_fmt_sig(s) for s in machine.outputs.values()),
        "registers: " + ", ".join(
            f"{n}:{d}" + (f" = {_fmt_value(machine.register_init[n], quoted)}"
                          if n in machine.register_init else "")
            for n, d in machine.registers.items()),
        "states: " + ", ".join(machine.states),
        f"initial: {machine.initial}",
    ]
    for t in machine.transitions:
        sig = machine.inputs[t.input]
        shadowed = frozenset(sig.param_names)

        def r(e):
            return render(e, shadowed, quoted)

        parts = [f"{t.source} -- {t.input}({', '.join(sig.param_names)})"]
        if t.guard != TRUE:
            parts.append(f"[{r(t.guard)}]")
        if t.is_no_effect:
            parts.append("/ omega")
        else:
            parts.append(f"/ {t.output}({', '.join(r(e) for e in t.output_exprs)})")
        if t.updates:
            parts.append("{" + ", ".join(f"{k} := {r(e)}" for k, e in t.updates) + "}")
        parts.append(f"--> {t.target}")
        lines.append(" ".join(parts))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def load_efsm(path) -> Efsm:
    with open(path, encoding="utf-8") as f:
        return parse_efsm(f.read())


# --- concrete events --------------------------------------------------------

def _event(text: str):
    c = _Cursor(tokenize(text.strip()), 1)
    name = c.name("event name")
    args = []
    if c.accept("("):
        if not c.peek(")"):
            args.append(_literal(c))
            while c.accept(","):
                args.append(_literal(c))
        c.expect(")")
    c.end()
    return name, tuple(args)


def parse_input(text: str) -> ConcreteInput:
    """``coin(100)``, ``vend``, ``vend()``, ``a(-5)``."""
    return ConcreteInput(*_event(text))


def parse_output(text: str) -> ConcreteOutput:
    s = text.strip()
    if s in ("Ω", "Omega"):
        return NOT_APPLICABLE
    if s in ("ω", "omega"):
        return NO_EFFECT
    return ConcreteOutput(*_event(s))


def parse_input_sequence(text: str) -> list:
    """Dot- or whitespace-separated concrete inputs: ``coin(100).vend.select(coffee)``."""
    out, depth, cur = [], 0, []
    for ch in text.strip():
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and (ch == "." or ch.isspace()):
            if "".join(cur).strip():
                out.append(parse_input("".join(cur)))
            cur = []
            continue
        cur.append(ch)
    if "".join(cur).strip():
        out.append(parse_input("".join(cur)))
    return out


def check_input(machine: Efsm, x: ConcreteInput):
    sig = machine.inputs.get(x.name)
    if sig is None:
        raise ValueError(f"unknown input {x.name!r}")
    if len(sig.params) != len(x.args):
        raise ValueError(f"{x.name} expects {len(sig.params)} argument(s)")
    for (p, d), v in zip(sig.params, x.args):
        if not d.contains(v):
            raise ValueError(f"{x}: value {v!r} outside domain {d} of {p}")
    return x


__all__ = [
    "ParseError", "parse_efsm", "serialize_efsm", "load_efsm", "parse_input",
    "parse_output", "parse_input_sequence", "check_input", "BOTTOM",
]
