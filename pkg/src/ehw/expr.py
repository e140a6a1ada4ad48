"""Values and the expression language used for guards, output functions and updates.

Values are plain Python objects: ``int`` for integers, ``str`` for enumeration
symbols, and the :data:`BOTTOM` singleton for a register that has not been
written yet.  ``bool`` only appears as the result of a guard.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


class _Bottom:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()

Value = Union[int, str, _Bottom]


class EvalBottom(Exception):
    """A referenced register (or parameter) holds no value yet."""


class ExprTypeError(TypeError):
    pass


def is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def check_int(v: int) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise OverflowError(f"integer {v} outside the 64-bit signed range")
    return v


class Expr:
    """Base class of the expression AST."""

    __slots__ = ()

    def eval(self, registers: Mapping[str, Value], params: Mapping[str, Value]):
        raise NotImplementedError

    def size(self) -> int:
        return 1

    def names(self) -> set:
        """(kind, name) pairs referenced by the expression."""
        return set()

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(Expr):
    value: object

    def eval(self, registers, params):
        return self.value


@dataclass(frozen=True)
class Reg(Expr):
    name: str

    def eval(self, registers, params):
        try:
            v = registers[self.name]
        except KeyError:
            raise KeyError(f"unknown register {self.name!r}") from None
        if v is BOTTOM:
            raise EvalBottom(self.name)
        return v

    def names(self):
        return {("reg", self.name)}


@dataclass(frozen=True)
class Param(Expr):
    name: str

    def eval(self, registers, params):
        try:
            v = params[self.name]
        except KeyError:
            raise KeyError(f"unknown input parameter {self.name!r}") from None
        if v is BOTTOM:
            raise EvalBottom(self.name)
        return v

    def names(self):
        return {("param", self.name)}


ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("<", "<=", "==", "!=", ">=", ">")
ORDER_OPS = ("<", "<=", ">=", ">")
NEGATED = {"<": ">=", "<=": ">", "==": "!=", "!=": "==", ">=": "<", ">": "<="}


@dataclass(frozen=True)
class Arith(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, registers, params):
        a = self.left.eval(registers, params)
        b = self.right.eval(registers, params)
        if not (is_int(a) and is_int(b)):
            raise ExprTypeError(f"arithmetic {self.op!r} on non-integers {a!r}, {b!r}")
        if self.op == "+":
            return check_int(a + b)
        if self.op == "-":
            return check_int(a - b)
        return check_int(a * b)

    def size(self):
        return 1 + self.left.size() + self.right.size()

    def names(self):
        return self.left.names() | self.right.names()


@dataclass(frozen=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, registers, params):
        a = self.left.eval(registers, params)
        b = self.right.eval(registers, params)
        if self.op in ORDER_OPS:
            if not (is_int(a) and is_int(b)):
                raise ExprTypeError(f"ordering {self.op!r} on non-integers {a!r}, {b!r}")
            if self.op == "<":
                return a < b
            if self.op == "<=":
                return a <= b
            if self.op == ">=":
                return a >= b
            return a > b
        if is_int(a) != is_int(b):
            raise ExprTypeError(f"comparing {a!r} with {b!r}")
        return (a == b) if self.op == "==" else (a != b)

    def size(self):
        return 1 + self.left.size() + self.right.size()

    def names(self):
        return self.left.names() | self.right.names()


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr

    def eval(self, registers, params):
        return _truth(self.left.eval(registers, params)) and _truth(
            self.right.eval(registers, params))

    def size(self):
        return 1 + self.left.size() + self.right.size()

    def names(self):
        return self.left.names() | self.right.names()


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr

    def eval(self, registers, params):
        return _truth(self.left.eval(registers, params)) or _truth(
            self.right.eval(registers, params))

    def size(self):
        return 1 + self.left.size() + self.right.size()

    def names(self):
        return self.left.names() | self.right.names()


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def eval(self, registers, params):
        return not _truth(self.operand.eval(registers, params))

    def size(self):
        return 1 + self.operand.size()

    def names(self):
        return self.operand.names()


TRUE = Const(True)
FALSE = Const(False)


def _truth(v) -> bool:
    if not isinstance(v, bool):
        raise ExprTypeError(f"guard evaluated to non-boolean {v!r}")
    return v


def eval_expr(expr: Expr, registers: Mapping[str, Value], params: Mapping[str, Value] = None):
    """Evaluate ``expr`` against a register configuration and input parameters."""
    return expr.eval(registers, params or {})


def eval_guard(expr: Expr, registers, params=None) -> bool:
    return _truth(expr.eval(registers, params or {}))


def negate(expr: Expr) -> Expr:
    if isinstance(expr, Cmp):
        return Cmp(NEGATED[expr.op], expr.left, expr.right)
    if isinstance(expr, Not):
        return expr.operand
    if expr == TRUE:
        return FALSE
    if expr == FALSE:
        return TRUE
    return Not(expr)


def conj(*parts: Expr) -> Expr:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts: Expr) -> Expr:
    parts = [p for p in parts if p != FALSE]
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# Rendering.  Precedence: or < and < not < cmp < +,- < *.
_PREC = {Or: 1, And: 2, Not: 3, Cmp: 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Arith):
        return 6 if e.op == "*" else 5
    return _PREC.get(type(e), 7)


def render(e: Expr, shadowed: frozenset = frozenset(), symbols_need_quotes=frozenset()) -> str:
    """Render in DSL syntax.

    ``shadowed`` holds register names that collide with a parameter of the
    current input; those are written ``@name``.
    """
    def r(x, parent_prec, right=False):
        s = go(x)
        p = _prec(x)
        if p < parent_prec or (right and p == parent_prec and p in (4, 5)):
            return f"({s})"
        return s

    def go(x):
        if isinstance(x, Const):
            v = x.value
            if isinstance(v, bool):
                return "true" if v else "false"
            if is_int(v):
                return str(v)
            if v is BOTTOM:
                return "bottom"
            if v in symbols_need_quotes:
                return f"'{v}'"
            return str(v)
        if isinstance(x, Reg):
            return f"@{x.name}" if x.name in shadowed else x.name
        if isinstance(x, Param):
            return x.name
        if isinstance(x, Arith):
            p = _prec(x)
            return f"{r(x.left, p)} {x.op} {r(x.right, p, right=True)}"
        if isinstance(x, Cmp):
            return f"{r(x.left, 5)} {x.op} {r(x.right, 5)}"
        if isinstance(x, And):
            return f"{r(x.left, 2)} and {r(x.right, 2, right=True)}"
        if isinstance(x, Or):
            return f"{r(x.left, 1)} or {r(x.right, 1, right=True)}"
        if isinstance(x, Not):
            return f"not {r(x.operand, 3)}"
        raise TypeError(x)

    return go(e)
