"""Tiny expression language for row guards and variable updates.

Grammar, smallest thing that routes choices and tracks points:

    expr       := additive (("==" | "!=" | "<" | ">") additive)?
    additive   := term (("+" | "-") term)*
    term       := INT | 'single quoted string' | true | false | NAME

No parentheses, no function calls.  ``+``/``-`` operate on ints;
``<``/``>`` compare ints; ``==``/``!=`` compare values of the same type.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

Value = Union[int, str, bool]


class ExprError(ValueError):
    """Malformed or ill-typed expression."""


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Var, BinOp]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<str>'(?:[^'\\]|\\.)*')|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<|>|\+|-))"
)

_COMPARISONS = ("==", "!=", "<", ">")


def _lex(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ExprError(f"unexpected character {rest[0]!r} in expression {text!r}")
        pos = m.end()
        for group in ("num", "str", "name", "op"):
            val = m.group(group)
            if val is not None:
                tokens.append((group, val))
                break
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def pop(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> Expr:
        node = self.additive()
        kind, val = self.peek()
        if kind == "op" and val in _COMPARISONS:
            self.pop()
            node = BinOp(val, node, self.additive())
        kind, val = self.peek()
        if kind is not None:
            raise ExprError(f"trailing {val!r} in expression {self.text!r}")
        return node

    def additive(self) -> Expr:
        node = self.term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in ("+", "-"):
                self.pop()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        kind, val = self.pop()
        if kind == "op" and val == "-":
            kind, val = self.pop()
            if kind != "num":
                raise ExprError(f"expected a number after unary '-' in {self.text!r}")
            return Lit(-int(val))
        if kind == "num":
            return Lit(int(val))
        if kind == "str":
            return Lit(_unescape(val[1:-1]))
        if kind == "name":
            if val == "true":
                return Lit(True)
            if val == "false":
                return Lit(False)
            return Var(val)
        raise ExprError(f"expected a value in expression {self.text!r}")


def _unescape(body: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def parse_expr(text: str) -> Expr:
    if not text.strip():
        raise ExprError("empty expression")
    return _Parser(text).parse()


def _type_of(value: Value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    return "str"


def eval_expr(expr: Expr, vars: dict[str, Value]) -> Value:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        if expr.name not in vars:
            raise ExprError(f"unknown variable {expr.name!r}")
        return vars[expr.name]
    left = eval_expr(expr.left, vars)
    right = eval_expr(expr.right, vars)
    op = expr.op
    if op in ("+", "-"):
        if _type_of(left) != "int" or _type_of(right) != "int":
            raise ExprError(f"'{op}' needs ints, got {_type_of(left)} and {_type_of(right)}")
        return left + right if op == "+" else left - right
    if _type_of(left) != _type_of(right):
        raise ExprError(f"'{op}' compares mixed types {_type_of(left)} and {_type_of(right)}")
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if _type_of(left) != "int":
        raise ExprError(f"'{op}' compares ints, got {_type_of(left)}")
    return left < right if op == "<" else left > right


def infer_type(expr: Expr, var_types: dict[str, str]) -> str:
    """Static type of an expression, raising ExprError on mismatch."""
    if isinstance(expr, Lit):
        return _type_of(expr.value)
    if isinstance(expr, Var):
        if expr.name not in var_types:
            raise ExprError(f"unknown variable {expr.name!r}")
        return var_types[expr.name]
    lt = infer_type(expr.left, var_types)
    rt = infer_type(expr.right, var_types)
    if expr.op in ("+", "-"):
        if lt != "int" or rt != "int":
            raise ExprError(f"'{expr.op}' needs ints, got {lt} and {rt}")
        return "int"
    if lt != rt:
        raise ExprError(f"'{expr.op}' compares mixed types {lt} and {rt}")
    if expr.op in ("<", ">") and lt != "int":
        raise ExprError(f"'{expr.op}' compares ints, got {lt}")
    return "bool"


def expr_names(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, BinOp):
        return expr_names(expr.left) | expr_names(expr.right)
    return frozenset()


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if isinstance(expr.value, int):
            return str(expr.value)
        return "'%s'" % expr.value.replace("\\", "\\\\").replace("'", "\\'")
    if isinstance(expr, Var):
        return expr.name
    return f"{render_expr(expr.left)} {expr.op} {render_expr(expr.right)}"
