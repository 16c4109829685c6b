"""Closed-form coefficient expressions in the family parameter ``nu``.

Grammar::

    expr   := expr ('+' | '-') expr | expr ('*' | '/') expr
            | ('+' | '-') expr | expr '**' int | atom
    atom   := number | 'nu' | 'i' | 'exp(' expr ')' | 'ln(' expr ')' | '(' expr ')'

Numeric literals are read as exact rationals (``0.1`` is ``1/10``); ``i`` is
the imaginary unit.  Evaluation is exact in Q(i) until ``exp`` or ``ln``
forces floating point.  ``ν`` is accepted as a synonym for ``nu`` and ``^``
for ``**``.
"""

from __future__ import annotations

import ast
import cmath
from fractions import Fraction
from functools import lru_cache

from .poly import QI

__all__ = ["Expr", "ExprError", "parse_expr", "as_float"]


class ExprError(ValueError):
    pass


_FUNCS = {"exp", "ln"}


class Expr:
    """A parsed, validated coefficient expression."""

    __slots__ = ("source", "_tree")

    def __init__(self, source: str, tree: ast.AST):
        self.source = source
        self._tree = tree

    def __call__(self, nu):
        return _eval(self._tree, nu)

    evaluate = __call__

    def __repr__(self):
        return f"Expr({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self.source == other.source

    def __hash__(self):
        return hash(self.source)


@lru_cache(maxsize=4096)
def parse_expr(source: str) -> Expr:
    if not isinstance(source, str):
        raise ExprError(f"expression must be a string, got {type(source).__name__}")
    text = source.replace("ν", "nu").replace("^", "**").strip()
    if not text:
        raise ExprError("empty expression")
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise ExprError(f"cannot parse {source!r}: {exc.msg}") from None
    _validate(tree, source)
    return Expr(source, tree)


def _validate(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise ExprError(f"operator {type(node.op).__name__} not allowed in {source!r}")
        if isinstance(node.op, ast.Pow) and _int_exponent(node.right) is None:
            raise ExprError(f"only integer powers are allowed in {source!r}")
        _validate(node.left, source)
        if not isinstance(node.op, ast.Pow):
            _validate(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExprError(f"unary operator not allowed in {source!r}")
        _validate(node.operand, source)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExprError(f"literal {node.value!r} not allowed in {source!r}")
    elif isinstance(node, ast.Name):
        if node.id not in ("nu", "i"):
            raise ExprError(f"unknown symbol {node.id!r} in {source!r}")
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExprError(f"unknown function in {source!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExprError(f"functions take exactly one argument in {source!r}")
        _validate(node.args[0], source)
    else:
        raise ExprError(f"syntax element {type(node).__name__} not allowed in {source!r}")


def _int_exponent(node: ast.AST):
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _int_exponent(node.operand)
        if inner is None:
            return None
        return -inner if isinstance(node.op, ast.USub) else inner
    return None


def _literal(value):
    if isinstance(value, int):
        return QI(value)
    # exact decimal reading of the literal as written
    return QI(Fraction(repr(value)))


def _to_float(x):
    if isinstance(x, QI):
        return complex(x)
    return x


def _eval(node: ast.AST, nu):
    if isinstance(node, ast.Constant):
        return _literal(node.value)
    if isinstance(node, ast.Name):
        if node.id == "i":
            return QI(0, 1)
        if isinstance(nu, (int, Fraction)):
            return QI(nu)
        return complex(nu)
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, nu)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        left = _eval(node.left, nu)
        if isinstance(node.op, ast.Pow):
            k = _int_exponent(node.right)
            return left**k
        right = _eval(node.right, nu)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        return left / right
    if isinstance(node, ast.Call):
        arg = _to_float(_eval(node.args[0], nu))
        if node.func.id == "exp":
            out = cmath.exp(arg)
        else:
            if arg == 0:
                raise ExprError("ln(0) is undefined")
            out = cmath.log(arg)
        if abs(out.imag) <= 1e-300:
            return complex(out.real, 0.0)
        return out
    raise ExprError("invalid expression tree")  # pragma: no cover - validated


def as_float(x) -> float:
    c = complex(x)
    if abs(c.imag) > 0:
        raise ValueError("value is not real")
    return c.real

