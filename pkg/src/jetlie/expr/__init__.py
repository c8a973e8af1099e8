"""Exact symbolic kernel: canonical rational functions in jet coordinates."""

from .core import (
    MAX_JET_ORDER,
    ONE,
    ZERO,
    DenominatorUnderflow,
    Function,
    JetExpr,
    JetOrderError,
    Lambda,
    Variable,
    as_expr,
    collect,
    differentiate,
    eval_exact,
    eval_numeric,
    function,
    indep,
    jet,
    param,
    substitute,
)
from .parser import ParseError, format_expr, parse

x = indep("x").expr
y = indep("y").expr
u = jet(0, 0).expr
u_x, u_y = jet(1, 0).expr, jet(0, 1).expr
u_xx, u_xy, u_yy = jet(2, 0).expr, jet(1, 1).expr, jet(0, 2).expr
alpha = param("alpha").expr

zeta = function("zeta")
eta = function("eta")
phi = function("phi")


def arith(op: str, a, b):
    """Named-operation front end: ``op`` in add, sub, mul, div, int_pow."""
    a = as_expr(a)
    if op == "int_pow":
        if not isinstance(b, int):
            raise TypeError("int_pow needs an integer exponent")
        return a ** b
    b = as_expr(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


__all__ = [
    "MAX_JET_ORDER", "ONE", "ZERO", "DenominatorUnderflow", "Function", "JetExpr",
    "JetOrderError", "Lambda", "ParseError", "Variable", "arith", "as_expr", "collect",
    "differentiate", "eval_exact", "eval_numeric", "format_expr", "function", "indep",
    "jet", "param", "parse", "substitute",
    "x", "y", "u", "u_x", "u_y", "u_xx", "u_xy", "u_yy", "alpha", "zeta", "eta", "phi",
]
