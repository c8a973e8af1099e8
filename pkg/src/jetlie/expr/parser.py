"""Text form of JetExpr: a small infix grammar and its deterministic printer.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := base (('^' | '**') ['-'] integer)?
    base   := integer | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

Identifiers are ``x``, ``y``, jets ``u``, ``u_x`` ... ``u_yyyy``, known
parameters, and declared function symbols.  A function derivative is written
``name_<slots>``, slots given by one-letter formal names (``zeta_xu``) or
1-based positions (``H3_22(y, s)``); without an argument list the function is
applied to its declared formals.
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import core as C
from . import poly as P

DEFAULT_PARAMS = frozenset(
    ["alpha", "a", "C", "eps", "eps1", "eps2", "t", "r"] + [f"C{i}" for i in range(1, 9)]
)


class ParseError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\*\*|[-+*/^(),]))")
_JET = re.compile(r"^u(?:_([xy]+))?$")


def _tokenize(text):
    pos = 0
    out = []
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            out.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            out.append(("id", m.group(2), start))
        else:
            out.append(("op", m.group(3), start))
        pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text, params, functions):
        self.toks = _tokenize(text)
        self.i = 0
        self.params = params
        self.functions = functions

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            raise ParseError(f"expected {op!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def at_op(self, *ops):
        t = self.peek()
        return t[0] == "op" and t[1] in ops

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"unexpected token {t[1]!r}", t[2])
        return e

    def expr(self):
        e = self.term()
        while self.at_op("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.at_op("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero:
                    raise ParseError("division by zero", pos)
                e = e / rhs
        return e

    def unary(self):
        if self.at_op("-"):
            self.take()
            return -self.unary()
        if self.at_op("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        b = self.base()
        if self.at_op("^", "**"):
            self.take()
            paren = self.at_op("(")
            if paren:
                self.take()
            sign = 1
            if self.at_op("-", "+"):
                sign = -1 if self.take()[1] == "-" else 1
            t = self.take()
            if t[0] != "num":
                raise ParseError("exponent must be an integer", t[2])
            if paren:
                self.expect(")")
            n = sign * int(t[1])
            if n < 0 and b.is_zero:
                raise ParseError("division by zero", t[2])
            b = b ** n
        return b

    def base(self):
        t = self.take()
        kind, text, pos = t
        if kind == "num":
            return C.as_expr(int(text))
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "id":
            return self.identifier(text, pos)
        raise ParseError(f"unexpected {text or 'end of input'!r}", pos)

    def arglist(self):
        self.expect("(")
        args = [self.expr()]
        while self.at_op(","):
            self.take()
            args.append(self.expr())
        self.expect(")")
        return args

    def identifier(self, name, pos):
        if name in ("x", "y"):
            return C.indep(name).expr
        m = _JET.match(name)
        if m:
            letters = m.group(1) or ""
            if len(letters) > C.MAX_JET_ORDER:
                raise ParseError(f"jet order {len(letters)} exceeds {C.MAX_JET_ORDER} in {name!r}", pos)
            return C.jet(letters.count("x"), letters.count("y")).expr
        f, counts = self.function_ref(name)
        if f is not None:
            if self.at_op("("):
                args = self.arglist()
                if len(args) != f.arity:
                    raise ParseError(f"{f.name} takes {f.arity} arguments, got {len(args)}", pos)
            else:
                if f.formals is None:
                    raise ParseError(f"{f.name} needs an argument list", pos)
                args = f.default_args()
            return f.deriv(counts, *args)
        if name in self.params:
            return C.param(name).expr
        raise ParseError(f"unknown identifier {name!r}", pos)

    def function_ref(self, name):
        f = self.functions.get(name)
        if f is not None:
            return f, (0,) * f.arity
        if "_" not in name:
            return None, None
        head, _, suffix = name.rpartition("_")
        f = self.functions.get(head)
        if f is None or not suffix:
            return None, None
        counts = [0] * f.arity
        for ch in suffix:
            if ch.isdigit():
                k = int(ch) - 1
            elif f.slot_names is not None and ch in f.slot_names:
                k = f.slot_names.index(ch)
            else:
                return None, None
            if not 0 <= k < f.arity:
                return None, None
            counts[k] += 1
        return f, tuple(counts)


def _declare_defaults():
    x, y, u = C.indep("x"), C.indep("y"), C.jet(0, 0)
    for name in ("zeta", "eta", "phi"):
        C.function(name, formals=(x, y, u))
    C.function("H1", 4)
    C.function("H2", 4)
    C.function("H3", 2)
    C.function("H4", 1)
    C.function("f", formals=(x, y, u, C.jet(1, 0), C.jet(0, 1)))
    C.function("psi", formals=(C.param("t"),))
    C.function("F1", formals=(C.param("t"),))
    C.function("Phi", formals=(C.param("r"),))


_declare_defaults()


def parse(text: str, params=(), functions=None) -> C.JetExpr:
    """Parse ``text`` into a canonical JetExpr.

    ``params`` adds parameter names to the defaults; ``functions`` adds
    Function objects (by name) to the globally declared ones.
    """
    fmap = dict(C._FUNCS)
    if functions:
        for f in functions:
            fmap[f.name] = f
    return _Parser(text, DEFAULT_PARAMS | set(params), fmap).parse()


# --- printing ---------------------------------------------------------------

def _format_coeff(c) -> str:
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _format_mono(m) -> str:
    parts = []
    for v, e in sorted(m, key=lambda ve: C._VARS[ve[0]].key):
        name = C._VARS[v].name
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


def _format_term(m, c) -> str:
    if not m:
        return _format_coeff(c)
    body = _format_mono(m)
    if c == 1:
        return body
    if c == -1:
        return "-" + body
    return f"{_format_coeff(c)}*{body}"


def format_poly(p) -> str:
    if not p:
        return "0"
    out = ""
    for k, (m, c) in enumerate(C.sorted_terms(p)):
        t = _format_term(m, c)
        if k == 0:
            out = t
        elif t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


def format_expr(e: C.JetExpr) -> str:
    num = format_poly(e.num)
    if P.is_const(e.den):
        return num
    if len(e.num) > 1:
        num = f"({num})"
    den = format_poly(e.den)
    if len(e.den) > 1 or len(next(iter(e.den))) > 1:
        den = f"({den})"
    return f"{num}/{den}"


def format_funcderiv(f: C.Function, args, counts) -> str:
    name = f.name
    if any(counts):
        labels = f.slot_names or tuple(str(k + 1) for k in range(f.arity))
        name += "_" + "".join(labels[k] * c for k, c in enumerate(counts))
    if f.default_args() == tuple(args):
        return name
    return f"{name}({', '.join(format_expr(a) for a in args)})"
