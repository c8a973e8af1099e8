"""Canonical rational functions over jet coordinates.

Every value the engine manipulates is a :class:`JetExpr`: a reduced quotient
of two sparse polynomials with exact rational coefficients, whose
indeterminates are interned :class:`Variable` objects.  Variables come in four
kinds:

* ``ind``   the independent variables ``x`` and ``y``;
* ``jet``   ``u`` and its partial derivatives ``u_x`` ... ``u_yyyy`` (order <= 4);
* ``param`` named constants such as ``alpha``, ``C1`` or ``eps``;
* ``fd``    a derivative of an applied opaque :class:`Function`, e.g.
  ``zeta_u(x, y, u)`` or ``H3_2(y, x*u_x + y*u_y - u)``.

The canonical form makes equality structural: two expressions are equal iff
their numerator and denominator dicts coincide.
"""

from __future__ import annotations

import math
import sys
import threading
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from . import poly as P

MAX_JET_ORDER = 4


class JetOrderError(ValueError):
    """A jet coordinate of order above the cap was requested."""


class DenominatorUnderflow(ArithmeticError):
    """Numeric evaluation hit a (near) zero denominator."""


_lock = threading.RLock()
_VARS: list["Variable"] = []
_INTERN: dict = {}


class Variable:
    """An interned indeterminate; compare with ``is`` or ``==`` (identity)."""

    __slots__ = ("kind", "data", "id", "key", "name")

    def __init__(self, kind, data, key, name):
        self.kind = kind
        self.data = data
        self.key = key
        self.name = name
        self.id = -1

    def __repr__(self):
        return f"Variable({self.name})"

    def __str__(self):
        return self.name

    def __hash__(self):
        return self.id

    def __lt__(self, other):
        return self.key < other.key

    def __reduce__(self):
        raise TypeError("Variables are process-local interned objects")

    @property
    def order(self) -> int:
        """Jet order; 0 for everything that is not a derivative of ``u``."""
        if self.kind == "jet":
            return sum(self.data)
        return 0

    @property
    def expr(self) -> "JetExpr":
        return JetExpr._raw({((self.id, 1),): 1}, _ONE_POLY)

    # fd accessors
    @property
    def function(self) -> "Function":
        return self.data[0]

    @property
    def args(self) -> tuple["JetExpr", ...]:
        return self.data[1]

    @property
    def counts(self) -> tuple[int, ...]:
        return self.data[2]


def _intern(kind, data, key, name) -> Variable:
    ident = (kind, data)
    v = _INTERN.get(ident)
    if v is not None:
        return v
    with _lock:
        v = _INTERN.get(ident)
        if v is None:
            v = Variable(kind, data, key, name)
            v.id = len(_VARS)
            _VARS.append(v)
            _INTERN[ident] = v
    return v


def variable_by_id(vid: int) -> Variable:
    return _VARS[vid]


def indep(name: str) -> Variable:
    if name not in ("x", "y"):
        raise ValueError(f"independent variables are x and y, not {name!r}")
    return _intern("ind", name, (0, 0 if name == "x" else 1), name)


def jet_name(i: int, j: int) -> str:
    return "u" if i + j == 0 else "u_" + "x" * i + "y" * j


def jet(i: int, j: int) -> Variable:
    """The jet coordinate d^(i+j) u / dx^i dy^j."""
    if i < 0 or j < 0:
        raise ValueError("jet multi-index must be non-negative")
    if i + j > MAX_JET_ORDER:
        raise JetOrderError(f"jet order {i + j} exceeds {MAX_JET_ORDER}")
    return _intern("jet", (i, j), (1, i + j, -i), jet_name(i, j))


def param(name: str) -> Variable:
    return _intern("param", name, (2, name), name)


class Function:
    """An opaque function symbol of fixed arity.

    ``formals`` (optional) are the variables a bare binding body is written
    in, e.g. ``(x, y, u)`` for the generator coefficients; ``slot_names`` give
    one-letter labels for derivative printing (``zeta_xu``).
    """

    __slots__ = ("name", "arity", "formals", "slot_names")

    def __init__(self, name, arity, formals=None):
        self.name = name
        self.arity = arity
        self.formals = formals
        names = None
        if formals is not None:
            labels = [str(f).replace("u_", "") if str(f) != "u" else "u" for f in formals]
            if all(len(s) == 1 for s in labels) and len(set(labels)) == len(labels):
                names = tuple(labels)
        self.slot_names = names

    def __repr__(self):
        return f"Function({self.name}/{self.arity})"

    def __reduce__(self):
        raise TypeError("Functions are process-local interned objects")

    def __call__(self, *args) -> "JetExpr":
        return self.deriv((0,) * self.arity, *args)

    def deriv(self, counts, *args) -> "JetExpr":
        """The partial with derivative counts ``counts`` (one per slot), applied to ``args``."""
        if not args:
            if self.formals is None:
                raise TypeError(f"{self.name} has no default arguments")
            args = tuple(f.expr for f in self.formals)
        if len(args) != self.arity:
            raise TypeError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        counts = tuple(counts)
        if len(counts) != self.arity or any(c < 0 for c in counts):
            raise ValueError("bad derivative counts")
        args = tuple(as_expr(a) for a in args)
        return funcderiv(self, args, counts).expr

    def default_args(self):
        return None if self.formals is None else tuple(f.expr for f in self.formals)


_FUNCS: dict[str, Function] = {}


def function(name: str, arity: int | None = None, formals=None) -> Function:
    """Declare (or fetch) the function symbol ``name``."""
    f = _FUNCS.get(name)
    if f is not None:
        if arity is not None and arity != f.arity:
            raise ValueError(f"function {name} already declared with arity {f.arity}")
        return f
    if arity is None:
        arity = len(formals)
    if formals is not None:
        formals = tuple(_as_variable(v) for v in formals)
        if len(formals) != arity:
            raise ValueError("formals must match arity")
    with _lock:
        return _FUNCS.setdefault(name, Function(name, arity, formals))


def known_function(name: str) -> Function | None:
    return _FUNCS.get(name)


def funcderiv(f: Function, args: tuple, counts: tuple) -> Variable:
    v = _INTERN.get(("fd", (f, args, counts)))
    if v is not None:
        return v
    from .parser import format_expr, format_funcderiv

    argkey = tuple(format_expr(a) for a in args)
    return _intern("fd", (f, args, counts), (3, f.name, argkey, counts),
                   format_funcderiv(f, args, counts))


# --- JetExpr ---------------------------------------------------------------

_ONE_POLY = P.const(1)


def _mono_key(m):
    return (-P.mono_degree(m),
            tuple(sorted((_VARS[v].key, -e) for v, e in m)))


def leading_term(p):
    """Leading (monomial, coefficient) of ``p`` under graded lex order."""
    m = min(p, key=_mono_key)
    return m, p[m]


def sorted_terms(p):
    return sorted(p.items(), key=lambda mc: _mono_key(mc[0]))


class JetExpr:
    """Immutable reduced rational function; see module docstring."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, value=0):
        e = as_expr(value)
        self.num, self.den, self._hash = e.num, e.den, None

    @classmethod
    def _raw(cls, num, den):
        obj = object.__new__(cls)
        obj.num = num
        obj.den = den
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, num, den):
        """Canonicalize ``num/den`` (cancel GCD, monic denominator)."""
        if not den:
            raise ZeroDivisionError("division by an identically zero expression")
        if not num:
            return ZERO
        if not P.is_const(den):
            g, num, den = P.cofactors(num, den)
        return cls._monic(num, den)

    @classmethod
    def _monic(cls, num, den):
        _, lc = leading_term(den)
        if lc != 1:
            inv = Fraction(1) / lc
            num = P.scale(num, inv)
            den = P.scale(den, inv)
        return cls._raw(num, den if not P.is_const(den) else _ONE_POLY)

    @classmethod
    def from_poly(cls, p):
        return cls._raw(p, _ONE_POLY) if p else ZERO

    # ---- predicates / accessors
    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_polynomial(self) -> bool:
        return P.is_const(self.den)

    @property
    def is_constant(self) -> bool:
        return P.is_const(self.num) and P.is_const(self.den)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        return Fraction(self.num.get((), 0))

    def numerator(self) -> "JetExpr":
        return JetExpr.from_poly(self.num)

    def denominator(self) -> "JetExpr":
        return JetExpr.from_poly(self.den)

    def variables(self) -> set[Variable]:
        """Variables occurring as indeterminates (fd symbols count as atoms)."""
        return {_VARS[v] for v in P.variables(self.num) | P.variables(self.den)}

    def all_variables(self) -> set[Variable]:
        """Indeterminates plus everything inside the arguments of fd symbols."""
        out = set()
        stack = list(self.variables())
        while stack:
            v = stack.pop()
            if v in out:
                continue
            out.add(v)
            if v.kind == "fd":
                for a in v.args:
                    stack.extend(a.variables())
        return out

    @property
    def jet_order(self) -> int:
        return max((v.order for v in self.all_variables()), default=0)

    def degree_in(self, v) -> int:
        return P.degree_in(self.num, _as_variable(v).id)

    def as_variable(self) -> Variable:
        if self.den is _ONE_POLY or P.is_const(self.den):
            if len(self.num) == 1:
                ((m, c),) = self.num.items()
                if c == 1 and len(m) == 1 and m[0][1] == 1:
                    return _VARS[m[0][0]]
        raise ValueError(f"{self} is not a single variable")

    # ---- arithmetic
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            if P.is_const(b):
                return JetExpr.from_poly(P.add(a, c))
            return JetExpr._make(P.add(a, c), b)
        if P.is_const(b):
            t = P.add(P.mul(a, d), c)
            return JetExpr._raw(t, d) if t else ZERO
        if P.is_const(d):
            t = P.add(a, P.mul(c, b))
            return JetExpr._raw(t, b) if t else ZERO
        # Henrici: only the gcd of the denominators can cancel
        g, b1, d1 = P.cofactors(b, d)
        t = P.add(P.mul(a, d1), P.mul(c, b1))
        if not t:
            return ZERO
        _, t, gq = P.cofactors(t, g)
        return JetExpr._monic(t, P.mul(P.mul(b1, d1), gq))

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return JetExpr._raw(P.neg(self.num), self.den) if self.num else self

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self.num or not other.num:
            return ZERO
        a, b, c, d = self.num, self.den, other.num, other.den
        if P.is_const(b) and P.is_const(d):
            return JetExpr._raw(P.mul(a, c), _ONE_POLY)
        _, a1, d1 = P.cofactors(a, d)
        _, c1, b1 = P.cofactors(c, b)
        return JetExpr._monic(P.mul(a1, c1), P.mul(b1, d1))

    def __rmul__(self, other):
        return self.__mul__(other)

    def inverse(self) -> "JetExpr":
        if not self.num:
            raise ZeroDivisionError("division by an identically zero expression")
        return JetExpr._make(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return ONE
        return JetExpr._raw(P.power(self.num, n), P.power(self.den, n) if not P.is_const(self.den) else _ONE_POLY)

    # ---- comparisons
    def __eq__(self, other):
        if not isinstance(other, JetExpr):
            other = _coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((frozenset(self.num.items()), frozenset(self.den.items())))
            self._hash = h
        return h

    def __bool__(self):
        return bool(self.num)

    def __str__(self):
        from .parser import format_expr
        return format_expr(self)

    def __repr__(self):
        return f"JetExpr('{self}')"

    # ---- convenience wrappers
    def diff(self, v) -> "JetExpr":
        return differentiate(self, v)

    def subs(self, bindings) -> "JetExpr":
        return substitute(self, bindings)


ZERO = JetExpr._raw({}, _ONE_POLY)
ONE = JetExpr._raw(P.const(1), _ONE_POLY)


def _coerce(value):
    if isinstance(value, JetExpr):
        return value
    if isinstance(value, bool):
        return NotImplemented
    if isinstance(value, (int, Fraction)):
        return JetExpr._raw(P.const(P._norm_coeff(value)), _ONE_POLY) if value else ZERO
    if isinstance(value, Variable):
        return value.expr
    return NotImplemented


def as_expr(value) -> JetExpr:
    """Coerce ints, Fractions, Variables and strings (parsed) to JetExpr."""
    if isinstance(value, str):
        from .parser import parse
        return parse(value)
    e = _coerce(value)
    if e is NotImplemented:
        raise TypeError(f"cannot convert {type(value).__name__} to JetExpr")
    return e


def _as_variable(v) -> Variable:
    if isinstance(v, Variable):
        return v
    if isinstance(v, JetExpr):
        return v.as_variable()
    if isinstance(v, str):
        from .parser import parse
        return parse(v).as_variable()
    raise TypeError(f"not a variable: {v!r}")


# --- derivations -----------------------------------------------------------

def _derive_poly(p, dvar) -> JetExpr:
    acc: dict = {}
    extra = ZERO
    for vid in P.variables(p):
        dw = dvar(_VARS[vid])
        if dw is None or not dw.num:
            continue
        part = P.deriv(p, vid)
        if P.is_const(dw.den):
            P.iadd(acc, P.mul(part, dw.num))
        else:
            extra = extra + JetExpr._make(P.mul(part, dw.num), dw.den)
    return JetExpr.from_poly(acc) + extra if acc else extra


def derive(e: JetExpr, dvar: Callable[[Variable], JetExpr | None]) -> JetExpr:
    """Apply the derivation determined by its values ``dvar(w)`` on variables."""
    dn = _derive_poly(e.num, dvar)
    if P.is_const(e.den):
        return dn
    dd = _derive_poly(e.den, dvar)
    if not dd.num:
        return dn * JetExpr._make(_ONE_POLY, e.den)
    den = e.denominator()
    return (dn * den - e.numerator() * dd) / (den * den)


_PARTIAL_CACHE: dict = {}


def _partial_var(w: Variable, v: Variable) -> JetExpr | None:
    if w is v:
        return ONE
    if w.kind != "fd":
        return None
    key = (w.id, v.id)
    hit = _PARTIAL_CACHE.get(key, False)
    if hit is not False:
        return hit
    f, args, counts = w.data
    total = ZERO
    for k, a in enumerate(args):
        da = differentiate(a, v)
        if da.num:
            c = list(counts)
            c[k] += 1
            total = total + funcderiv(f, args, tuple(c)).expr * da
    res = total if total.num else None
    _PARTIAL_CACHE[key] = res
    return res


def differentiate(e, v) -> JetExpr:
    """Partial derivative in ``v``, all other indeterminates independent.

    Applied function symbols are differentiated through their arguments by the
    chain rule.
    """
    e = as_expr(e)
    v = _as_variable(v)
    return derive(e, lambda w: _partial_var(w, v))


def diff_counts(e: JetExpr, formals: tuple[Variable, ...], counts) -> JetExpr:
    for var, c in zip(formals, counts):
        for _ in range(c):
            e = differentiate(e, var)
    return e


# --- substitution ----------------------------------------------------------

class Lambda:
    """A binding body for a function symbol, written in ``formals``."""

    __slots__ = ("formals", "body")

    def __init__(self, formals, body):
        self.formals = tuple(_as_variable(f) for f in formals)
        self.body = as_expr(body)

    def __repr__(self):
        return f"Lambda(({', '.join(map(str, self.formals))}), {self.body})"


def _normalize_bindings(bindings):
    var_map: dict[int, JetExpr] = {}
    fun_map: dict[str, Lambda] = {}
    for k, val in bindings.items():
        if isinstance(k, Function):
            if isinstance(val, Lambda):
                fun_map[k.name] = val
            elif callable(val) and not isinstance(val, (JetExpr, Variable)):
                raise TypeError("bind functions to a JetExpr or a Lambda")
            else:
                if k.formals is None:
                    raise TypeError(f"{k.name} has no default formals; bind it with a Lambda")
                fun_map[k.name] = Lambda(k.formals, val)
        else:
            var_map[_as_variable(k).id] = as_expr(val)
    return var_map, fun_map


def _image(w: Variable, var_map, fun_map, cache) -> JetExpr | None:
    if w.id in cache:
        return cache[w.id]
    if w.id in var_map:
        res = var_map[w.id]
    elif w.kind == "fd":
        f, args, counts = w.data
        new_args = tuple(_subst(a, var_map, fun_map, cache) for a in args)
        lam = fun_map.get(f.name)
        if lam is not None:
            body = diff_counts(lam.body, lam.formals, counts)
            res = substitute(body, {fv: a for fv, a in zip(lam.formals, new_args)})
        elif new_args != args:
            res = funcderiv(f, new_args, counts).expr
        else:
            res = None
    else:
        res = None
    cache[w.id] = res
    return res


def _eval_poly(p, images):
    """Evaluate polynomial ``p`` under ``images`` (vid -> JetExpr | None)."""
    live = {v: img for v, img in images.items() if img is not None}
    if not live:
        return JetExpr.from_poly(p)
    rational = {v for v, img in live.items() if not P.is_const(img.den)}
    maxexp: dict[int, int] = {}
    if rational:
        for m in p:
            for v, e in m:
                if v in rational and e > maxexp.get(v, 0):
                    maxexp[v] = e
    npow: dict = {}
    dpow: dict = {}

    def pw(cache, v, base, e):
        key = (v, e)
        r = cache.get(key)
        if r is None:
            r = P.power(base, e)
            cache[key] = r
        return r

    acc: dict = {}
    for m, c in p.items():
        kept = []
        term = P.const(c)
        seen = {}
        for v, e in m:
            img = live.get(v)
            if img is None:
                kept.append((v, e))
                continue
            term = P.mul(term, pw(npow, v, img.num, e))
            seen[v] = e
        for v in rational:
            rest = maxexp.get(v, 0) - seen.get(v, 0)
            if rest:
                term = P.mul(term, pw(dpow, v, live[v].den, rest))
        if kept:
            term = P.mul(term, {tuple(kept): 1})
        P.iadd(acc, term)
    if not rational:
        return JetExpr.from_poly(acc)
    den = P.const(1)
    for v in rational:
        if v in maxexp:
            den = P.mul(den, P.power(live[v].den, maxexp[v]))
    return JetExpr._make(acc, den) if acc else ZERO


def _subst(e: JetExpr, var_map, fun_map, cache) -> JetExpr:
    vids = P.variables(e.num) | P.variables(e.den)
    images = {vid: _image(_VARS[vid], var_map, fun_map, cache) for vid in vids}
    if all(img is None for img in images.values()):
        return e
    n = _eval_poly(e.num, images)
    if P.is_const(e.den):
        return n
    return n / _eval_poly(e.den, images)


def substitute(e, bindings: Mapping) -> JetExpr:
    """Simultaneous substitution of variables and function symbols.

    Keys are Variables (or single-variable JetExprs) and Functions; a Function
    maps to a JetExpr in its declared formals or to a :class:`Lambda`.
    """
    e = as_expr(e)
    var_map, fun_map = _normalize_bindings(bindings)
    return _subst(e, var_map, fun_map, {})


# --- coefficient collection --------------------------------------------------

def collect(e, vars: Iterable) -> dict[JetExpr, JetExpr]:
    """Coefficients of ``e`` as a polynomial in ``vars``.

    Keys are monomials in ``vars`` (as JetExpr, ``1`` for the constant part),
    ordered by graded lex order; values are free of ``vars``.
    """
    e = as_expr(e)
    ids = {_as_variable(v).id for v in vars}
    if P.variables(e.den) & ids:
        raise ValueError("denominator depends on a collected variable")
    groups: dict = {}
    for m, c in e.num.items():
        inside, outside = P.mono_split(m, ids)
        groups.setdefault(inside, {})[outside] = c
    out = {}
    for m in sorted(groups, key=_mono_key):
        out[JetExpr._raw({m: 1}, _ONE_POLY)] = JetExpr._make(groups[m], e.den)
    return out


# --- numeric evaluation -----------------------------------------------------

TINY = sys.float_info.min


def _lookup(assignment, v: Variable):
    for key in (v, v.name):
        if key in assignment:
            return assignment[key]
    raise KeyError(f"no value bound for {v.name}")


def _numeric_var(v: Variable, assignment, funcs, cache):
    if v.id in cache:
        return cache[v.id]
    if v.kind == "fd":
        f, args, counts = v.data
        fn = None
        if funcs:
            fn = funcs.get((f, counts)) or funcs.get((f.name, counts))
            if fn is None and not any(counts):
                fn = funcs.get(f) or funcs.get(f.name)
        if fn is None:
            raise KeyError(f"no callable bound for {v.name}")
        val = fn(*[_numeric_poly_ratio(a, assignment, funcs, cache, True) for a in args])
    else:
        val = _lookup(assignment, v)
    cache[v.id] = val
    return val


def _numeric_poly(p, assignment, funcs, cache):
    total = 0.0
    for m, c in p.items():
        t = float(c)
        for v, e in m:
            val = _numeric_var(_VARS[v], assignment, funcs, cache)
            t = t * (val if e == 1 else val ** e)
        total = total + t
    return total


def _numeric_poly_ratio(e, assignment, funcs, cache, check):
    n = _numeric_poly(e.num, assignment, funcs, cache)
    if P.is_const(e.den):
        return n
    d = _numeric_poly(e.den, assignment, funcs, cache)
    if check:
        small = abs(d) < TINY
        if getattr(small, "any", None) is not None:
            small = small.any()
        if small:
            raise DenominatorUnderflow(f"denominator of {e} vanishes numerically")
    return n / d


def eval_numeric(e, assignment: Mapping, funcs: Mapping | None = None, check: bool = True):
    """Evaluate in floating point.

    ``assignment`` maps Variables (or their names) to floats or numpy arrays.
    ``funcs`` maps a Function (or ``(Function, counts)`` for derivatives) to a
    callable taking the numeric argument values.
    """
    e = as_expr(e)
    conv = {}
    for k, val in assignment.items():
        if isinstance(k, JetExpr):
            k = k.as_variable()
        conv[k] = val
    return _numeric_poly_ratio(e, conv, funcs, {}, check)


def eval_exact(e, assignment: Mapping) -> Fraction:
    """Exact value at a rational point (function symbols not allowed)."""
    e = as_expr(e)
    res = substitute(e, {k: Fraction(v) for k, v in assignment.items()})
    return res.constant_value()


def isclose(a: float, b: float, rel=1e-12, abs_tol=0.0) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_tol)
