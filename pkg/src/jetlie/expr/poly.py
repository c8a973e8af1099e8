"""Sparse multivariate polynomials over Q.

A polynomial is a plain ``dict`` mapping a monomial to a nonzero rational
coefficient (``int`` or ``Fraction``).  A monomial is a tuple of
``(variable_id, exponent)`` pairs sorted by id; the empty tuple is the
constant monomial.  Dicts handed out by these functions are never mutated
afterwards, callers treat them as frozen.

Multivariate GCD and exact division go through sympy's sparse polynomial
rings; everything else is done here.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from sympy import Symbol
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyRing

Mono = tuple
Poly = dict

ONE_MONO: Mono = ()


def const(c) -> Poly:
    return {ONE_MONO: c} if c else {}


def _norm_coeff(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


@lru_cache(maxsize=1 << 18)
def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            out.append((va, ea + eb))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


def mono_split(m: Mono, ids) -> tuple[Mono, Mono]:
    """Split ``m`` into the part over ``ids`` and the rest."""
    inside = tuple(p for p in m if p[0] in ids)
    outside = tuple(p for p in m if p[0] not in ids)
    return inside, outside


def is_const(p: Poly) -> bool:
    return not p or (len(p) == 1 and ONE_MONO in p)


def const_value(p: Poly):
    return p.get(ONE_MONO, 0) if is_const(p) else None


def add(p: Poly, q: Poly) -> Poly:
    if len(p) < len(q):
        p, q = q, p
    out = dict(p)
    for m, c in q.items():
        v = out.get(m)
        if v is None:
            out[m] = c
        else:
            v += c
            if v:
                out[m] = _norm_coeff(v)
            else:
                del out[m]
    return out


def iadd(acc: Poly, q: Poly, scale=1) -> Poly:
    """In-place ``acc += scale*q``; only for accumulators owned by the caller."""
    for m, c in q.items():
        if scale != 1:
            c = c * scale
        v = acc.get(m)
        if v is None:
            acc[m] = c
        else:
            v += c
            if v:
                acc[m] = _norm_coeff(v)
            else:
                del acc[m]
    return acc


def neg(p: Poly) -> Poly:
    return {m: -c for m, c in p.items()}


def sub(p: Poly, q: Poly) -> Poly:
    return iadd(dict(p), q, -1)


def scale(p: Poly, c) -> Poly:
    if not c:
        return {}
    if c == 1:
        return p
    return {m: _norm_coeff(v * c) for m, v in p.items()}


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return {}
    if len(p) < len(q):
        p, q = q, p
    if len(q) == 1:
        (mq, cq), = q.items()
        if not mq:
            return scale(p, cq)
        return {mono_mul(m, mq): _norm_coeff(c * cq) for m, c in p.items()}
    out: Poly = {}
    get = out.get
    for mq, cq in q.items():
        for mp, cp in p.items():
            m = mono_mul(mp, mq)
            v = get(m)
            out[m] = cp * cq if v is None else v + cp * cq
    return {m: _norm_coeff(c) for m, c in out.items() if c}


def power(p: Poly, n: int) -> Poly:
    if n < 0:
        raise ValueError("negative power of a polynomial")
    result = const(1)
    base = p
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


def variables(p: Poly) -> set:
    out = set()
    for m in p:
        for v, _ in m:
            out.add(v)
    return out


def degree_in(p: Poly, vid: int) -> int:
    d = 0
    for m in p:
        for v, e in m:
            if v == vid and e > d:
                d = e
    return d


def deriv(p: Poly, vid: int) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        for k, (v, e) in enumerate(m):
            if v == vid:
                nm = m[:k] + ((v, e - 1),) + m[k + 1:] if e > 1 else m[:k] + m[k + 1:]
                out[nm] = out.get(nm, 0) + c * e
                break
    return {m: _norm_coeff(c) for m, c in out.items() if c}


def coeffs_in(p: Poly, vid: int) -> dict[int, Poly]:
    """Coefficients of ``p`` viewed as a univariate polynomial in ``vid``."""
    out: dict[int, Poly] = {}
    for m, c in p.items():
        e = 0
        rest = m
        for k, (v, ee) in enumerate(m):
            if v == vid:
                e = ee
                rest = m[:k] + m[k + 1:]
                break
        out.setdefault(e, {})[rest] = c
    return out


def monomial_gcd_with(mono: Mono, p: Poly) -> Mono:
    """GCD of a monomial with every monomial of ``p``."""
    g = dict(mono)
    for m in p:
        if not g:
            break
        md = dict(m)
        for v in list(g):
            e = md.get(v, 0)
            if e < g[v]:
                if e:
                    g[v] = e
                else:
                    del g[v]
    return tuple(sorted(g.items()))


def mono_div(m: Mono, d: Mono) -> Mono:
    dd = dict(d)
    out = []
    for v, e in m:
        e -= dd.get(v, 0)
        if e < 0:
            raise ArithmeticError("monomial does not divide")
        if e:
            out.append((v, e))
    return tuple(out)


def div_by_mono(p: Poly, d: Mono) -> Poly:
    if not d:
        return p
    return {mono_div(m, d): c for m, c in p.items()}


# --- sympy bridge --------------------------------------------------------

_SYMBOLS: dict[int, Symbol] = {}


def _sym(vid: int) -> Symbol:
    s = _SYMBOLS.get(vid)
    if s is None:
        s = _SYMBOLS.setdefault(vid, Symbol(f"v{vid}"))
    return s


def _ring(vids):
    return PolyRing([_sym(v) for v in vids], QQ)


def _to_ring(p: Poly, ring, index):
    n = len(index)
    terms = {}
    for m, c in p.items():
        exps = [0] * n
        for v, e in m:
            exps[index[v]] = e
        if isinstance(c, int):
            terms[tuple(exps)] = QQ(c)
        else:
            terms[tuple(exps)] = QQ(c.numerator, c.denominator)
    return ring.from_dict(terms)


def _from_ring(elem, vids) -> Poly:
    out = {}
    for exps, c in elem.items():
        m = tuple((vids[k], e) for k, e in enumerate(exps) if e)
        num, den = int(c.numerator), int(c.denominator)
        out[m] = num if den == 1 else Fraction(num, den)
    return out


def cofactors(p: Poly, q: Poly) -> tuple[Poly, Poly, Poly]:
    """Return ``(g, p/g, q/g)`` with ``g`` a GCD of ``p`` and ``q``."""
    one = const(1)
    if not p:
        return q, {}, one
    if not q:
        return p, one, {}
    if is_const(p) or is_const(q):
        return one, p, q
    if len(p) == 1 or len(q) == 1:
        if len(p) == 1:
            (mp,) = p
            g = monomial_gcd_with(mp, q)
        else:
            (mq,) = q
            g = monomial_gcd_with(mq, p)
        return {g: 1}, div_by_mono(p, g), div_by_mono(q, g)
    vp, vq = variables(p), variables(q)
    shared = vp & vq
    if not shared:
        return one, p, q
    vids = sorted(vp | vq)
    index = {v: k for k, v in enumerate(vids)}
    ring = _ring(vids)
    g, cp, cq = _to_ring(p, ring, index).cofactors(_to_ring(q, ring, index))
    return _from_ring(g, vids), _from_ring(cp, vids), _from_ring(cq, vids)


def exquo(p: Poly, q: Poly) -> Poly:
    """Exact quotient ``p / q``; raises if ``q`` does not divide ``p``."""
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    if is_const(q):
        return scale(p, Fraction(1) / q[ONE_MONO])
    if len(q) == 1:
        ((mq, cq),) = q.items()
        return scale(div_by_mono(p, mq), Fraction(1) / cq)
    vids = sorted(variables(p) | variables(q))
    index = {v: k for k, v in enumerate(vids)}
    ring = _ring(vids)
    return _from_ring(_to_ring(p, ring, index).exquo(_to_ring(q, ring, index)), vids)


def gcd(p: Poly, q: Poly) -> Poly:
    return cofactors(p, q)[0]
