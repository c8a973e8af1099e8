"""Explicit, implicit, transformed and ansatz solutions of the Titeica equation."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .expr import core as C
from .expr.parser import parse
from .expr.core import ONE, ZERO, JetExpr, Lambda, as_expr, differentiate, eval_numeric, substitute
from .jet import U, X, Y
from .symmetry import titeica

ALPHA = C.param("alpha")
T_PARAM = C.param("t")
R_PARAM = C.param("r")
PSI = C.function("psi", formals=(T_PARAM,))
PHI_R = C.function("Phi", formals=(R_PARAM,))

S_GUARD = 1e-6
MA_GUARD = 1e-9
DEFAULT_TOL = 1e-9


class GuardError(ValueError):
    """The point or every grid node lies in the excluded set."""


class ConvergenceError(ArithmeticError):
    """An implicit solve did not converge."""


class AnsatzError(ValueError):
    """The reduced equation still depends on x, y apart from the ansatz variable."""


# --- grid -----------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    x0: float = 0.5
    x1: float = 2.0
    y0: float = 0.5
    y1: float = 2.0
    nx: int = 16
    ny: int = 16
    tolerance: float = DEFAULT_TOL

    @classmethod
    def parse(cls, text: str, tolerance: float = DEFAULT_TOL) -> "GridSpec":
        """From ``"x0,x1,y0,y1,nx,ny"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 6:
            raise ValueError("grid needs x0,x1,y0,y1,nx,ny")
        x0, x1, y0, y1 = map(float, parts[:4])
        nx, ny = int(parts[4]), int(parts[5])
        if nx < 1 or ny < 1:
            raise ValueError("grid needs at least one node per axis")
        return cls(x0, x1, y0, y1, nx, ny, tolerance)

    @classmethod
    def default(cls) -> "GridSpec":
        env = os.environ.get("JETLIE_GRID")
        return cls.parse(env) if env else cls()

    def nodes(self):
        xs = np.linspace(self.x0, self.x1, self.nx)
        ys = np.linspace(self.y0, self.y1, self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return gx.ravel(), gy.ravel()


# --- closed forms ---------------------------------------------------------------------

def _power_factors(g: JetExpr, r: Fraction, dirs: str) -> JetExpr:
    """P with d^dirs (g^r) = g^r * P."""
    P_ = ONE
    for d in dirs:
        v = {"x": X, "y": Y, "u": U}[d]
        P_ = differentiate(P_, v) + P_ * (r * differentiate(g, v) / g)
    return P_


def _partial(e: JetExpr, dirs: str) -> JetExpr:
    for d in dirs:
        e = differentiate(e, {"x": X, "y": Y, "u": U}[d])
    return e


def _read(value, params=None) -> JetExpr:
    """Parse text allowing the given parameter names."""
    return parse(value, params=params or ()) if isinstance(value, str) else as_expr(value)


@dataclass
class ClosedForm:
    """u = scale*g^power + shift (explicit) or scale*g^power + shift = 0 in (x, y, u) (implicit).

    ``params`` binds parameter names to numbers.  ``branch`` (implicit only)
    must evaluate positive on the selected solution; ``seed`` starts the
    per-node solve and ``solver`` is ``newton`` or ``fixed-point``.
    """

    kind: str
    g: JetExpr
    power: Fraction = Fraction(1)
    scale: JetExpr = ONE
    shift: JetExpr = ZERO
    params: dict = field(default_factory=dict)
    branch: JetExpr | None = None
    seed: "ClosedForm | float | None" = None
    solver: str = "newton"
    name: str = ""
    note: str = ""

    def __post_init__(self):
        if self.kind not in ("explicit", "implicit"):
            raise ValueError("kind must be explicit or implicit")
        self.g, self.scale, self.shift = as_expr(self.g), as_expr(self.scale), as_expr(self.shift)
        self.power = Fraction(self.power)
        if self.branch is not None:
            self.branch = as_expr(self.branch)
        if self.kind == "explicit":
            for part in (self.g, self.shift, self.scale):
                if any(v.kind == "jet" for v in part.variables()):
                    raise ValueError("explicit forms depend on x, y and parameters only")
        self._cache: dict = {}

    @classmethod
    def explicit(cls, text, power=1, params=None, **kw) -> "ClosedForm":
        return cls("explicit", _read(text, params), Fraction(power), params=dict(params or {}), **kw)

    @classmethod
    def implicit(cls, relation, branch=None, seed=1.0, params=None, **kw) -> "ClosedForm":
        return cls("implicit", _read(relation, params), params=dict(params or {}),
                   branch=None if branch is None else _read(branch, params), seed=seed, **kw)

    # symbolic view

    @property
    def is_rational(self) -> bool:
        return self.kind == "explicit" and self.power.denominator == 1

    def expr(self) -> JetExpr:
        """u as a JetExpr with parameters left symbolic (rational forms only)."""
        if not self.is_rational:
            raise ValueError("only explicit forms with integer power have a rational expression")
        return self.scale * self.g ** int(self.power) + self.shift

    def exact_params(self) -> dict:
        out = {}
        for k, v in self.params.items():
            if isinstance(v, float):
                raise ValueError(f"parameter {k} = {v} is not exact")
            out[C.param(k)] = as_expr(Fraction(v))
        return out

    def __str__(self):
        core = str(self.g) if self.power == 1 else f"({self.g})^({self.power})"
        if self.scale != ONE:
            core = f"({self.scale})*{core}"
        if self.shift:
            core = f"{core} + {self.shift}"
        if self.kind == "implicit":
            core += " = 0"
        return self.name + ": " + core if self.name else core

    # numeric view

    def _assign(self, xs, ys):
        a = {X: xs, Y: ys}
        for k, v in self.params.items():
            a[C.param(k)] = float(v)
        return a

    def _term_partial(self, dirs: str):
        key = ("term", dirs)
        hit = self._cache.get(key)
        if hit is None:
            if self.power == 1:
                hit = (None, self.scale * _partial(self.g, dirs) + _partial(self.shift, dirs))
            else:
                hit = (self.scale * _power_factors(self.g, self.power, dirs), _partial(self.shift, dirs))
            self._cache[key] = hit
        return hit

    def _term_value(self, dirs: str, assign, gpow):
        fac, rest = self._term_partial(dirs)
        with np.errstate(all="ignore"):
            if fac is None:
                return np.asarray(eval_numeric(rest, assign, check=False), dtype=float)
            return (gpow * eval_numeric(fac, assign, check=False)
                    + eval_numeric(rest, assign, check=False))

    def _gpow(self, assign):
        with np.errstate(all="ignore"):
            gv = np.asarray(eval_numeric(self.g, assign, check=False), dtype=float)
            if self.power == 1:
                return gv
            if self.power.denominator % 2 == 0:
                gv = np.where(gv > 0, gv, np.nan)
            elif self.power.denominator != 1:
                return np.sign(gv) ** self.power.numerator * np.abs(gv) ** float(self.power)
            return gv ** float(self.power)

    def values(self, xs, ys) -> np.ndarray:
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        if self.kind == "explicit":
            a = self._assign(xs, ys)
            return self._term_value("", a, self._gpow(a))
        return self._solve(xs, ys)[0]

    def jets(self, xs, ys, order: int = 2) -> dict[str, np.ndarray]:
        """u and its partial derivatives at the nodes; NaN marks failed nodes."""
        xs, ys = np.atleast_1d(np.asarray(xs, float)), np.atleast_1d(np.asarray(ys, float))
        if self.kind == "explicit":
            a = self._assign(xs, ys)
            gp = self._gpow(a)
            out = {}
            for k in range(order + 1):
                for i in range(k, -1, -1):
                    name = C.jet_name(i, k - i)
                    out[name] = self._term_value("x" * i + "y" * (k - i), a, gp) * np.ones_like(xs)
            return out
        if order > 2:
            raise ValueError("implicit forms provide jets up to order 2")
        return self._implicit_jets(xs, ys)

    # implicit machinery

    def _T(self, xs, ys, us, dirs=""):
        a = self._assign(xs, ys)
        a[U] = us
        return self._term_value(dirs, a, self._gpow(a))

    def _seed_values(self, xs, ys):
        if isinstance(self.seed, ClosedForm):
            return self.seed.values(xs, ys)
        return np.full_like(xs, 1.0 if self.seed is None else float(self.seed))

    def _solve(self, xs, ys, tol: float = 1e-12, max_iter: int = 100):
        u = np.array(self._seed_values(xs, ys), dtype=float)
        done = np.zeros(u.shape, bool)
        lam = np.ones_like(u)
        with np.errstate(all="ignore"):
            res = self._T(xs, ys, u)
            for _ in range(max_iter):
                if self.solver == "newton":
                    step = res / self._T(xs, ys, u, "u")
                else:
                    step = lam * res
                new = np.where(done, u, u - step)
                new_res = self._T(xs, ys, new)
                if self.solver != "newton":
                    worse = np.abs(new_res) > np.abs(res)
                    lam = np.where(worse & ~done, lam * 0.5, lam)
                    new = np.where(worse & ~done, u, new)
                    new_res = np.where(worse & ~done, res, new_res)
                conv = np.abs(new - u) <= tol * np.maximum(1.0, np.abs(new))
                done = done | (conv & np.isfinite(new) & (np.abs(new_res) <= 1e-10))
                u, res = new, new_res
                if done.all():
                    break
            # a few Newton steps remove the residual left by the damped iteration
            for _ in range(3):
                polished = u - self._T(xs, ys, u) / self._T(xs, ys, u, "u")
                u = np.where(done & np.isfinite(polished), polished, u)
            ok = done & np.isfinite(u)
            if self.branch is not None:
                a = self._assign(xs, ys)
                a[U] = u
                b = np.asarray(eval_numeric(self.branch, a, check=False), float)
                ok &= b > 0
        return np.where(ok, u, np.nan), ok

    def _implicit_jets(self, xs, ys):
        u, ok = self._solve(xs, ys)
        T = lambda d: self._T(xs, ys, u, d)
        with np.errstate(all="ignore"):
            Tu = T("u")
            ux, uy = -T("x") / Tu, -T("y") / Tu
            Tuu, Txu, Tyu = T("uu"), T("xu"), T("yu")
            uxx = -(T("xx") + 2 * Txu * ux + Tuu * ux ** 2) / Tu
            uxy = -(T("xy") + Txu * uy + Tyu * ux + Tuu * ux * uy) / Tu
            uyy = -(T("yy") + 2 * Tyu * uy + Tuu * uy ** 2) / Tu
        return {"u": u, "u_x": ux, "u_y": uy, "u_xx": uxx, "u_xy": uxy, "u_yy": uyy}


def guard(xs, ys, jets) -> np.ndarray:
    """True where s and the Hessian determinant stay away from zero."""
    with np.errstate(all="ignore"):
        s = xs * jets["u_x"] + ys * jets["u_y"] - jets["u"]
        ma = jets["u_xx"] * jets["u_yy"] - jets["u_xy"] ** 2
        finite = np.ones(np.shape(xs), bool)
        for v in jets.values():
            finite &= np.isfinite(v)
        return finite & (np.abs(s) > S_GUARD) & (np.abs(ma) > MA_GUARD)


# --- residuals ----------------------------------------------------------------------------

@dataclass
class ResidualReport:
    mode: str
    passed: bool
    residual: JetExpr | None = None
    max_abs: float | None = None
    nodes: int = 0
    skipped: int = 0

    def summary(self) -> str:
        if self.mode == "symbolic":
            return f"symbolic residual {self.residual}"
        return f"max |residual| = {self.max_abs:.3e} on {self.nodes} nodes ({self.skipped} skipped)"


def _alpha_value(alpha, params):
    """alpha as an exact number when possible, else a float."""
    if alpha is None or not isinstance(alpha, (str, JetExpr)):
        return alpha
    e = parse(alpha, params=params) if isinstance(alpha, str) else alpha
    if all(not isinstance(v, float) for v in params.values()):
        e = substitute(e, {C.param(k): as_expr(Fraction(v)) for k, v in params.items()})
        if e.is_constant:
            return e.constant_value()
    return float(eval_numeric(e, {C.param(k): float(v) for k, v in params.items()}))


def symbolic_jets(u: JetExpr, order: int = 2) -> dict:
    out = {}
    for k in range(order + 1):
        for i in range(k, -1, -1):
            out[C.jet(i, k - i)] = _partial(u, "x" * i + "y" * (k - i))
    return out


def pde_residual(cf: ClosedForm, alpha=None, mode: str = "symbolic", grid: GridSpec | None = None,
                 F: JetExpr | None = None) -> ResidualReport:
    """Residual of F (default: the Titeica equation) on ``cf``.

    ``alpha`` is a number, a text expression in the form's parameters, or
    None to keep it symbolic (symbolic mode only).
    """
    F = titeica() if F is None else as_expr(F)
    alpha = _alpha_value(alpha, cf.params)
    if mode == "symbolic":
        if not cf.is_rational:
            raise ValueError("symbolic mode needs an explicit form with integer power")
        u = substitute(cf.expr(), cf.exact_params())
        bind = dict(symbolic_jets(u))
        if alpha is not None:
            if isinstance(alpha, float):
                raise ValueError("symbolic mode needs an exact alpha")
            bind[ALPHA] = as_expr(Fraction(alpha))
        res = substitute(F, bind)
        return ResidualReport("symbolic", res.is_zero, residual=res)
    if mode != "numeric":
        raise ValueError("mode must be symbolic or numeric")
    if alpha is None:
        raise ValueError("numeric mode needs a value for alpha")
    grid = grid or GridSpec.default()
    xs, ys = grid.nodes()
    jets = cf.jets(xs, ys)
    ok = guard(xs, ys, jets)
    if not ok.any():
        raise GuardError("every grid node is excluded")
    a = {C.jet_name(i, j): jets[C.jet_name(i, j)][ok] for i, j in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))}
    a.update({X: xs[ok], Y: ys[ok], ALPHA: float(alpha)})
    for k, v in cf.params.items():
        a.setdefault(C.param(k), float(v))
    with np.errstate(all="ignore"):
        vals = np.asarray(eval_numeric(F, a, check=False), float)
    m = float(np.max(np.abs(vals)))
    return ResidualReport("numeric", bool(m < grid.tolerance), max_abs=m,
                          nodes=int(ok.sum()), skipped=int((~ok).sum()))


# --- geometry --------------------------------------------------------------------------------

@dataclass
class GeometryReport:
    K: float
    d: float
    I: float


def geometry_eval(cf: ClosedForm, point) -> GeometryReport:
    """Gauss curvature, distance to the tangent plane and I = K/d^4 at (x, y)."""
    x0, y0 = map(float, point)
    j = {k: float(v[0]) for k, v in cf.jets(np.array([x0]), np.array([y0])).items()}
    if any(math.isnan(v) for v in j.values()):
        raise GuardError(f"the form has no value at {point}")
    w = 1 + j["u_x"] ** 2 + j["u_y"] ** 2
    ma = j["u_xx"] * j["u_yy"] - j["u_xy"] ** 2
    s = x0 * j["u_x"] + y0 * j["u_y"] - j["u"]
    K = ma / w ** 2
    d = abs(s) / math.sqrt(w)
    if d == 0:
        raise GuardError(f"the tangent plane passes through the origin at {point}")
    return GeometryReport(K, d, K / d ** 4)


# --- orbits of the symmetry group ---------------------------------------------------------------

def _fresh(cf: ClosedForm, stem: str) -> str:
    n = 1
    while f"{stem}{n}" in cf.params:
        n += 1
    return f"{stem}{n}"


def _eps_expr(cf: ClosedForm, eps, params: dict):
    if isinstance(eps, (int, Fraction)):
        return as_expr(Fraction(eps))
    name = _fresh(cf, "e")
    params[name] = float(eps)
    return C.param(name).expr


def orbit_transform(cf: ClosedForm, generator: int, eps) -> ClosedForm:
    """Image of the solution under the flow of X_generator at time eps."""
    if generator not in range(1, 9):
        raise ValueError("generator must be 1..8")
    if eps == 0:
        return cf
    params = dict(cf.params)
    x, y, u = X.expr, Y.expr, U.expr
    if generator in (1, 2):
        name = _fresh(cf, "k")
        params[name] = math.exp(-float(eps))
        k = C.param(name).expr
    else:
        e = _eps_expr(cf, eps, params)

    if cf.kind == "explicit":
        if generator == 1:
            sub = {X: k * x}
        elif generator == 2:
            sub = {Y: k * y}
        elif generator == 3:
            sub = {X: x - e * y}
        elif generator == 5:
            sub = {Y: y - e * x}
        else:
            sub = None
        if generator in (1, 2):
            return replace(cf, g=substitute(cf.g, sub), scale=k * cf.scale,
                           shift=k * substitute(cf.shift, sub), params=params)
        if generator in (3, 5):
            return replace(cf, g=substitute(cf.g, sub), shift=substitute(cf.shift, sub), params=params)
        if generator == 7:
            return replace(cf, shift=cf.shift + e * x, params=params)
        if generator == 8:
            return replace(cf, shift=cf.shift + e * y, params=params)
        sub = {X: x - e * u} if generator == 4 else {Y: y - e * u}
        return ClosedForm("implicit", substitute(cf.g, sub), cf.power, -cf.scale,
                          u - substitute(cf.shift, sub), params, None, cf, "fixed-point",
                          cf.name, cf.note)

    if generator in (1, 2):
        subs = {X if generator == 1 else Y: k * (x if generator == 1 else y), U: u / k}
    else:
        subs = {3: {X: x - e * y}, 4: {X: x - e * u}, 5: {Y: y - e * x},
                6: {Y: y - e * u}, 7: {U: u - e * x}, 8: {U: u - e * y}}[generator]
    branch = None if cf.branch is None else substitute(cf.branch, subs)
    return replace(cf, g=substitute(cf.g, subs), shift=substitute(cf.shift, subs),
                   params=params, branch=branch)


# --- ansatz reductions --------------------------------------------------------------------------

def _as_function_of(c: JetExpr, t_expr: JetExpr, t: C.Variable) -> JetExpr:
    """h with c = h(t_expr), found by restricting to a line and checked exactly."""
    if not ({X, Y} & c.variables()):
        return c
    for fixed, free in ((Y, X), (X, Y)):
        for val in (0, 1):
            t_line = substitute(t_expr, {fixed: val})
            if not t_line.is_polynomial:
                continue
            terms = list(t_line.num.items())
            nonconst = [(m, k) for m, k in terms if m]
            if len(nonconst) != 1 or len(nonconst[0][0]) != 1:
                continue
            (mono, a), = nonconst
            (vid, m), = mono
            if vid != free.id:
                continue
            b = t_line.num.get((), 0)
            c_line = substitute(c, {fixed: val})
            try:
                h = _invert_power(c_line, free, m, (t.expr - b) / a)
            except ValueError:
                continue
            if (substitute(h, {t: t_expr}) - c).is_zero:
                return h
    raise AnsatzError(f"coefficient {c} is not a function of {t_expr}")


def _invert_power(e: JetExpr, v: C.Variable, m: int, image: JetExpr) -> JetExpr:
    from .expr import poly as P

    def conv(p):
        out = ZERO
        for mono, coeff in p.items():
            rest, k = [], 0
            for vid, ex in mono:
                if vid == v.id:
                    k = ex
                else:
                    rest.append((vid, ex))
            if k % m:
                raise ValueError("odd power")
            out = out + JetExpr.from_poly({tuple(rest): coeff}) * image ** (k // m)
        return out

    return conv(e.num) / conv(e.den)


def reduce_ansatz(t_expr, F=None, func: C.Function = PSI) -> JetExpr:
    """Equation for func when u = func(t_expr), written in func, its derivatives and t."""
    t_expr = as_expr(t_expr)
    F = titeica() if F is None else as_expr(F)
    if not t_expr.is_polynomial or t_expr.variables() - {X, Y}:
        raise ValueError("the ansatz variable must be a polynomial in x, y")
    t = func.formals[0]
    u = func(t_expr)
    jets = symbolic_jets(u)
    hess = jets[C.jet(2, 0)] * jets[C.jet(0, 2)] - jets[C.jet(1, 1)] ** 2
    if hess.is_zero:
        raise AnsatzError(f"u = {func.name}({t_expr}) has identically vanishing Hessian")
    red = substitute(F, jets)
    rename = {}
    for v in red.variables():
        if v.kind == "fd" and v.function is func:
            rename[v] = C.funcderiv(func, (t.expr,), v.counts).expr
    red = substitute(red, rename)
    syms = [v for v in red.variables() if v.kind == "fd" or v is ALPHA]
    out = ZERO
    for mono, coeff in C.collect(red, syms).items():
        out = out + mono * _as_function_of(coeff, t_expr, t)
    return out


def radial_ode() -> JetExpr:
    """(1/r) Phi' Phi'' - alpha (r Phi' - Phi)^4 for u = Phi(r)."""
    r = R_PARAM.expr
    p0, p1, p2 = (C.funcderiv(PHI_R, (r,), (k,)).expr for k in range(3))
    return p1 * p2 / r - ALPHA.expr * (r * p1 - p0) ** 4


def _func_jets_numeric(psi, var: C.Variable, ts, params):
    """psi as (g, power) or JetExpr in ``var``; values of psi, psi', psi''."""
    names = tuple(params or ())
    if isinstance(psi, tuple):
        g, r = _read(psi[0], names), Fraction(psi[1])
    else:
        g, r = _read(psi, names), Fraction(1)
    a = {var: ts}
    a.update({C.param(k): float(v) for k, v in (params or {}).items()})
    out = []
    with np.errstate(all="ignore"):
        gv = np.asarray(eval_numeric(g, a, check=False), float)
        base = gv ** float(r)
        Pk = ONE
        for k in range(3):
            out.append(base * eval_numeric(Pk, a, check=False) if r != 1
                       else np.asarray(eval_numeric(_nth(g, var, k), a, check=False), float))
            Pk = differentiate(Pk, var) + Pk * (r * differentiate(g, var) / g)
    return out


def _nth(e, v, k):
    for _ in range(k):
        e = differentiate(e, v)
    return e


def ode_residual(psi, ode: JetExpr, alpha, mode: str = "symbolic", func: C.Function | None = None,
                 params=None, ts=None, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Residual of ``ode`` for the given function of one variable.

    ``psi`` is a JetExpr (rational) or a pair ``(g, power)`` for g^power.
    """
    ode = as_expr(ode)
    if func is None:
        funcs = {v.function for v in ode.variables() if v.kind == "fd"}
        if len(funcs) != 1:
            raise ValueError("cannot tell which function the ODE is for")
        func = funcs.pop()
    var = func.formals[0]
    if mode == "symbolic":
        if isinstance(psi, tuple):
            if Fraction(psi[1]).denominator != 1:
                raise ValueError("symbolic mode needs a rational function")
            psi = _read(psi[0], tuple(params or ())) ** int(Fraction(psi[1]))
        bind = {func: Lambda((var,), _read(psi, tuple(params or ())))}
        bind[ALPHA] = as_expr(Fraction(alpha) if not isinstance(alpha, JetExpr) else alpha)
        if params:
            bind.update({C.param(k): as_expr(Fraction(v)) for k, v in params.items()})
        res = substitute(ode, bind)
        return ResidualReport("symbolic", res.is_zero, residual=res)
    ts = np.linspace(0.5, 2.0, 64) if ts is None else np.asarray(ts, float)
    vals = _func_jets_numeric(psi, var, ts, params)
    fn = {(func, (k,)): (lambda t, k=k: vals[k]) for k in range(3)}
    a = {var: ts, ALPHA: float(alpha)}
    a.update({C.param(k): float(v) for k, v in (params or {}).items()})
    with np.errstate(all="ignore"):
        out = np.asarray(eval_numeric(ode, a, fn, check=False), float)
    ok = np.isfinite(out)
    m = float(np.max(np.abs(out[ok]))) if ok.any() else float("nan")
    return ResidualReport("numeric", bool(ok.any() and m < tol), max_abs=m,
                          nodes=int(ok.sum()), skipped=int((~ok).sum()))


# --- catalog ----------------------------------------------------------------------------------

@dataclass
class CatalogEntry:
    form: ClosedForm
    alpha: str
    mode: str
    grid: GridSpec | None = None


@dataclass
class CatalogResult:
    name: str
    mode: str
    alpha: str
    passed: bool
    detail: str
    note: str = ""


_FORM_KEYS = {"g", "power", "shift", "relation", "branch", "seed", "alpha", "grid", "mode", "note"}


def _number(text: str):
    text = text.strip()
    if re.fullmatch(r"-?\d+(/\d+)?", text):
        return Fraction(text)
    return float(text)


def parse_catalog(text: str) -> list[CatalogEntry]:
    """Entries ``name | kind | key=value | ...``; unknown keys bind parameters."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) < 3:
            raise ValueError(f"catalog line {lineno}: expected name | kind | key=value ...")
        name, kind = fields[0], fields[1]
        kv, params = {}, {}
        for f in fields[2:]:
            if not f:
                continue
            key, _, val = f.partition("=")
            key, val = key.strip(), val.strip()
            (kv if key in _FORM_KEYS else params)[key] = val if key in _FORM_KEYS else _number(val)
        read = lambda text: parse(text, params=params)
        if kind == "explicit":
            cf = ClosedForm("explicit", read(kv["g"]), Fraction(kv.get("power", "1")),
                            shift=read(kv.get("shift", "0")), params=params, name=name,
                            note=kv.get("note", ""))
        elif kind == "implicit":
            cf = ClosedForm("implicit", read(kv["relation"]), params=params,
                            branch=read(kv["branch"]) if "branch" in kv else None,
                            seed=float(kv.get("seed", "1")), name=name, note=kv.get("note", ""))
        else:
            raise ValueError(f"catalog line {lineno}: unknown kind {kind!r}")
        mode = kv.get("mode") or ("symbolic" if cf.is_rational else "numeric")
        grid = GridSpec.parse(kv["grid"]) if "grid" in kv else None
        out.append(CatalogEntry(cf, kv["alpha"], mode, grid))
    return out


def load_catalog() -> list[CatalogEntry]:
    from importlib import resources
    return parse_catalog(resources.files("jetlie").joinpath("data", "catalog.txt").read_text("utf-8"))


def verify_catalog(entries: list[CatalogEntry] | None = None, grid: GridSpec | None = None) -> list[CatalogResult]:
    entries = load_catalog() if entries is None else entries
    out = []
    for e in entries:
        try:
            rep = pde_residual(e.form, e.alpha, e.mode, e.grid or grid)
            out.append(CatalogResult(e.form.name, e.mode, e.alpha, rep.passed, rep.summary(), e.form.note))
        except (GuardError, ConvergenceError, ValueError) as exc:
            out.append(CatalogResult(e.form.name, e.mode, e.alpha, False, f"error: {exc}", e.form.note))
    return out
