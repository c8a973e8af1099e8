"""Euler operators, Helmholtz conditions, variational symmetries and Noether fluxes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import core as C
from .expr.core import ONE, ZERO, JetExpr, as_expr, collect, differentiate, substitute
from .jet import (SECOND_ORDER, U, UX, UXX, UXY, UY, UYY, VectorField, apply_prolongation,
                  divergence, prolong2, total_derivative, total_derivative_multi)
from .symmetry import DeterminingSystem, _equations_from

HALF = as_expr(Fraction(1, 2))


@dataclass(frozen=True)
class Lagrangian:
    expr: JetExpr

    def __post_init__(self):
        e = as_expr(self.expr)
        if e.jet_order > 2:
            raise ValueError("Lagrangians must have jet order <= 2")
        object.__setattr__(self, "expr", e)

    @classmethod
    def parse(cls, text: str) -> "Lagrangian":
        return cls(as_expr(text))


def _lag(L) -> JetExpr:
    return L.expr if isinstance(L, Lagrangian) else as_expr(L)


def titeica_lagrangian() -> Lagrangian:
    """u (u_xy^2 - u_xx u_yy) / s^4 - alpha u."""
    return Lagrangian.parse("u*(u_xy^2 - u_xx*u_yy)/(x*u_x + y*u_y - u)^4 - alpha*u")


def euler_lagrange(L) -> JetExpr:
    L = _lag(L)
    d = lambda v: differentiate(L, v)
    D = total_derivative_multi
    return (d(U) - D(d(UX), "x") - D(d(UY), "y")
            + D(d(UXX), "xx") + D(d(UXY), "xy") + D(d(UYY), "yy"))


@dataclass(frozen=True)
class HigherEuler:
    Ex: JetExpr
    Ey: JetExpr
    Exx: JetExpr
    Exy: JetExpr
    Eyy: JetExpr

    def __iter__(self):
        return iter((self.Ex, self.Ey, self.Exx, self.Exy, self.Eyy))


def higher_euler_ops(L, printed_ey: bool = False) -> HigherEuler:
    """Euler operators attached to u_x, u_y, u_xx, u_xy, u_yy.

    E^(y) is taken as the mirror image of E^(x) under x <-> y.  With
    ``printed_ey`` the variant built from u_xx and u_xy derivatives is
    returned instead; it does not yield a valid flux (see tests).
    """
    L = _lag(L)
    d = lambda v: differentiate(L, v)
    D = total_derivative
    Ex = d(UX) - 2 * D(d(UXX), "x") - D(d(UXY), "y")
    if printed_ey:
        Ey = d(UY) - D(d(UXX), "x") - 2 * D(d(UXY), "y")
    else:
        Ey = d(UY) - D(d(UXY), "x") - 2 * D(d(UYY), "y")
    return HigherEuler(Ex, Ey, d(UXX), d(UXY), d(UYY))


@dataclass(frozen=True)
class HelmholtzReport:
    residual1: JetExpr
    residual2: JetExpr

    @property
    def is_variational(self) -> bool:
        return self.residual1.is_zero and self.residual2.is_zero


def helmholtz_residuals(T) -> HelmholtzReport:
    T = as_expr(T)
    d = lambda v: differentiate(T, v)
    D = total_derivative
    r1 = d(UX) - D(d(UXX), "x") - D(HALF * d(UXY), "y")
    r2 = d(UY) - D(d(UYY), "y") - D(HALF * d(UXY), "x")
    return HelmholtzReport(r1, r2)


_F = None


def _factor_symbol():
    global _F
    if _F is None:
        _F = C.function("f")
    return _F


def integrating_factor_system(T) -> DeterminingSystem:
    """Conditions on an opaque f(x, y, u, u_x, u_y) for f*T to pass the Helmholtz test."""
    T = as_expr(T)
    fT = _factor_symbol()() * T
    rep = helmholtz_residuals(fT)
    eqs: dict = {}
    for r in (rep.residual1, rep.residual2):
        for eq in _equations_from(r, SECOND_ORDER + _third_order(r), ("f",)):
            eqs.setdefault(eq, None)
    return DeterminingSystem(list(eqs), unknowns=("f",))


def _third_order(e: JetExpr):
    return tuple(v for v in e.variables() if v.kind == "jet" and v.order >= 3)


def factor_bindings(f) -> dict:
    f = as_expr(f)
    fs = _factor_symbol()
    return {fs: C.Lambda(fs.formals, f)}


# --- variational symmetries and Noether ------------------------------------------

def variational_residual(X: VectorField, L) -> JetExpr:
    L = _lag(L)
    return apply_prolongation(prolong2(X), L) + L * divergence(X.zeta, X.eta)


class NoetherSignError(ValueError):
    """Neither sign makes Div P proportional to Q E(L)."""


@dataclass(frozen=True)
class ConservationLaw:
    Q: JetExpr
    P1: JetExpr
    P2: JetExpr
    xi: tuple[JetExpr, JetExpr]
    kappa: int
    lagrangian: JetExpr

    def identity_residual(self) -> JetExpr:
        """Div P - kappa Q E(L), identically zero for a valid law."""
        return divergence(self.P1, self.P2) - self.kappa * self.Q * euler_lagrange(self.lagrangian)

    def divergence(self) -> JetExpr:
        return divergence(self.P1, self.P2)

    def consistency_residual(self) -> JetExpr:
        """Div P - Q E(L) + pr v_Q(L) + Div(L xi); zero for every Q and xi."""
        L = self.lagrangian
        return (divergence(self.P1, self.P2) - self.Q * euler_lagrange(L)
                + evolutionary_action(self.Q, L) + divergence(L * self.xi[0], L * self.xi[1]))


def evolutionary_action(Q, L) -> JetExpr:
    """Second prolongation of Q d/du applied to L."""
    Q, L = as_expr(Q), _lag(L)
    total = ZERO
    for v, J in ((U, ""), (UX, "x"), (UY, "y"), (UXX, "xx"), (UXY, "xy"), (UYY, "yy")):
        dL = differentiate(L, v)
        if dL:
            total = total + total_derivative_multi(Q, J) * dL
    return total


def noether_flux(Q, L, xi, printed_ey: bool = False) -> ConservationLaw:
    """P = -(A + L xi) with A built from the higher Euler operators.

    The sign kappa in Div P = kappa Q E(L) is determined by testing both.
    A zero characteristic gives P = -L xi with kappa = +1.
    """
    Q, Lx = as_expr(Q), _lag(L)
    if Q.jet_order > 1:
        raise ValueError("characteristic must have jet order <= 1")
    xi = (as_expr(xi[0]), as_expr(xi[1]))
    if Q.is_zero:
        # A vanishes; kappa keeps the global convention
        return ConservationLaw(Q, -(Lx * xi[0]), -(Lx * xi[1]), xi, 1, Lx)
    E = higher_euler_ops(Lx, printed_ey=printed_ey)
    D = total_derivative
    A1 = Q * E.Ex + D(Q * E.Exx, "x") + HALF * D(Q * E.Exy, "y")
    A2 = Q * E.Ey + HALF * D(Q * E.Exy, "x") + D(Q * E.Eyy, "y")
    P1 = -(A1 + Lx * xi[0])
    P2 = -(A2 + Lx * xi[1])
    div = divergence(P1, P2)
    QE = Q * euler_lagrange(Lx)
    for kappa in (1, -1):
        if (div - kappa * QE).is_zero:
            return ConservationLaw(Q, P1, P2, xi, kappa, Lx)
    raise NoetherSignError("Div P differs from +-Q E(L); the characteristic does not fit this xi")


def field_law(X: VectorField, L) -> ConservationLaw:
    """The law whose characteristic and xi come from the variational symmetry X."""
    return noether_flux(X.characteristic(), L, (X.zeta, X.eta))


def variational_generators() -> dict[str, VectorField]:
    """Generators of the variational symmetry algebra of the Titeica Lagrangian."""
    return {
        "Y1": VectorField.parse("x", "0", "-u"),
        "Y2": VectorField.parse("0", "y", "-u"),
        "Y3": VectorField.parse("y", "0", "0"),
        "Y4": VectorField.parse("0", "x", "0"),
    }


REFERENCE_FLUX = (
    "-alpha*y*u + u_x/(x*u_x + y*u_y - u)^4*(u_xy*(y*u_y - u) - y*u_x*u_yy)",
    "-u_x/(x*u_x + y*u_y - u)^4*(u_xx*(y*u_y - u) - y*u_x*u_xy)",
)


@dataclass
class ConservationReport:
    symbolic_ok: bool
    max_abs_divergence: float | None
    nodes: int
    skipped: int
    tolerance: float

    @property
    def passed(self) -> bool:
        numeric_ok = self.max_abs_divergence is None or self.max_abs_divergence < self.tolerance
        return self.symbolic_ok and numeric_ok


def conservation_check(cl: ConservationLaw, L=None, grid=None, cf=None, alpha=None) -> ConservationReport:
    """Exact identity check plus |Div P| on the 3-jet of a solution over a grid."""
    import numpy as np

    from . import solutions as sol

    if L is not None and _lag(L) != cl.lagrangian:
        cl = ConservationLaw(cl.Q, cl.P1, cl.P2, cl.xi, cl.kappa, _lag(L))
    symbolic_ok = cl.identity_residual().is_zero
    if cf is None:
        return ConservationReport(symbolic_ok, None, 0, 0, sol.DEFAULT_TOL)
    grid = grid or sol.GridSpec.default()
    xs, ys = grid.nodes()
    jets = cf.jets(xs, ys, order=3)
    ok = sol.guard(xs, ys, jets)
    if not ok.any():
        raise sol.GuardError("every grid node is excluded")
    a = {name: vals[ok] for name, vals in jets.items()}
    a.update({C.indep("x"): xs[ok], C.indep("y"): ys[ok]})
    a.update({C.param(k): float(v) for k, v in cf.params.items()})
    if alpha is not None:
        a[C.param("alpha")] = float(sol._alpha_value(alpha, cf.params))
    with np.errstate(all="ignore"):
        div = np.asarray(C.eval_numeric(cl.divergence(), a, check=False), float)
    m = float(np.max(np.abs(div)))
    return ConservationReport(symbolic_ok, m, int(ok.sum()), int((~ok).sum()), grid.tolerance)
