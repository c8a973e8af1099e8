"""Total derivatives and second prolongations on the jet space over (x, y, u)."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import core as C
from .expr.core import ONE, ZERO, JetExpr, JetOrderError, as_expr, differentiate

X, Y, U = C.indep("x"), C.indep("y"), C.jet(0, 0)
UX, UY = C.jet(1, 0), C.jet(0, 1)
UXX, UXY, UYY = C.jet(2, 0), C.jet(1, 1), C.jet(0, 2)
SECOND_ORDER = (UXX, UXY, UYY)

_TOTAL_CACHE: dict = {}


def _total_var(w: C.Variable, direction: str) -> JetExpr | None:
    key = (w.id, direction)
    hit = _TOTAL_CACHE.get(key, False)
    if hit is not False:
        return hit
    if w.kind == "ind":
        res = ONE if w.name == direction else None
    elif w.kind == "jet":
        i, j = w.data
        if i + j >= C.MAX_JET_ORDER:
            raise JetOrderError(f"total derivative of {w.name} exceeds jet order {C.MAX_JET_ORDER}")
        res = (C.jet(i + 1, j) if direction == "x" else C.jet(i, j + 1)).expr
    elif w.kind == "fd":
        f, args, counts = w.data
        res = ZERO
        for k, a in enumerate(args):
            da = total_derivative(a, direction)
            if da:
                c = list(counts)
                c[k] += 1
                res = res + C.funcderiv(f, args, tuple(c)).expr * da
        res = res or None
    else:
        res = None
    _TOTAL_CACHE[key] = res
    return res


def total_derivative(e, direction: str) -> JetExpr:
    """D_x or D_y; raises JetOrderError on order-4 input."""
    if direction not in ("x", "y"):
        raise ValueError("direction must be 'x' or 'y'")
    return C.derive(as_expr(e), lambda w: _total_var(w, direction))


def total_derivative_multi(e, directions: str) -> JetExpr:
    for d in directions:
        e = total_derivative(e, d)
    return as_expr(e)


def divergence(p1, p2) -> JetExpr:
    return total_derivative(p1, "x") + total_derivative(p2, "y")


@dataclass(frozen=True)
class VectorField:
    """zeta d/dx + eta d/dy + phi d/du with coefficients over (x, y, u)."""

    zeta: JetExpr
    eta: JetExpr
    phi: JetExpr

    def __post_init__(self):
        for name in ("zeta", "eta", "phi"):
            e = as_expr(getattr(self, name))
            if e.jet_order >= 1:
                raise ValueError(f"{name} = {e} depends on derivatives of u")
            object.__setattr__(self, name, e)

    @classmethod
    def parse(cls, zeta: str, eta: str, phi: str) -> "VectorField":
        return cls(as_expr(zeta), as_expr(eta), as_expr(phi))

    @property
    def components(self):
        return (self.zeta, self.eta, self.phi)

    def __call__(self, f) -> JetExpr:
        """Apply as a derivation to a function of (x, y, u)."""
        f = as_expr(f)
        return (self.zeta * differentiate(f, X) + self.eta * differentiate(f, Y)
                + self.phi * differentiate(f, U))

    def __add__(self, other):
        return VectorField(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return VectorField(*(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self):
        return VectorField(-self.zeta, -self.eta, -self.phi)

    def scale(self, c) -> "VectorField":
        c = as_expr(c)
        return VectorField(c * self.zeta, c * self.eta, c * self.phi)

    __rmul__ = scale

    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    def characteristic(self) -> JetExpr:
        """Q = phi - zeta u_x - eta u_y."""
        return self.phi - self.zeta * UX.expr - self.eta * UY.expr

    def __str__(self):
        parts = []
        for c, d in zip(self.components, ("d/dx", "d/dy", "d/du")):
            if c:
                parts.append(f"({c})*{d}")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class Prolongation:
    base: VectorField
    Phi_x: JetExpr
    Phi_y: JetExpr
    Phi_xx: JetExpr
    Phi_xy: JetExpr
    Phi_yy: JetExpr

    def coefficients(self):
        """(variable, coefficient) pairs of pr^(2) X."""
        b = self.base
        return ((X, b.zeta), (Y, b.eta), (U, b.phi), (UX, self.Phi_x), (UY, self.Phi_y),
                (UXX, self.Phi_xx), (UXY, self.Phi_xy), (UYY, self.Phi_yy))

    def same_as(self, other: "Prolongation") -> bool:
        return all(a == b for (_, a), (_, b) in zip(self.coefficients(), other.coefficients()))


def _explicit(X_: VectorField) -> Prolongation:
    z, e, p = X_.components
    ux, uy, uxx, uxy, uyy = UX.expr, UY.expr, UXX.expr, UXY.expr, UYY.expr

    def d(f, *vs):
        for v in vs:
            f = differentiate(f, v)
        return f

    zx, zy, zu = d(z, X), d(z, Y), d(z, U)
    ex, ey, eu = d(e, X), d(e, Y), d(e, U)
    px, py, pu = d(p, X), d(p, Y), d(p, U)
    zxx, zxy, zyy, zxu, zyu, zuu = d(z, X, X), d(z, X, Y), d(z, Y, Y), d(z, X, U), d(z, Y, U), d(z, U, U)
    exx, exy, eyy, exu, eyu, euu = d(e, X, X), d(e, X, Y), d(e, Y, Y), d(e, X, U), d(e, Y, U), d(e, U, U)
    pxx, pxy, pyy, pxu, pyu, puu = d(p, X, X), d(p, X, Y), d(p, Y, Y), d(p, X, U), d(p, Y, U), d(p, U, U)

    Phi_x = px + (pu - zx) * ux - ex * uy - zu * ux**2 - eu * ux * uy
    Phi_y = py - zy * ux + (pu - ey) * uy - zu * ux * uy - eu * uy**2
    Phi_xx = (pxx + (2 * pxu - zxx) * ux - exx * uy + (puu - 2 * zxu) * ux**2
              - 2 * exu * ux * uy - zuu * ux**3 - euu * ux**2 * uy
              + (pu - 2 * zx) * uxx - 2 * ex * uxy
              - 3 * zu * ux * uxx - eu * uy * uxx - 2 * eu * ux * uxy)
    Phi_xy = (pxy + (pyu - zxy) * ux + (pxu - exy) * uy - zyu * ux**2
              + (puu - zxu - eyu) * ux * uy - exu * uy**2
              - zy * uxx + (pu - zx - ey) * uxy - ex * uyy
              - zu * uy * uxx - 2 * eu * uy * uxy - 2 * zu * ux * uxy - eu * ux * uyy
              - zuu * ux**2 * uy - euu * ux * uy**2)
    Phi_yy = (pyy + (2 * pyu - eyy) * uy - zyy * ux + (puu - 2 * eyu) * uy**2
              - 2 * zyu * ux * uy - euu * uy**3 - zuu * ux * uy**2
              + (pu - 2 * ey) * uyy - 2 * zy * uxy
              - 3 * eu * uy * uyy - zu * ux * uyy - 2 * zu * uy * uxy)
    return Prolongation(X_, Phi_x, Phi_y, Phi_xx, Phi_xy, Phi_yy)


def _characteristic(X_: VectorField) -> Prolongation:
    Q = X_.characteristic()
    z, e = X_.zeta, X_.eta
    coeffs = []
    for J in ("x", "y", "xx", "xy", "yy"):
        i, j = J.count("x"), J.count("y")
        coeffs.append(total_derivative_multi(Q, J)
                      + z * C.jet(i + 1, j).expr + e * C.jet(i, j + 1).expr)
    return Prolongation(X_, *coeffs)


def prolong2(X_: VectorField, mode: str = "characteristic") -> Prolongation:
    """Second prolongation; ``explicit`` uses the printed coefficient formulas,
    ``characteristic`` uses Phi^J = D_J Q + zeta u_Jx + eta u_Jy."""
    if mode == "explicit":
        return _explicit(X_)
    if mode == "characteristic":
        return _characteristic(X_)
    raise ValueError(f"unknown prolongation mode {mode!r}")


def apply_prolongation(P_: Prolongation, e) -> JetExpr:
    e = as_expr(e)
    if e.jet_order > 2:
        raise JetOrderError("pr^(2) X acts on expressions of jet order <= 2")
    total = ZERO
    for v, coeff in P_.coefficients():
        if coeff:
            de = differentiate(e, v)
            if de:
                total = total + coeff * de
    return total
