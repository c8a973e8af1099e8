import random

import pytest
import sympy as sp
from hypothesis import given, settings

from jetlie.expr import JetOrderError, as_expr, format_expr, jet
from jetlie.jet import (UXX, UXY, UYY, VectorField, apply_prolongation, divergence, prolong2,
                        total_derivative, total_derivative_multi)
from jetlie.expr.core import differentiate

from conftest import SECOND, random_field, rationals

sx, sy = sp.symbols("x y")
su = sp.Function("u")(sx, sy)


def to_sympy(e):
    return sp.sympify(format_expr(e).replace("^", "**"))


def _jets_to_symbols(expr):
    """Replace u(x, y) and its derivatives with u, u_x, u_xy, ..."""
    derivs = sorted(expr.atoms(sp.Derivative), key=lambda d: -len(d.variables))
    for d in derivs:
        label = "".join(sorted(str(v) for v in d.variables))
        expr = expr.subs(d, sp.Symbol("u_" + label))
    return expr.subs(su, sp.Symbol("u"))


def oracle_prolongation(V: VectorField, J: str):
    """Phi^J = D_J Q + zeta u_Jx + eta u_Jy, computed with sympy on u(x, y)."""
    z, e, p = (to_sympy(c).subs(sp.Symbol("u"), su) for c in V.components)
    Q = p - z * su.diff(sx) - e * su.diff(sy)
    DQ = Q
    for d in J:
        DQ = DQ.diff(sx if d == "x" else sy)
    uJ = su
    for d in J:
        uJ = uJ.diff(sx if d == "x" else sy)
    return _jets_to_symbols(sp.expand(DQ + z * uJ.diff(sx) + e * uJ.diff(sy)))


# --- total derivatives ------------------------------------------------------------------


def test_total_derivative_of_s():
    assert total_derivative("x*u_x + y*u_y - u", "y") == as_expr("x*u_xy + y*u_yy")
    assert total_derivative("x*u_x + y*u_y - u", "x") == as_expr("x*u_xx + y*u_xy")


def test_total_derivative_of_monge_ampere_partial():
    T = as_expr("u_xx*u_yy - u_xy^2")
    assert total_derivative(differentiate(T, UXX), "x") == as_expr("u_xyy")


def test_total_derivative_order_limit():
    with pytest.raises(JetOrderError):
        total_derivative("u_xxyy", "x")
    with pytest.raises(ValueError):
        total_derivative("u", "z")


@given(rationals(SECOND))
@settings(max_examples=40, deadline=None)
def test_total_derivatives_commute(e):
    assert total_derivative_multi(e, "xy") == total_derivative_multi(e, "yx")


@given(rationals(SECOND), rationals(SECOND))
@settings(max_examples=30, deadline=None)
def test_total_derivative_leibniz(a, b):
    for d in "xy":
        assert total_derivative(a * b, d) == total_derivative(a, d) * b + a * total_derivative(b, d)


def test_total_derivative_matches_sympy_chain_rule():
    e = as_expr("u_x^2*y/(1 + u) + x*u_yy")
    sym = to_sympy(e).subs({sp.Symbol("u_x"): su.diff(sx), sp.Symbol("u_yy"): su.diff(sy, 2),
                            sp.Symbol("u"): su})
    want = _jets_to_symbols(sym.diff(sx))
    assert sp.simplify(to_sympy(total_derivative(e, "x")) - want) == 0


# --- prolongation -------------------------------------------------------------------------


@pytest.mark.parametrize("J", ["x", "y", "xx", "xy", "yy"])
def test_prolongation_against_sympy(J):
    rng = random.Random(7)
    for _ in range(3):
        V = random_field(rng, rational=True)
        got = getattr(prolong2(V, "explicit"), "Phi_" + J)
        assert sp.simplify(to_sympy(got) - oracle_prolongation(V, J)) == 0


def test_prolongation_modes_agree_on_random_fields():
    rng = random.Random(11)
    for k in range(50):
        V = random_field(rng, rational=k % 3 == 0)
        assert prolong2(V, "explicit").same_as(prolong2(V, "characteristic"))


def test_prolongation_of_scaling_field():
    pr = prolong2(VectorField.parse("x", "0", "-u"))
    assert pr.Phi_x == as_expr("-2*u_x")
    assert pr.Phi_y == as_expr("-u_y")
    assert pr.Phi_xx == as_expr("-3*u_xx")
    assert pr.Phi_xy == as_expr("-2*u_xy")
    assert pr.Phi_yy == as_expr("-u_yy")


def test_prolongation_of_translation_in_u_along_y():
    pr = prolong2(VectorField.parse("0", "0", "y"))
    assert pr.Phi_y == as_expr(1)
    assert all(c.is_zero for c in (pr.Phi_x, pr.Phi_xx, pr.Phi_xy, pr.Phi_yy))


def test_prolongation_of_symmetry_family_against_sympy():
    V = VectorField.parse("C1*x + C3*y + C4*u", "C2*y + C5*x + C6*u", "-(C1 + C2)*u + C7*x + C8*y")
    pr = prolong2(V)
    for J in ("x", "y", "xx", "xy", "yy"):
        assert sp.expand(to_sympy(getattr(pr, "Phi_" + J)) - oracle_prolongation(V, J)) == 0
    assert pr.Phi_xx == as_expr("-(3*C1 + C2)*u_xx - 3*C4*u_x*u_xx - C6*u_y*u_xx - 2*C5*u_xy - 2*C6*u_x*u_xy")


def test_unknown_mode():
    with pytest.raises(ValueError):
        prolong2(VectorField.parse("x", "0", "0"), "other")


def test_apply_prolongation():
    pr = prolong2(VectorField.parse("x", "0", "-u"))
    assert apply_prolongation(pr, "u_xx*u_yy - u_xy^2") == as_expr("-4*(u_xx*u_yy - u_xy^2)")
    with pytest.raises(JetOrderError):
        apply_prolongation(pr, "u_xxx")


def test_vector_field_rejects_jets():
    with pytest.raises(ValueError):
        VectorField.parse("u_x", "0", "0")


def test_characteristic_and_action():
    V = VectorField.parse("y", "x", "u")
    assert V.characteristic() == as_expr("u - y*u_x - x*u_y")
    assert V("x*y*u") == as_expr("y^2*u + x^2*u + x*y*u")


def test_divergence():
    assert divergence("x*u", "y*u_x") == as_expr("u + x*u_x + y*u_xy + u_x")
    assert jet(1, 1).expr == UXY.expr and UYY.order == 2
