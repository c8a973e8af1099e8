from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from jetlie.expr import (JetOrderError, Lambda, ParseError, as_expr, collect, differentiate, eval_exact,
                         eval_numeric, format_expr, function, jet, param, parse, substitute)
from jetlie.expr.core import MAX_JET_ORDER

from conftest import BASE, SECOND, polys, rationals

x, y, u = (v.expr for v in BASE)
ux = jet(1, 0).expr
alpha = param("alpha").expr


def to_sympy(e):
    return sp.sympify(format_expr(e).replace("^", "**"))


# --- canonical form -------------------------------------------------------------


def test_cancellation_is_canonical():
    assert as_expr("(x^2 - y^2)/(x - y)") == as_expr("x + y")
    assert as_expr("(u_x*u - u_x)/(u - 1)") == ux
    assert as_expr("x/x") == as_expr(1)


def test_denominator_is_monic_and_sign_normalised():
    a = as_expr("1/(-2*x)")
    b = as_expr("-1/(2*x)")
    assert a == b
    assert hash(a) == hash(b)


def test_zero_and_constants():
    assert as_expr("x - x").is_zero
    assert as_expr("3/6").constant_value() == Fraction(1, 2)
    assert not as_expr("x").is_constant


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        as_expr("x") / as_expr("y - y")


@given(rationals(), rationals())
@settings(max_examples=40, deadline=None)
def test_arithmetic_agrees_with_sympy(a, b):
    assert sp.simplify(to_sympy(a * b + a) - (to_sympy(a) * to_sympy(b) + to_sympy(a))) == 0


@given(polys(), polys(), polys())
@settings(max_examples=60, deadline=None)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == as_expr(0)


@given(rationals(), rationals())
@settings(max_examples=40, deadline=None)
def test_field_inverse(a, b):
    if not b.is_zero:
        assert (a / b) * b == a


@given(rationals())
@settings(max_examples=40, deadline=None)
def test_print_parse_round_trip(e):
    assert parse(format_expr(e)) == e


# --- parser -------------------------------------------------------------------------


def test_parser_jets_and_powers():
    assert as_expr("u_xy") == jet(1, 1).expr
    assert as_expr("u_yx") == jet(1, 1).expr
    assert as_expr("x**2") == as_expr("x^2")
    assert as_expr("-x^2") == -(x * x)


@pytest.mark.parametrize("bad", ["x +", "(x", "x $ y", "x^y", "u_z", "foo(x)"])
def test_parser_rejects(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_parser_rejects_order_five():
    with pytest.raises((ParseError, JetOrderError)):
        parse("u_xxxxx")


# --- differentiation ---------------------------------------------------------------------


def test_partial_of_fourth_power_by_finite_differences():
    s = as_expr("x*u_x + y*u_y - u")
    T = as_expr("u_xx*u_yy - u_xy^2") - alpha * s ** 4
    d = differentiate(T, ux)
    assert d == -4 * alpha * x * s ** 3
    pt = {BASE[0]: 0.7, BASE[1]: 1.3, BASE[2]: 0.4, jet(0, 1): -0.2, jet(2, 0): 1.1,
          jet(1, 1): 0.3, jet(0, 2): 0.5, param("alpha"): 0.25}
    h = 1e-6
    f = lambda v: eval_numeric(T, {**pt, jet(1, 0): v})
    fd = (f(0.9 + h) - f(0.9 - h)) / (2 * h)
    assert abs(fd - eval_numeric(d, {**pt, jet(1, 0): 0.9})) < 1e-7


@given(rationals(SECOND[:6]))
@settings(max_examples=40, deadline=None)
def test_partial_derivative_agrees_with_sympy(e):
    for v in (BASE[0], jet(1, 0)):
        assert sp.simplify(to_sympy(differentiate(e, v)) - sp.diff(to_sympy(e), sp.Symbol(v.name))) == 0


@given(polys(), polys())
@settings(max_examples=40, deadline=None)
def test_leibniz(a, b):
    for v in BASE:
        assert differentiate(a * b, v) == differentiate(a, v) * b + a * differentiate(b, v)


@given(rationals())
@settings(max_examples=40, deadline=None)
def test_partials_commute(e):
    X, Y = BASE[0], BASE[2]
    assert differentiate(differentiate(e, X), Y) == differentiate(differentiate(e, Y), X)


def test_function_chain_rule():
    f = function("g", formals=(param("p"), param("q")))
    e = f(x * y, u)
    d = differentiate(e, BASE[0])
    assert format_expr(d) == "y*g_p(x*y, u)"


# --- substitution, collection, evaluation ------------------------------------------------------


def test_substitution_is_simultaneous():
    X, Y = BASE[0], BASE[1]
    assert substitute(x + 2 * y, {X: y, Y: x}) == y + 2 * x


def test_lambda_binding_with_derivatives():
    f = function("f")
    bind = {f: Lambda(f.formals, as_expr("x^2*u_x + u"))}
    e = f() + differentiate(f(), jet(1, 0))
    assert substitute(e, bind) == as_expr("x^2*u_x + u + x^2")


def test_collect_over_jets():
    e = as_expr("x*u_xx^2 + y*u_xx + 3*u_xx + x")
    parts = collect(e, [jet(2, 0)])
    assert parts[jet(2, 0).expr ** 2] == x
    assert parts[jet(2, 0).expr] == y + 3
    assert parts[as_expr(1)] == x


def test_eval_exact_and_numeric():
    e = as_expr("(x + 1/3)/(y - 2)")
    a = {BASE[0]: Fraction(2, 3), BASE[1]: Fraction(5)}
    assert eval_exact(e, a) == Fraction(1, 3)
    xs = np.array([1.0, 2.0])
    vals = eval_numeric(e, {BASE[0]: xs, BASE[1]: np.array([3.0, 4.0])})
    assert np.allclose(vals, [(1 + 1 / 3) / 1, (2 + 1 / 3) / 2])


def test_jet_order_limit():
    assert MAX_JET_ORDER == 4
    with pytest.raises(JetOrderError):
        jet(3, 2)


@given(st.integers(-50, 50), st.integers(1, 50))
def test_rational_constants_are_exact(p, q):
    assert as_expr(f"{p}/{q}").constant_value() == Fraction(p, q)
