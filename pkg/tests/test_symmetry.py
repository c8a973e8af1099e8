import math
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from jetlie import symmetry as G
from jetlie.expr import as_expr, core as C
from jetlie.jet import VectorField

from conftest import random_field

F = G.titeica()
A = G.full_algebra()
TABLE = G.structure_table(A)
S = "(x*u_x + y*u_y - u)"


def exact_adjoint(i: int, eps: Fraction) -> np.ndarray:
    """exp(-eps ad X_i) from sympy's exact matrix exponential."""
    ad = sp.Matrix(8, 8, lambda r, c: sp.Rational(int(round(G.ad_matrix(TABLE, i)[r, c]))))
    return np.array((-sp.Rational(eps.numerator, eps.denominator) * ad).exp().evalf(), float)


# --- invariance and reduction -------------------------------------------------------------


def test_reduction_removes_pivot():
    got = G.on_surface_reduce(as_expr("u_yy*u_xx"), F)
    assert got == as_expr(f"u_xx*(u_xy^2 + alpha*{S}^4)")
    assert G.on_surface_reduce(F, F).is_zero
    assert C.jet(0, 2) not in G.on_surface_reduce(as_expr("u_yy^2 + x"), F).variables()


def test_reduction_needs_pivot():
    with pytest.raises(G.SurfaceError):
        G.on_surface_reduce(as_expr("u_yy"), as_expr("u_xx - u"))


def test_scaling_is_a_multiple_of_the_equation():
    assert G.symmetry_residual(G.generator(1), F, reduce=False) == -4 * F


@pytest.mark.parametrize("i", range(1, 9))
def test_generators_are_strong_symmetries(i):
    assert G.symmetry_residual(G.generator(i), F).is_zero


@pytest.mark.parametrize("field", [("x", "0", "0"), ("0", "0", "u"), ("x*y", "0", "0"), ("0", "0", "x^2")])
def test_non_symmetries(field):
    assert not G.symmetry_residual(VectorField.parse(*field), F).is_zero


def test_family_is_symmetry():
    assert G.symmetry_residual(G.family(), F).is_zero


# --- determining system ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def system():
    return G.determining_system(F)


def test_determining_system_shape(system):
    assert len(system) == 59
    assert system.is_linear_homogeneous()
    for eq in system:
        assert not any(v.kind == "jet" and v.order >= 1 for v in eq.variables())


def test_family_and_generators_solve_system(system):
    assert system.is_solved_by(G.family_bindings())
    for V in G.generators():
        assert system.is_solved_by(G.field_bindings(V))


def test_controls_do_not_solve_system(system):
    res = system.residuals(G.field_bindings(VectorField.parse("x^2", "0", "0")))
    assert sum(not r.is_zero for r in res) == 30
    assert not system.is_solved_by(G.field_bindings(VectorField.parse("x", "0", "0")))


def test_primitive_part_normalises():
    e = as_expr("6*x*zeta + 4*y*eta")
    p = G.primitive_part(e, ("zeta", "eta", "phi"))
    assert (p / e).is_constant
    assert p == G.primitive_part(-3 * e, ("zeta", "eta", "phi"))


# --- brackets and the structure table -----------------------------------------------------------


def test_bracket_examples():
    X = G.generator
    assert G.lie_bracket(X(1), X(3)) == X(3).scale(-1)
    assert G.lie_bracket(X(3), X(5)) == X(2) - X(1)
    assert G.lie_bracket(X(7), X(8)).is_zero()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_jacobi_on_random_fields(seed):
    rng = random.Random(seed)
    a, b, c = (random_field(rng) for _ in range(3))
    br = G.lie_bracket
    assert (br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))).is_zero()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_bracket_antisymmetry(seed):
    rng = random.Random(seed)
    a, b = random_field(rng, rational=True), random_field(rng)
    assert G.lie_bracket(a, b) == -G.lie_bracket(b, a)


def test_structure_table_matches_reference():
    ref = G.reference_structure_table()
    assert TABLE.names == ref.names
    assert TABLE.entries == ref.entries
    assert TABLE.format_entry(2, 4) == "-X1+X2"


def test_structure_table_parallel_matches_serial():
    assert G.structure_table(A, workers=4).entries == TABLE.entries


def test_structure_constants_satisfy_jacobi():
    c = TABLE.constants()
    for i in range(8):
        for j in range(8):
            for k in range(8):
                cyc = (np.einsum("m,mn->n", c[j, k], c[i]) + np.einsum("m,mn->n", c[k, i], c[j])
                       + np.einsum("m,mn->n", c[i, j], c[k]))
                assert not np.any(cyc)


def test_dependent_basis_rejected():
    with pytest.raises(ValueError):
        G.LieAlgebra([G.generator(1), G.generator(1).scale(2)])


# --- derived series ---------------------------------------------------------------------------


def test_derived_series():
    assert G.derived_series(A.subalgebra(["X1", "X2", "X3", "X7", "X8"])) == [5, 3, 1, 0]
    assert G.is_solvable(A.subalgebra(["X1", "X2", "X3", "X7", "X8"]))
    assert G.derived_series(A) == [8, 8]
    assert not G.is_solvable(A)


def test_not_closed_reports_pair():
    with pytest.raises(G.NotClosedError) as info:
        G.derived_series(A.subalgebra(["X1", "X2", "X3", "X7"]))
    assert info.value.names == ("X3", "X7")
    sub = G.structure_table(A.subalgebra(["X1", "X2", "X3", "X7"]))
    assert sub.outside_span() == [(2, 3), (3, 2)]


def test_abelian_series():
    assert G.derived_series(A.subalgebra(["X7", "X8"])) == [2, 0]


# --- invariant forms along the subalgebra chain --------------------------------------------------


@pytest.mark.parametrize("stage", [1, 3, 4, 5])
def test_stage_forms_invariant(stage):
    assert G.verify_invariant_form(stage)


def test_stage_two_printed_form_depends_on_u():
    res = G.stage_residuals(2)
    assert res["X3"].is_zero
    assert format(res["X8"]) == "-y*H2_2(y, u, u_x, x*u_x + y*u_y - u)"
    assert not G.verify_invariant_form(2)


def test_stage_two_without_u_is_invariant():
    C.function("K2", 3)
    assert G.verify_invariant_form(2, f"u_xx*u_yy - u_xy^2 - K2(y, u_x, {S})")


def test_stage_three_in_wrong_variable_fails():
    C.function("K3", 2)
    assert not G.verify_invariant_form(3, f"u_xx*u_yy - u_xy^2 - K3(x, {S})")


def test_stage_range():
    with pytest.raises(ValueError):
        G.verify_invariant_form(6)


# --- adjoint action -----------------------------------------------------------------------------


def test_adjoint_at_zero_is_identity():
    for i in range(8):
        assert np.array_equal(G.adjoint_matrix(A, i, 0.0), np.eye(8))


@pytest.mark.parametrize("i", range(8))
def test_adjoint_against_exact_exponential(i):
    assert np.max(np.abs(G.adjoint_matrix(A, i, 0.3) - exact_adjoint(i, Fraction(3, 10)))) < 1e-14


@given(st.integers(0, 7), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=30, deadline=None)
def test_adjoint_group_law(i, a, b):
    lhs = G.adjoint_matrix(A, i, a, TABLE) @ G.adjoint_matrix(A, i, b, TABLE)
    assert np.allclose(lhs, G.adjoint_matrix(A, i, a + b, TABLE), atol=1e-12)


def test_adjoint_closed_forms():
    eps = 0.3
    r = G.adjoint_series(A, 0, 2, eps, table=TABLE).coordinates
    assert np.allclose(r, np.eye(8)[2] * math.exp(eps))
    r = G.adjoint_series(A, 2, 4, eps, table=TABLE).coordinates
    want = np.eye(8)[4] + eps * (np.eye(8)[0] - np.eye(8)[1]) - eps ** 2 * np.eye(8)[2]
    assert np.allclose(r, want, atol=1e-15)


def test_reference_adjoint_table_agreement():
    dev = G.compare_adjoint(A, 0.3)
    assert len(dev) == 64
    off = sorted(k for k, v in dev.items() if v >= 1e-10)
    # the three transcribed entries that disagree with exp(-eps ad)
    assert off == [("X3", "X5"), ("X3", "X7"), ("X5", "X2")]


def test_adjoint_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        G.adjoint_series(A, 0, 0, 0.3, tol=0)
