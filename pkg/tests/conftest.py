import random

import pytest
from hypothesis import strategies as st

from jetlie.expr import as_expr, core as C
from jetlie.jet import VectorField

BASE = (C.indep("x"), C.indep("y"), C.jet(0, 0))
FIRST = BASE + (C.jet(1, 0), C.jet(0, 1))
SECOND = FIRST + (C.jet(2, 0), C.jet(1, 1), C.jet(0, 2))


def random_poly(rng: random.Random, variables=BASE, terms=3, degree=2, coeff=3):
    """Small random polynomial with integer coefficients."""
    out = as_expr(0)
    for _ in range(terms):
        c = rng.randint(-coeff, coeff)
        if not c:
            continue
        mono = as_expr(c)
        for _ in range(rng.randint(0, degree)):
            mono = mono * rng.choice(variables).expr
        out = out + mono
    return out


def random_rational(rng, variables=BASE, terms=3, degree=2):
    num = random_poly(rng, variables, terms, degree)
    den = random_poly(rng, variables, 2, 1) + as_expr(rng.randint(1, 4))
    if den.is_zero:
        den = as_expr(1)
    return num / den


def random_field(rng, rational=False) -> VectorField:
    make = random_rational if rational else random_poly
    return VectorField(*(make(rng) for _ in range(3)))


@st.composite
def polys(draw, variables=BASE, max_terms=4, max_degree=3):
    """Hypothesis strategy for integer polynomials over ``variables``."""
    n = draw(st.integers(0, max_terms))
    out = as_expr(0)
    for _ in range(n):
        c = draw(st.integers(-5, 5))
        mono = as_expr(c)
        for v in draw(st.lists(st.sampled_from(variables), max_size=max_degree)):
            mono = mono * v.expr
        out = out + mono
    return out


@st.composite
def rationals(draw, variables=BASE):
    num = draw(polys(variables))
    den = draw(polys(variables, max_terms=2, max_degree=2)) + as_expr(draw(st.integers(1, 5)))
    if den.is_zero:
        den = as_expr(1)
    return num / den


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
