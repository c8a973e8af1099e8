"""Invariance residuals, determining systems and the structure of the symmetry algebra."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expr import core as C
from .expr import poly as P
from .expr.core import ONE, ZERO, JetExpr, as_expr, collect, substitute
from .jet import UXX, UYY, VectorField, apply_prolongation, prolong2


class NotClosedError(ValueError):
    """A basis is not closed under the bracket."""

    def __init__(self, pair, names):
        i, j = pair
        super().__init__(f"[{names[i]}, {names[j]}] lies outside the span")
        self.pair = pair
        self.names = (names[i], names[j])


class SurfaceError(ValueError):
    """The equation cannot be solved for the pivot jet."""


# --- invariance -------------------------------------------------------------

def _split_pivot(F: JetExpr, pivot: C.Variable):
    if pivot.id in P.variables(F.den):
        raise SurfaceError(f"denominator of F depends on {pivot.name}")
    parts = P.coeffs_in(F.num, pivot.id)
    if set(parts) - {0, 1} or 1 not in parts:
        raise SurfaceError(f"F is not of degree exactly 1 in {pivot.name}")
    lead = JetExpr.from_poly(parts[1])
    rest = JetExpr.from_poly(parts.get(0, {}))
    return lead, rest


def on_surface_reduce(e, F, pivot=UYY) -> JetExpr:
    """Eliminate ``pivot`` from ``e`` using F = 0, clearing by powers of its coefficient.

    With F = c*pivot + r the result is c^k * e|_{pivot = -r/c}, k the degree
    of e's numerator in the pivot.  It vanishes iff e vanishes on F = 0
    wherever c != 0.
    """
    e, F = as_expr(e), as_expr(F)
    pivot = C._as_variable(pivot)
    lead, rest = _split_pivot(F, pivot)
    k = P.degree_in(e.num, pivot.id)
    if k == 0 and pivot.id not in P.variables(e.den):
        return e
    reduced = substitute(e, {pivot: -rest / lead})
    return reduced * lead ** k


def symmetry_residual(X: VectorField, F, reduce: bool = True) -> JetExpr:
    """pr^(2) X applied to F, optionally reduced on F = 0."""
    F = as_expr(F)
    res = apply_prolongation(prolong2(X), F)
    if reduce:
        res = on_surface_reduce(res, F)
    return res


GENERIC = VectorField(C.function("zeta")(), C.function("eta")(), C.function("phi")())


def _unknown_ids(e: JetExpr, names) -> set[int]:
    return {v for v in P.variables(e.num) | P.variables(e.den)
            if C._VARS[v].kind == "fd" and C._VARS[v].function.name in names}


def primitive_part(e: JetExpr, names) -> JetExpr:
    """Strip the content of ``e`` viewed as a polynomial in the unknown-function symbols.

    The result is normalised to leading coefficient 1, so scalar multiples of
    one equation coincide.
    """
    num = e.num
    ids = _unknown_ids(e, names)
    if not num:
        return ZERO
    groups: dict = {}
    for m, c in num.items():
        inside, outside = P.mono_split(m, ids)
        groups.setdefault(inside, {})[outside] = c
    content = None
    for g in groups.values():
        content = g if content is None else P.gcd(content, g)
        if P.is_const(content):
            break
    if not P.is_const(content):
        num = P.exquo(num, content)
    _, lc = C.leading_term(num)
    return JetExpr.from_poly(P.scale(num, Fraction(1) / lc))


@dataclass
class DeterminingSystem:
    """Linear conditions on the unknown functions, one JetExpr per equation (= 0)."""

    equations: list[JetExpr]
    unknowns: tuple[str, ...] = ("zeta", "eta", "phi")

    def __len__(self):
        return len(self.equations)

    def __iter__(self):
        return iter(self.equations)

    def residuals(self, bindings) -> list[JetExpr]:
        return [substitute(eq, bindings) for eq in self.equations]

    def is_solved_by(self, bindings) -> bool:
        return all(r.is_zero for r in self.residuals(bindings))

    def is_linear_homogeneous(self) -> bool:
        for eq in self.equations:
            ids = _unknown_ids(eq, self.unknowns)
            for m in eq.num:
                if sum(e for v, e in m if v in ids) != 1:
                    return False
        return True


def _equations_from(expr: JetExpr, over, unknowns) -> list[JetExpr]:
    seen = {}
    for coeff in collect(expr.numerator(), over).values():
        eq = primitive_part(coeff, unknowns)
        if eq:
            seen.setdefault(eq, None)
    return list(seen)


def determining_system(F, pivot=UYY) -> DeterminingSystem:
    """Collect the reduced invariance condition of F over all jets of order >= 1."""
    F = as_expr(F)
    res = symmetry_residual(GENERIC, F, reduce=False)
    res = on_surface_reduce(res, F, pivot)
    jets = [v for v in res.variables() if v.kind == "jet" and v.order >= 1]
    return DeterminingSystem(_equations_from(res, jets, ("zeta", "eta", "phi")))


# --- Lie algebra --------------------------------------------------------------

def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    return VectorField(*(X(b) - Y(a) for a, b in zip(X.components, Y.components)))


_XYU = (C.indep("x"), C.indep("y"), C.jet(0, 0))


def _coordinates(V: VectorField) -> dict:
    """Flatten V to {(slot, monomial): rational}; coefficients must be constant."""
    out = {}
    for slot, comp in enumerate(V.components):
        for mono, coeff in collect(comp, _XYU).items():
            if not coeff.is_constant:
                raise ValueError(f"coefficient {coeff} of {V} is not a rational constant")
            out[(slot, mono)] = coeff.constant_value()
    return out


def _solve_rational(columns: list[dict], target: dict):
    """Exact least-norm-free solve of sum c_i columns_i = target; None if inconsistent."""
    keys = sorted({k for col in columns for k in col} | set(target), key=lambda k: (k[0], str(k[1])))
    n = len(columns)
    rows = [[col.get(k, Fraction(0)) for col in columns] + [target.get(k, Fraction(0))] for k in keys]
    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if any(row[-1] != 0 and all(v == 0 for v in row[:-1]) for row in rows):
        return None
    sol = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        sol[c] = rows[i][-1]
    return sol


def _rank(vectors) -> int:
    if not vectors:
        return 0
    rows = [list(v) for v in vectors]
    ncol = len(rows[0])
    rank = 0
    for c in range(ncol):
        pr = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[rank], rows[pr] = rows[pr], rows[rank]
        for i in range(rank + 1, len(rows)):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


@dataclass
class LieAlgebra:
    basis: list[VectorField]
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            self.names = [f"X{i + 1}" for i in range(len(self.basis))]
        self._coords = [_coordinates(V) for V in self.basis]
        if _rank([[c.get(k, 0) for k in self._keys()] for c in self._coords]) != len(self.basis):
            raise ValueError("basis is linearly dependent")

    def _keys(self):
        return sorted({k for c in self._coords for k in c}, key=lambda k: (k[0], str(k[1])))

    def __len__(self):
        return len(self.basis)

    def coordinates(self, V: VectorField):
        """Coordinates of V in the basis, or None if V is outside the span."""
        return _solve_rational(self._coords, _coordinates(V))

    def subalgebra(self, names) -> "LieAlgebra":
        idx = [self.names.index(n) for n in names]
        return LieAlgebra([self.basis[i] for i in idx], [self.names[i] for i in idx])

    def combination(self, coords) -> VectorField:
        total = VectorField(ZERO, ZERO, ZERO)
        for c, V in zip(coords, self.basis):
            if c:
                total = total + V.scale(as_expr(Fraction(c)))
        return total


@dataclass
class StructureTable:
    names: list[str]
    entries: list[list]  # coordinates (list of Fraction) or None for "outside span"

    def is_closed(self) -> bool:
        return all(e is not None for row in self.entries for e in row)

    def outside_span(self) -> list[tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.entries) for j, e in enumerate(row) if e is None]

    def constants(self) -> np.ndarray:
        """c[i, j, k] with [X_i, X_j] = sum_k c[i, j, k] X_k (float copy)."""
        if not self.is_closed():
            raise NotClosedError(self.outside_span()[0], self.names)
        n = len(self.names)
        out = np.zeros((n, n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = [float(v) for v in self.entries[i][j]]
        return out

    def format_entry(self, i, j) -> str:
        e = self.entries[i][j]
        if e is None:
            return "outside span"
        return format_combination(e, self.names)


def format_combination(coords, names) -> str:
    out = ""
    for c, n in zip(coords, names):
        if not c:
            continue
        c = Fraction(c)
        mag = abs(c)
        body = n if mag == 1 else f"{mag}{n}"
        if not out:
            out = ("-" if c < 0 else "") + body
        else:
            out += ("-" if c < 0 else "+") + body
    return out or "0"


def structure_table(A: LieAlgebra, workers: int = 1) -> StructureTable:
    n = len(A)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def entry(ij):
        i, j = ij
        return A.coordinates(lie_bracket(A.basis[i], A.basis[j]))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(entry, pairs))
    else:
        results = [entry(p) for p in pairs]
    entries = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for (i, j), r in zip(pairs, results):
        entries[i][j] = r
        entries[j][i] = None if r is None else [-v for v in r]
    return StructureTable(list(A.names), entries)


def derived_series(A: LieAlgebra) -> list[int]:
    """Dimensions of g, [g,g], [[g,g],[g,g]], ... until they stabilise."""
    table = structure_table(A)
    bad = table.outside_span()
    if bad:
        i, j = min(bad)
        raise NotClosedError((i, j), A.names)
    n = len(A)
    c = [[table.entries[i][j] for j in range(n)] for i in range(n)]
    current = [[Fraction(int(i == k)) for k in range(n)] for i in range(n)]
    dims = [n]
    while True:
        brackets = []
        for a in current:
            for b in current:
                v = [Fraction(0)] * n
                for i in range(n):
                    if not a[i]:
                        continue
                    for j in range(n):
                        if b[j]:
                            w = a[i] * b[j]
                            for k in range(n):
                                v[k] += w * c[i][j][k]
                brackets.append(v)
        basis = _row_basis(brackets, n)
        dims.append(len(basis))
        if len(basis) == dims[-2]:
            return dims
        if not basis:
            return dims
        current = basis


def _row_basis(vectors, n):
    rows = [list(v) for v in vectors if any(v)]
    basis = []
    for v in rows:
        w = list(v)
        for b, piv in basis:
            if w[piv]:
                f = w[piv] / b[piv]
                w = [a - f * bb for a, bb in zip(w, b)]
        piv = next((k for k in range(n) if w[k]), None)
        if piv is not None:
            basis.append((w, piv))
    return [b for b, _ in basis]


def is_solvable(A: LieAlgebra) -> bool:
    return derived_series(A)[-1] == 0


# --- adjoint action --------------------------------------------------------------

@dataclass
class AdjointResult:
    source: int
    target: int
    epsilon: float
    coordinates: np.ndarray
    terms: int


def ad_matrix(table: StructureTable, i: int) -> np.ndarray:
    """Matrix of ad X_i acting on coordinate column vectors."""
    c = table.constants()
    return c[i].T


def adjoint_series(A: LieAlgebra, i: int, j: int, eps: float, tol: float = 1e-16,
                   table: StructureTable | None = None, max_terms: int = 200) -> AdjointResult:
    """Coordinates of sum_n (-eps)^n/n! (ad X_i)^n X_j (0-based indices)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    table = table or structure_table(A)
    M = ad_matrix(table, i)
    term = np.zeros(len(A))
    term[j] = 1.0
    total = term.copy()
    n = 0
    for n in range(1, max_terms + 1):
        term = (-eps / n) * (M @ term)
        total = total + term
        if np.linalg.norm(term) < tol:
            break
    return AdjointResult(i, j, eps, total, n)


def adjoint_matrix(A: LieAlgebra, i: int, eps: float, table=None, tol: float = 1e-16) -> np.ndarray:
    """Column j = adjoint_series(A, i, j, eps).coordinates."""
    table = table or structure_table(A)
    cols = [adjoint_series(A, i, j, eps, tol, table).coordinates for j in range(len(A))]
    return np.column_stack(cols)


def factorial_bound(eps: float, n: int) -> float:
    return abs(eps) ** n / math.factorial(n)


# --- the Titeica equation and its symmetry algebra ---------------------------------

S_TEXT = "x*u_x + y*u_y - u"
TITEICA_TEXT = f"u_xx*u_yy - u_xy^2 - alpha*({S_TEXT})^4"

_GENERATOR_TEXT = (
    ("x", "0", "-u"),
    ("0", "y", "-u"),
    ("y", "0", "0"),
    ("u", "0", "0"),
    ("0", "x", "0"),
    ("0", "u", "0"),
    ("0", "0", "x"),
    ("0", "0", "y"),
)

FAMILY_TEXT = ("C1*x + C3*y + C4*u", "C2*y + C5*x + C6*u", "-(C1 + C2)*u + C7*x + C8*y")


def titeica() -> JetExpr:
    """u_xx u_yy - u_xy^2 - alpha s^4."""
    return as_expr(TITEICA_TEXT)


def s_expr() -> JetExpr:
    return as_expr(S_TEXT)


def generators() -> list[VectorField]:
    return [VectorField.parse(*t) for t in _GENERATOR_TEXT]


def generator(i: int) -> VectorField:
    """X_i, 1-based."""
    return VectorField.parse(*_GENERATOR_TEXT[i - 1])


def family() -> VectorField:
    """The eight-parameter symmetry field with constants C1..C8."""
    return VectorField.parse(*FAMILY_TEXT)


def family_bindings() -> dict:
    """Bindings of zeta, eta, phi to the eight-parameter family, for DeterminingSystem.residuals."""
    xyu = (C.indep("x"), C.indep("y"), C.jet(0, 0))
    return {C.function(n): C.Lambda(xyu, c) for n, c in zip(("zeta", "eta", "phi"), family().components)}


def field_bindings(V: VectorField) -> dict:
    xyu = (C.indep("x"), C.indep("y"), C.jet(0, 0))
    return {C.function(n): C.Lambda(xyu, c) for n, c in zip(("zeta", "eta", "phi"), V.components)}


def full_algebra() -> LieAlgebra:
    return LieAlgebra(generators())


# chain of subalgebras with the invariant Monge-Ampere form claimed at each stage
STAGES = {
    1: (("X8",), "u_xx*u_yy - u_xy^2 - H1(x, y, u_x, y*u_y - u)"),
    2: (("X3", "X8"), f"u_xx*u_yy - u_xy^2 - H2(y, u, u_x, {S_TEXT})"),
    3: (("X3", "X7"), f"u_xx*u_yy - u_xy^2 - H3(y, {S_TEXT})"),
    4: (("X1", "X3", "X7"), f"u_xx*u_yy - u_xy^2 - ({S_TEXT})^4*H4(y)"),
    5: (("X1", "X2", "X3", "X7"), TITEICA_TEXT),
}


def stage_residuals(stage: int, form: str | None = None) -> dict[str, JetExpr]:
    """Reduced invariance residual of the stage's form under each of its generators."""
    names, text = STAGES[stage]
    F = as_expr(form if form is not None else text)
    return {n: symmetry_residual(generator(int(n[1:])), F, reduce=True) for n in names}


def verify_invariant_form(stage: int, form: str | None = None) -> bool:
    """True iff the stage's form (or ``form``) is invariant under every generator of the stage."""
    if stage not in STAGES:
        raise ValueError("stage must be 1..5")
    return all(r.is_zero for r in stage_residuals(stage, form).values())


# --- embedded reference tables ---------------------------------------------------------

def _data_text(name: str) -> str:
    from importlib import resources
    return resources.files("jetlie").joinpath("data", name).read_text(encoding="utf-8")


def _parse_combination(text: str, names) -> list[Fraction]:
    import re
    out = [Fraction(0)] * len(names)
    if text.strip() == "0":
        return out
    for sign, coeff, name in re.findall(r"([+-]?)(\d*)(X\d+)", text.replace(" ", "")):
        c = Fraction(int(coeff) if coeff else 1) * (-1 if sign == "-" else 1)
        out[names.index(name)] += c
    return out


def reference_structure_table() -> StructureTable:
    import json
    data = json.loads(_data_text("structure_table.json"))
    names = data["names"]
    entries = [[_parse_combination(e, names) for e in row] for row in data["rows"]]
    return StructureTable(names, entries)


@dataclass(frozen=True)
class AdjointTerm:
    target: str
    coeff: Fraction
    exp_rate: int
    eps_power: int

    def value(self, eps: float) -> float:
        return float(self.coeff) * eps ** self.eps_power * math.exp(self.exp_rate * eps)


def reference_adjoint_table() -> dict[tuple[str, str], list[AdjointTerm]]:
    import re
    table = {}
    for line in _data_text("adjoint_table.txt").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, body = line.split(":")
        src, dst = head.split()
        terms = []
        for t in body.split(" + "):
            m = re.fullmatch(r"\s*(?:(-?\d+)\*)?(?:exp\((-?\d+)\)\*)?(?:eps\^(\d+)\*)?(X\d+)\s*", t)
            if not m:
                raise ValueError(f"bad adjoint term {t!r}")
            c, k, p, name = m.groups()
            terms.append(AdjointTerm(name, Fraction(int(c or 1)), int(k or 0), int(p or 0)))
        table[(src, dst)] = terms
    return table


def reference_adjoint_vector(terms, names, eps: float) -> np.ndarray:
    v = np.zeros(len(names))
    for t in terms:
        v[names.index(t.target)] += t.value(eps)
    return v


def compare_adjoint(A: LieAlgebra | None = None, eps: float = 0.3, tol: float = 1e-10):
    """Per-entry maximum deviation between the Lie series and the reference table."""
    A = A or full_algebra()
    table = structure_table(A)
    ref = reference_adjoint_table()
    out = {}
    for (src, dst), terms in ref.items():
        i, j = A.names.index(src), A.names.index(dst)
        got = adjoint_series(A, i, j, eps, table=table).coordinates
        want = reference_adjoint_vector(terms, A.names, eps)
        out[(src, dst)] = float(np.max(np.abs(got - want)))
    return out
