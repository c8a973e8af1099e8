"""The ``jetlie`` command line: reproducible reports with pass/fail exit codes."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import solutions as sol
from . import symmetry as sym
from . import variational as var
from .expr import core as C
from .expr.core import as_expr
from .expr.parser import ParseError
from .jet import VectorField

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class Section:
    title: str
    kind: str  # table | text | value
    content: object
    ref: str = ""
    ok: bool = True

    def to_json(self):
        key = {"table": "rows", "text": "text", "value": "value"}[self.kind]
        return {"title": self.title, "kind": self.kind, key: self.content, "paper_ref": self.ref}


@dataclass
class Report:
    command: str
    sections: list[Section] = field(default_factory=list)
    skipped_nodes: int = 0
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "pass" if all(s.ok for s in self.sections) else "fail"

    def add(self, title, kind, content, ref="", ok=True):
        self.sections.append(Section(title, kind, content, ref, ok))

    def to_json(self) -> str:
        data = {"command": self.command, "status": self.status,
                "sections": [s.to_json() for s in self.sections],
                "skipped_nodes": self.skipped_nodes}
        if self.error is not None:
            data["error"] = self.error
        return json.dumps(data, indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.status.upper()}"]
        if self.error is not None:
            lines.append(f"error: {self.error}")
        for s in self.sections:
            mark = "" if s.ok else "  [FAIL]"
            ref = f"  ({s.ref})" if s.ref else ""
            lines.append("")
            lines.append(f"== {s.title}{mark}{ref}")
            if s.kind == "table":
                widths = [max(len(str(r[k])) for r in s.content) for k in range(len(s.content[0]))] if s.content else []
                for r in s.content:
                    lines.append("  " + "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
            elif s.kind == "text":
                for t in (s.content if isinstance(s.content, list) else [s.content]):
                    lines.append(f"  {t}")
            else:
                lines.append(f"  {s.content}")
        lines.append("")
        lines.append(f"skipped nodes: {self.skipped_nodes}")
        return "\n".join(lines)


# --- helpers ----------------------------------------------------------------------

def _params(items) -> dict:
    out = {}
    for item in items or []:
        k, _, v = item.partition("=")
        if not v:
            raise ValueError(f"parameter binding {item!r} must look like name=value")
        out[k.strip()] = sol._number(v)
    return out


def _closed_form(args) -> sol.ClosedForm:
    params = _params(args.param)
    if getattr(args, "implicit", None):
        return sol.ClosedForm.implicit(args.implicit, branch=args.branch, seed=args.seed, params=params)
    if not args.expr:
        raise ValueError("give --expr or --implicit")
    return sol.ClosedForm.explicit(args.expr, power=Fraction(args.power), params=params)


def _grid(args):
    return sol.GridSpec.parse(args.grid) if getattr(args, "grid", None) else sol.GridSpec.default()


def _fmt(x) -> str:
    return f"{x:.6e}" if isinstance(x, float) else str(x)


# --- commands -------------------------------------------------------------------

def cmd_tables(args, rep: Report):
    A = sym.full_algebra()
    table = sym.structure_table(A, workers=4)
    if args.which == "structure":
        ref = sym.reference_structure_table()
        rows = [["[.,.]"] + A.names]
        bad = []
        for i, n in enumerate(A.names):
            rows.append([n] + [table.format_entry(i, j) for j in range(len(A))])
            for j in range(len(A)):
                if table.entries[i][j] != ref.entries[i][j]:
                    bad.append(f"[{n}, {A.names[j]}]: computed {table.format_entry(i, j)}, "
                               f"reference {ref.format_entry(i, j)}")
        rep.add("bracket table", "table", rows, "commutator table of the symmetry algebra")
        rep.add("entries differing from the reference table", "text", bad or ["none"], ok=not bad)
        return
    eps = args.eps
    devs = sym.compare_adjoint(A, eps)
    rows = [["Ad", "target", "coordinates", "max deviation"]]
    for (src, dst), d in devs.items():
        i, j = A.names.index(src), A.names.index(dst)
        coords = sym.adjoint_series(A, i, j, eps, table=table).coordinates
        rows.append([src, dst, "[" + ", ".join(f"{c:.10g}" for c in coords) + "]", f"{d:.3e}"])
    bad = [f"Ad(exp(eps {s})) {d}: deviation {v:.3e}" for (s, d), v in devs.items() if v > args.tol]
    rep.add(f"adjoint action at eps = {eps}", "table", rows, "adjoint representation tables")
    rep.add(f"entries deviating from the reference table by more than {args.tol:g}", "text",
            bad or ["none"], ok=not bad)


def _read_solution(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.strip().startswith("#")]
    comps = {}
    for k, ln in enumerate(lines):
        if "=" in ln:
            name, _, rhs = ln.partition("=")
            comps[name.strip()] = rhs.strip()
        else:
            comps[("zeta", "eta", "phi")[k]] = ln
    return VectorField.parse(comps["zeta"], comps["eta"], comps["phi"])


def cmd_determine(args, rep: Report):
    F = _pde(args.pde)
    D = sym.determining_system(F)
    rep.add("determining equations (each = 0)", "text", [str(e) for e in D], "system for zeta, eta, phi")
    rep.add("linear homogeneous in the unknown derivatives", "value", D.is_linear_homogeneous(),
            ok=D.is_linear_homogeneous())
    if args.solution:
        V = _read_solution(args.solution)
        res = D.residuals(sym.field_bindings(V))
        bad = [f"equation {k + 1}: {r}" for k, r in enumerate(res) if r]
        rep.add(f"substitution of {V}", "text", bad or ["all equations vanish"], ok=not bad)
    if args.family:
        res = D.residuals(sym.family_bindings())
        bad = [str(r) for r in res if r]
        rep.add("eight-parameter family", "text", bad or ["all equations vanish"],
                "general solution of the determining system", ok=not bad)


def _pde(name_or_expr):
    if name_or_expr in (None, "titeica"):
        return sym.titeica()
    return as_expr(name_or_expr)


def _fields(args):
    out = [(f"X{i + 1}", V) for i, V in enumerate(sym.generators())]
    for k, text in enumerate(args.field or []):
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("--field takes zeta,eta,phi")
        out.append((f"V{k + 1}", VectorField.parse(*parts)))
    return out


def cmd_invariance(args, rep: Report):
    F = _pde(args.pde)
    rows = [["field", "residual"]]
    ok = True
    for name, V in _fields(args):
        r = sym.symmetry_residual(V, F, reduce=args.reduce)
        rows.append([name, "0" if r.is_zero else str(r)])
        if name.startswith("X"):
            ok &= r.is_zero
    rep.add("invariance residuals" + (" on the surface" if args.reduce else ""), "table", rows,
            "infinitesimal invariance criterion", ok=ok or args.pde not in (None, "titeica"))


def cmd_helmholtz(args, rep: Report):
    T = _pde(args.operator)
    if args.factor:
        T = as_expr(args.factor) * T
    h = var.helmholtz_residuals(T)
    rep.add("residual 1", "value", str(h.residual1), "Helmholtz conditions")
    rep.add("residual 2", "value", str(h.residual2), "Helmholtz conditions")
    rep.add("operator is an Euler-Lagrange expression", "value", h.is_variational)
    if args.expect is not None:
        want = args.expect == "variational"
        rep.sections[-1].ok = h.is_variational == want
    if args.system:
        D = var.integrating_factor_system(T)
        rep.add("integrating factor conditions (each = 0)", "text", [str(e) for e in D],
                "system for the variational integrating factor")


def cmd_euler_lagrange(args, rep: Report):
    L = var.Lagrangian.parse(args.lagrangian) if args.lagrangian else var.titeica_lagrangian()
    E = var.euler_lagrange(L)
    rep.add("Lagrangian", "value", str(L.expr))
    rep.add("Euler-Lagrange expression", "value", str(E), "Euler-Lagrange operator")
    rep.add("jet order", "value", E.jet_order)
    if args.expect:
        same = (E - as_expr(args.expect)).is_zero
        rep.add("matches expected expression", "value", same, ok=same)


def cmd_variational(args, rep: Report):
    L = var.Lagrangian.parse(args.lagrangian) if args.lagrangian else var.titeica_lagrangian()
    rows = [["field", "residual vanishes", "residual"]]
    fields = [(n, V) for n, V in var.variational_generators().items()] + _fields(args)
    zero = {}
    for name, V in fields:
        r = var.variational_residual(V, L)
        zero[name] = r.is_zero
        rows.append([name, r.is_zero, "0" if r.is_zero else str(r)])
    rep.add("variational symmetry residuals", "table", rows, "variational symmetry criterion")
    if not args.lagrangian:
        ok = all(zero[n] for n in ("Y1", "Y2", "Y3", "Y4")) and not any(zero[n] for n in ("X4", "X6", "X7", "X8"))
        rep.add("Y1..Y4 variational, X4 X6 X7 X8 not", "value", ok, ok=ok)


def cmd_noether(args, rep: Report):
    L = var.Lagrangian.parse(args.lagrangian) if args.lagrangian else var.titeica_lagrangian()
    xi = [p.strip() for p in args.xi.split(",")]
    if len(xi) != 2:
        raise ValueError("--xi takes two comma-separated expressions")
    rep.add("characteristic Q", "value", str(as_expr(args.q)))
    try:
        cl = var.noether_flux(args.q, L, xi)
    except var.NoetherSignError as exc:
        rep.add("flux", "text", [str(exc)], "Noether flux", ok=False)
        return
    rep.add("kappa", "value", cl.kappa)
    rep.add("P1 (flow)", "value", str(cl.P1), "Noether flux")
    rep.add("P2 (conserved density)", "value", str(cl.P2), "Noether flux")
    ident = cl.identity_residual().is_zero
    rep.add("Div P - kappa Q E(L) vanishes identically", "value", ident, ok=ident)
    if args.reference:
        r1, r2 = (as_expr(t) for t in var.REFERENCE_FLUX)
        same = [(cl.P1 - cl.kappa * r1).is_zero and (cl.P2 - cl.kappa * r2).is_zero,
                (cl.P1 + cl.kappa * r1).is_zero and (cl.P2 + cl.kappa * r2).is_zero]
        rep.add("matches the reference flux up to kappa", "value", any(same), "conserved flux of -y d/dx",
                ok=any(same))
    if args.solution:
        cf = sol.ClosedForm.explicit(args.solution, params=_params(args.param))
        cr = var.conservation_check(cl, L, _grid(args), cf, args.alpha)
        rep.skipped_nodes += cr.skipped
        rep.add(f"max |Div P| on {args.solution}", "value", _fmt(cr.max_abs_divergence),
                ok=cr.passed)


def cmd_reduce(args, rep: Report):
    ode = sol.reduce_ansatz(args.ansatz, _pde(args.pde))
    rep.add(f"reduced equation for u = psi({args.ansatz})", "value", str(ode), "ansatz reduction")
    if args.psi:
        psi = (args.psi, args.power) if args.power != "1" else args.psi
        mode = "symbolic" if args.power == "1" and not any(isinstance(v, float) for v in _params(args.param).values()) else "numeric"
        r = sol.ode_residual(psi, ode, sol._number(args.alpha), mode, params=_params(args.param))
        rep.add(f"residual of psi = {args.psi}" + ("" if args.power == "1" else f" ^ {args.power}"),
                "value", str(r.residual) if r.mode == "symbolic" else _fmt(r.max_abs), ok=r.passed)


def cmd_verify_solution(args, rep: Report):
    cf = _closed_form(args)
    mode = args.mode or ("symbolic" if cf.is_rational else "numeric")
    r = sol.pde_residual(cf, args.alpha, mode, _grid(args) if mode == "numeric" else None)
    rep.skipped_nodes += r.skipped
    rep.add("closed form", "value", str(cf))
    if r.mode == "symbolic":
        rep.add("symbolic residual", "value", str(r.residual), "Titeica equation", ok=r.passed)
    else:
        rep.add("max |residual|", "value", _fmt(r.max_abs), "Titeica equation", ok=r.passed)
        rep.add("nodes evaluated", "value", r.nodes)


def cmd_catalog(args, rep: Report):
    rows = [["name", "mode", "alpha", "result", "detail", "note"]]
    ok = True
    for r in sol.verify_catalog(grid=_grid(args) if args.grid else None):
        rows.append([r.name, r.mode, r.alpha, "pass" if r.passed else "FAIL", r.detail, r.note])
        ok &= r.passed
    rep.add("solution catalog", "table", rows, "explicit and implicit solutions", ok=ok)


def cmd_geometry(args, rep: Report):
    cf = _closed_form(args)
    pt = [float(v) for v in args.at.split(",")]
    if len(pt) != 2:
        raise ValueError("--at takes x,y")
    g = sol.geometry_eval(cf, pt)
    rep.add("Gauss curvature K", "value", _fmt(g.K), "Gauss curvature of the graph")
    rep.add("distance d to the tangent plane", "value", _fmt(g.d))
    rep.add("I = K/d^4", "value", _fmt(g.I), "centroaffine invariant")


COMMANDS = {
    "tables": cmd_tables, "determine": cmd_determine, "invariance": cmd_invariance,
    "helmholtz": cmd_helmholtz, "euler-lagrange": cmd_euler_lagrange, "variational": cmd_variational,
    "noether": cmd_noether, "reduce": cmd_reduce, "verify-solution": cmd_verify_solution,
    "catalog": cmd_catalog, "geometry": cmd_geometry,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jetlie", description="Symmetry, variational and solution checks "
                                "for the Titeica surfaces equation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--format", choices=("text", "json"), default="text")
        return sp

    def form_args(sp):
        sp.add_argument("--expr", help="explicit u(x, y) (the base when --power is given)")
        sp.add_argument("--power", default="1", help="exponent applied to --expr, e.g. 1/2")
        sp.add_argument("--implicit", help="relation R(x, y, u) = 0")
        sp.add_argument("--branch", help="expression that must stay positive on the chosen branch")
        sp.add_argument("--seed", type=float, default=1.0, help="starting value for the implicit solve")
        sp.add_argument("--param", action="append", help="parameter binding name=value")

    sp = add("tables", "bracket or adjoint tables checked against embedded references")
    sp.add_argument("--which", choices=("structure", "adjoint"), default="structure")
    sp.add_argument("--eps", type=float, default=0.3)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("determine", "emit or verify the determining system")
    sp.add_argument("--pde", default="titeica")
    sp.add_argument("--solution", help="file with zeta, eta, phi expressions")
    sp.add_argument("--family", action="store_true", help="also check the eight-parameter family")

    sp = add("invariance", "invariance residual per generator")
    sp.add_argument("--pde", default="titeica")
    sp.add_argument("--reduce", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--field", action="append", help="extra field zeta,eta,phi")

    sp = add("helmholtz", "Helmholtz residuals of an operator")
    sp.add_argument("--operator", default="titeica")
    sp.add_argument("--factor", help="multiplier applied to the operator")
    sp.add_argument("--expect", choices=("variational", "not-variational"))
    sp.add_argument("--system", action="store_true", help="emit the integrating factor conditions")

    sp = add("euler-lagrange", "Euler-Lagrange expression of a Lagrangian")
    sp.add_argument("--lagrangian")
    sp.add_argument("--expect", help="expression the result must equal")

    sp = add("variational", "variational symmetry residual per generator")
    sp.add_argument("--lagrangian")
    sp.add_argument("--field", action="append", help="extra field zeta,eta,phi")

    sp = add("noether", "Noether flux for a characteristic")
    sp.add_argument("--q", required=True)
    sp.add_argument("--xi", required=True, help="xi1,xi2")
    sp.add_argument("--lagrangian")
    sp.add_argument("--reference", action="store_true", help="compare with the embedded flux of -y d/dx")
    sp.add_argument("--solution", help="explicit solution for the numeric divergence check")
    sp.add_argument("--alpha", help="alpha for the numeric check")
    sp.add_argument("--param", action="append")
    sp.add_argument("--grid")

    sp = add("reduce", "ODE for an ansatz u = psi(t)")
    sp.add_argument("--ansatz", required=True, help="t as a polynomial in x, y")
    sp.add_argument("--pde", default="titeica")
    sp.add_argument("--psi", help="candidate psi(t) to substitute")
    sp.add_argument("--power", default="1")
    sp.add_argument("--alpha", default="0")
    sp.add_argument("--param", action="append")

    sp = add("verify-solution", "residual of a closed form")
    form_args(sp)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--mode", choices=("symbolic", "numeric"))
    sp.add_argument("--grid", help="x0,x1,y0,y1,nx,ny")

    sp = add("catalog", "verify every catalogued solution")
    sp.add_argument("--grid", help="x0,x1,y0,y1,nx,ny (entries with their own grid keep it)")

    sp = add("geometry", "K, d and I at a point")
    form_args(sp)
    sp.add_argument("--at", required=True, help="x,y")
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    rep = Report(args.command)
    code = None
    try:
        COMMANDS[args.command](args, rep)
    except (sol.GuardError, sol.AnsatzError, sol.ConvergenceError) as exc:
        rep.error = str(exc)
        code = EXIT_FAIL
    except (ParseError, ValueError, KeyError, C.JetOrderError, OSError) as exc:
        rep.error = str(exc)
        code = EXIT_USAGE
    text = rep.to_json() if args.format == "json" else rep.to_text()
    out.write(text + "\n")
    if code is not None:
        return code
    return EXIT_PASS if rep.status == "pass" else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
