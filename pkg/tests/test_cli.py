import io
import json
import subprocess
import sys

import pytest

from jetlie.cli import run


def call(*argv, fmt="json"):
    out = io.StringIO()
    code = run([*argv, "--format", fmt], out)
    text = out.getvalue()
    return code, (json.loads(text) if fmt == "json" else text)


def test_structure_table_command():
    code, data = call("tables", "--which", "structure")
    assert code == 0 and data["status"] == "pass"
    assert set(data) == {"command", "status", "sections", "skipped_nodes"}
    first = data["sections"][0]
    assert first["kind"] == "table" and "rows" in first and "paper_ref" in first


def test_adjoint_table_reports_mismatches():
    code, data = call("tables", "--which", "adjoint")
    assert code == 1 and data["status"] == "fail"
    flagged = data["sections"][-1]["text"]
    assert len(flagged) == 3


def test_json_is_deterministic():
    assert call("invariance")[1] == call("invariance")[1]


def test_invariance_with_control_field():
    code, data = call("invariance", "--field", "x,0,0")
    rows = dict(data["sections"][0]["rows"][1:])
    assert code == 0
    assert all(rows[f"X{i}"] == "0" for i in range(1, 9))
    assert rows["V1"] != "0"


def test_determine_family():
    code, data = call("determine", "--family")
    assert code == 0
    assert len(data["sections"][0]["text"]) == 59


def test_determine_solution_file(tmp_path):
    f = tmp_path / "field.txt"
    f.write_text("zeta = x^2\neta = 0\nphi = 0\n")
    code, _ = call("determine", "--solution", str(f))
    assert code == 1


def test_helmholtz_expectations():
    assert call("helmholtz", "--expect", "not-variational")[0] == 0
    assert call("helmholtz", "--factor", "1/(x*u_x + y*u_y - u)^4", "--expect", "variational")[0] == 0
    code, data = call("helmholtz", "--system")
    assert code == 0 and len(data["sections"][-1]["text"]) == 4


def test_euler_lagrange_expect():
    good = "(u_xx*u_yy - u_xy^2)/(x*u_x + y*u_y - u)^4 - alpha"
    assert call("euler-lagrange", "--expect", good)[0] == 0
    assert call("euler-lagrange", "--expect", "0")[0] == 1
    assert call("euler-lagrange", "--lagrangian", "u_x^2/2", "--expect=-u_xx")[0] == 0


def test_variational_command():
    assert call("variational")[0] == 0


def test_noether_commands():
    code, data = call("noether", "--q", "y*u_x", "--xi=-y,0", "--reference", "--solution", "1/(x*y)",
                      "--alpha", "1/27")
    assert code == 0 and data["status"] == "pass"
    code, data = call("noether", "--q", "y*u_y", "--xi=-y,0", "--reference")
    assert code == 1 and data["status"] == "fail"


def test_reduce_commands():
    code, data = call("reduce", "--ansatz", "x*y", "--psi", "1/t", "--alpha", "1/27")
    assert code == 0
    code, data = call("reduce", "--ansatz", "x")
    assert code == 1 and data["status"] == "error"


def test_verify_solution_modes():
    assert call("verify-solution", "--expr", "1/(x*y)", "--alpha", "1/27")[0] == 0
    assert call("verify-solution", "--expr", "x*y", "--alpha", "1/27")[0] == 1
    assert call("verify-solution", "--expr", "1 + a*x*y", "--power", "1/2", "--param", "a=2",
                "--alpha=-a^2/4")[0] == 0
    assert call("verify-solution", "--implicit", "u^2 + a*(x^2 + y^2) - 1", "--branch", "u",
                "--param", "a=1/4", "--alpha", "1/16", "--grid", "0.2,1.3,0.2,1.3,8,8")[0] == 0


def test_verify_solution_guard_error():
    code, data = call("verify-solution", "--expr", "x + y", "--alpha", "1", "--mode", "numeric")
    assert code == 1 and data["status"] == "error"


def test_catalog_and_geometry():
    assert call("catalog")[0] == 0
    code, data = call("geometry", "--expr", "1/(x*y)", "--at", "1,1")
    assert code == 0
    assert float(data["sections"][-1]["value"]) == pytest.approx(1 / 27)


@pytest.mark.parametrize("argv", [
    ["verify-solution", "--expr", "u_xxxxx", "--alpha", "1"],
    ["verify-solution", "--expr", "x +* y", "--alpha", "1"],
    ["geometry", "--expr", "1/(x*y)", "--at", "1"],
    ["verify-solution", "--expr", "x", "--alpha", "1", "--param", "broken"],
])
def test_usage_errors(argv):
    assert call(*argv)[0] == 2


def test_bad_arguments_exit_two():
    assert run(["no-such-command"], io.StringIO()) == 2


def test_text_output():
    code, text = call("tables", fmt="text")
    assert code == 0 and text.startswith("tables: PASS")
    assert "skipped nodes: 0" in text


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jetlie.cli", "geometry", "--expr", "1/(x^2 + y^2)",
                           "--at", "1,1", "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "pass"
