"""End-to-end command runs, in process, with captured output."""

import io

import pytest

from cdse.cli import main
from cdse.families import build_case1
from cdse.solver import parse_system_text

SQUARE = "vars 1\neq 1\n  op 1 : (1 + h1)^2\n"
NOT_HOPF = "vars 1\neq 1\n  op 1 : 1 + h1\n  op 2 : 1 + 2*h1\n"
INTRO_FAMILY = """family fundamental
vertex 1 kind damped beta -1/3 degrees 1..
vertex 2 kind reduced degrees 1
vertex 3 kind damped beta 1 degrees 1
rescale 1 3
"""


def run(capsys, *argv):
    code = main(list(argv))
    got = capsys.readouterr()
    return code, got.out, got.err


# ----------------------------------------------------------------- solve

def test_solve_text(capsys):
    code, out, _ = run(capsys, "solve", SQUARE, "-N", "3")
    assert code == 0
    assert "x_1(1) = 1 * (1.1:)" in out
    assert "x_1(2) = 2 * (1.1: (1.1:))" in out
    assert "x_1(3) = " in out


def test_solve_family_input(capsys):
    code, out, _ = run(capsys, "solve", INTRO_FAMILY, "-N", "2")
    assert code == 0
    assert "x_1(2) = 3 * (1.1: (1.1:))" in out


def test_solve_structured(capsys):
    code, out, _ = run(capsys, "solve", SQUARE, "-N", "2",
                       "--format", "structured")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "cdse-report 1"
    assert lines[1] == "command solve"
    assert "component 1 1 | 1 * (1.1:)" in lines
    assert lines[-1] == "status ok"


def test_solve_reports_quiet_variables(capsys):
    code, out, _ = run(capsys, "solve", "vars 2\neq 1\n  op 1 : 1 + h1\neq 2\n",
                       "-N", "3")
    assert code == 0
    assert "x_2 = 0 up to order 3" in out


def test_solve_permissive_keeps_zero_solution(capsys):
    bad = "vars 1\neq 1\n  op 1 : h1\n"
    code, _, err = run(capsys, "solve", bad, "-N", "3")
    assert code == 2 and "error:" in err
    code, out, _ = run(capsys, "solve", bad, "-N", "3", "--permissive")
    assert code == 0
    assert "x_1 = 0 up to order 3" in out


# ------------------------------------------------------------- check-hopf

def test_check_hopf_passes(capsys):
    code, out, _ = run(capsys, "check-hopf", SQUARE, "-N", "4")
    assert code == 0
    assert "Hopf to order 4" in out


def test_check_hopf_fails_with_witness(capsys):
    code, out, _ = run(capsys, "check-hopf", NOT_HOPF, "-N", "3")
    assert code == 1
    assert "not Hopf" in out
    assert "witness term" in out


def test_check_hopf_structured(capsys):
    code, out, _ = run(capsys, "check-hopf", NOT_HOPF, "-N", "3",
                       "--format", "structured")
    assert code == 1
    lines = out.splitlines()
    assert "verdict not-hopf" in lines
    assert any(line.startswith("failure eq 1 degree 3") for line in lines)
    assert any(line.startswith("witness ") for line in lines)


# --------------------------------------------------------------- classify

def test_classify_power_shape(capsys):
    code, out, _ = run(capsys, "classify",
                       "family case1 lambda=1 mu=-1 J=1,2\n")
    assert code == 0
    assert "first kind: lambda = 1, mu = -1" in out


def test_classify_reports_affine_reading(capsys):
    code, out, _ = run(capsys, "classify", "family case1 lambda=0 mu=1 J=1\n")
    assert code == 0
    assert "also second kind with m = 1, alpha = -1" in out


def test_classify_gated_shape_structured(capsys):
    code, out, _ = run(capsys, "classify",
                       "family case2 m=2 alpha=-1 J=1,2,3\n",
                       "--format", "structured")
    assert code == 0
    lines = out.splitlines()
    assert "verdict case2" in lines
    assert "m 2" in lines and "alpha -1" in lines


def test_classify_unclassifiable(capsys):
    code, out, _ = run(capsys, "classify",
                       "vars 1\neq 1\n  op 1 : 1 + h1 + h1^3\n")
    assert code == 1
    assert "unclassifiable:" in out


def test_classify_input_errors(capsys):
    code, _, err = run(capsys, "classify", SQUARE, "-N", "2")
    assert code == 2 and "at least 3" in err
    two = "vars 2\neq 1\n  op 1 : 1 + h1\neq 2\n  op 1 : 1 + h2\n"
    code, _, err = run(capsys, "classify", two)
    assert code == 2 and "single-equation" in err


# ----------------------------------------------------------------- lambda

def test_lambda_text(capsys):
    code, out, _ = run(capsys, "lambda", SQUARE, "-N", "4")
    assert code == 0
    assert "i=1 cut=(1,1) n=2 : 3" in out
    assert "fit i=1 cut=(1,1) : 2 + 1*(n-1)" in out
    assert "q-independence: holds" in out


def test_lambda_structured(capsys):
    code, out, _ = run(capsys, "lambda", SQUARE, "-N", "4",
                       "--format", "structured")
    assert code == 0
    lines = out.splitlines()
    assert "entry 1 | 1 1 | 2 | 3" in lines
    assert "fit 1 | 1 1 | 2 | 1" in lines
    assert "qindep holds" in lines
    assert lines[-1] == "status ok"


def test_lambda_flags_inconsistency(capsys):
    code, out, _ = run(capsys, "lambda", NOT_HOPF, "-N", "3")
    assert code == 1
    assert "inconsistent" in out


# ------------------------------------------------------------------ build

def test_build_expands_a_family(capsys):
    code, out, _ = run(capsys, "build", "family case1 lambda=1 mu=-1 J=1,2\n")
    assert code == 0
    assert parse_system_text(out) == build_case1({1, 2}, 1, -1)


def test_build_normalizes_system_text(capsys):
    code, out, _ = run(capsys, "build", SQUARE)
    assert code == 0
    assert out.startswith("vars 1")


# ------------------------------------------------------------ verify suites

def test_prelie_verify(capsys):
    code, out, _ = run(capsys, "prelie-verify", "-N", "2")
    assert code == 0
    for name in ("pre-lie-identity", "grafting-closed-vs-recursive",
                 "composition-coproduct-duality", "tree-to-word-morphism",
                 "word-closed-vs-recursive", "weighted-solution-two-routes"):
        assert f"PASS {name}" in out


def test_prelie_verify_structured(capsys):
    code, out, _ = run(capsys, "prelie-verify", "-N", "2",
                       "--format", "structured")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "cdse-report 1"
    assert any(line.startswith("suite pre-lie-identity | pass") for line in lines)
    assert lines[-1] == "status ok"


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "-N", "2")
    assert code == 0
    for name in ("coassociativity", "counit", "coproduct-multiplicativity",
                 "cocycle-identity", "coproduct-grading", "solver-two-routes",
                 "hopf-smoke"):
        assert f"PASS {name}" in out


# ---------------------------------------------------------- input plumbing

def test_file_input_and_output(tmp_path, capsys):
    src = tmp_path / "square.sdse"
    src.write_text(SQUARE)
    dst = tmp_path / "report.txt"
    code, out, _ = run(capsys, "solve", str(src), "-N", "2", "-o", str(dst))
    assert code == 0
    assert out == ""
    assert "x_1(1) = 1 * (1.1:)" in dst.read_text()


def test_stdin_input(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(SQUARE))
    code, out, _ = run(capsys, "solve", "-", "-N", "2")
    assert code == 0
    assert "x_1(1)" in out


def test_missing_file_is_an_input_error(capsys):
    code, _, err = run(capsys, "solve", "no-such-file.sdse")
    assert code == 2
    assert "no such file" in err


def test_malformed_system_is_an_input_error(capsys):
    code, _, err = run(capsys, "solve", "vars 1\neq 2\n  op 1 : 1 + h1\n")
    assert code == 2
    assert "error:" in err


def test_order_must_be_positive(capsys):
    code, _, err = run(capsys, "solve", SQUARE, "-N", "0")
    assert code == 2
    assert "at least 1" in err
