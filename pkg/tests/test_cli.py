import json
import math

import numpy as np
import pytest

from prabfde.cli import main

VAR = """\
[params]
alpha = 0.5
betas = 1.3, 0.4
thetas = 0.7, 0.2
omega = 0.3
[coefficients]
sigma1 = 1 + t^2
[forcing]
g = cos(t)
[ic]
e = 1, -0.5
[domain]
n_points = 129
"""
RELAX = """\
[params]
alpha = 1
betas = 0.6, 0
theta = 0
[coefficients]
sigma1 = 1
[ic]
e = 1
[domain]
n_points = 129
"""


@pytest.fixture
def var(tmp_path):
    path = tmp_path / "var.prob"
    path.write_text(VAR)
    return path


def read_table(path):
    lines = path.read_text().splitlines()
    header = [l[2:] for l in lines if l.startswith("# ")]
    body = [l for l in lines if not l.startswith("#")]
    cols = body[0].split(",")
    data = np.array([[float(x) for x in l.split(",")] for l in body[1:]])
    return header, cols, data


def last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)


def test_solve_writes_csv(var, tmp_path):
    out = tmp_path / "a.csv"
    assert main(["solve", str(var), "--out", str(out)]) == 0
    header, cols, data = read_table(out)
    assert cols == ["t", "v", "u", "residual_pointwise"]
    assert data.shape == (129, 4)
    assert data[0, 1] == 1.0
    assert any(h.startswith("problem_sha256: ") for h in header)
    assert "route: picard" in header


def test_solve_is_byte_identical(var, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["solve", str(var), "--out", str(a)])
    main(["solve", str(var), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_overrides_and_canonical(var, tmp_path):
    out, can = tmp_path / "a.csv", tmp_path / "c.csv"
    assert main(["solve", str(var), "--grid", "65", "--tol", "1e-12", "--out", str(out), "--canonical", str(can)]) == 0
    header, cols, data = read_table(can)
    assert cols == ["t", "v_0", "v_1"]
    assert data.shape == (65, 3)
    assert data[0, 1:].tolist() == [1.0, 0.0]
    assert "n_points: 65" in header


def test_const_route_and_cross_check(tmp_path):
    path = tmp_path / "relax.prob"
    path.write_text(RELAX)
    out = tmp_path / "r.csv"
    assert main(["solve", str(path), "--cross-check", "--out", str(out)]) == 0
    header, _, data = read_table(out)
    assert "route: const" in header
    diff = float(next(h for h in header if h.startswith("cross_check_max")).split(": ")[1])
    assert diff < 1e-3
    assert main(["solve", str(path), "--route", "picard", "--out", str(out)]) == 0
    assert "route: picard" in read_table(out)[0]


def test_const_flag_rejects_variable_problem(var, capsys):
    assert main(["solve", str(var), "--const"]) == 2
    assert last_error(capsys)["exit_code"] == 2


@pytest.mark.parametrize("betas", ["1.0, 0.4", "1.3, 1.3", "1.3, -0.4"])
def test_validation_exit_code(tmp_path, capsys, betas):
    path = tmp_path / "bad.prob"
    path.write_text(VAR.replace("1.3, 0.4", betas))
    assert main(["solve", str(path)]) == 2
    err = last_error(capsys)
    assert err["error"] == "ValidationError"
    assert err["exit_code"] == 2


def test_parse_error_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.prob"
    path.write_text(VAR.replace("1 + t^2", "1 + t/2"))
    assert main(["solve", str(path)]) == 2
    err = last_error(capsys)
    assert err["error"] == "ParseError"
    assert "line 7, column 15" in err["message"]


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "none.prob")]) == 4
    assert last_error(capsys)["exit_code"] == 4


def test_nonconvergence_exit_code(var, capsys):
    assert main(["solve", str(var), "--max-iter", "2"]) == 3
    assert last_error(capsys)["error"] == "MaxItersExceeded"


def test_check_pass_and_fail(var, tmp_path):
    out = tmp_path / "check.txt"
    assert main(["check", str(var), "--grid", "65", "--out", str(out)]) == 0
    assert "status: pass" in out.read_text()
    assert main(["check", str(var), "--grid", "65", "--tol", "1e-12", "--out", str(out)]) == 1
    assert "status: fail" in out.read_text()


def test_check_with_psi(tmp_path):
    path = tmp_path / "psi.prob"
    path.write_text(VAR + "[psi]\nfamily = exp_sat\nlambda = 1\n")
    assert main(["check", str(path), "--grid", "65", "--out", str(tmp_path / "o.txt")]) == 0


def test_ml_table(tmp_path):
    out = tmp_path / "ml.csv"
    assert main(["ml", "--alpha", "1", "--beta", "1", "--from", "-2", "--to", "2", "--n", "9", "--out", str(out)]) == 0
    _, cols, data = read_table(out)
    assert cols == ["z", "value"]
    assert np.allclose(data[:, 1], np.exp(data[:, 0]), rtol=1e-14)


def test_ml_rejects_bad_parameters(capsys):
    assert main(["ml", "--alpha", "0", "--beta", "1", "--from", "0", "--to", "1"]) == 2
    assert main(["ml", "--alpha", "1", "--beta", "1", "--from", "0", "--to", "1", "--n", "0"]) == 2


def test_ml_stdout(capsys):
    assert main(["ml", "--alpha", "2", "--beta", "1", "--from", "4", "--to", "4", "--n", "1"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert float(last.split(",")[1]) == pytest.approx(math.cosh(2), rel=1e-14)
