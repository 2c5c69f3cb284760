import csv
import json

import numpy as np
import pytest

from cmflows import flows
from cmflows.cli import main, parse_hamiltonian
from cmflows.errors import ParseError


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("x,y", [(["0.3"], ["-1.2"]), (["2", "0.5"], ["0.1", "-0.4"])])
def test_chart(x, y, capsys):
    code, out, _ = run(["chart", "--x", *x, "--y", *y], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["n"] == len(x) and data["moment_ok"] and data["moment_defect"] < 1e-12


def test_chart_collision(capsys):
    code, _, err = run(["chart", "--x", "1", "1", "--y", "0", "0"], capsys)
    assert code == 2 and "error" in err


def test_flow_shift(capsys, tmp_path):
    out = tmp_path / "f.csv"
    code, _, _ = run(["flow", "--H", "tr(Y)", "--t", "1.5", "--steps", "3", "--x", "1", "0",
                      "--y", "0", "0", "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    last = rows[-1]
    assert float(last["time"]) == pytest.approx(1.5)
    assert float(last["eig0_re"]) == pytest.approx(2.5, abs=1e-12)
    assert float(last["eig1_re"]) == pytest.approx(1.5, abs=1e-12)


def test_flow_zero_time(capsys):
    code, out, _ = run(["flow", "--H", "tr(XY)", "--t", "0", "--x", "1", "0", "--y", "0", "0"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 2


@pytest.mark.parametrize("text", ["tr(XZ)", "tr(XY", "2*", "", "tr(X) tr(Y)"])
def test_malformed_hamiltonian(text, capsys):
    code, _, err = run(["flow", "--H", text, "--t", "1"], capsys)
    assert code == 2 and "error" in err


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_hamiltonian("tr(XY) + tr(XQ)")
    assert info.value.position == 13


def test_grammar():
    H = parse_hamiltonian("-0.5*tr(XY) + 2*tr(X)*tr(YY) - tr(Y)")
    assert H.is_tau_compatible() and len(H.terms) == 3


def _request(tmp_path, **kw):
    path = tmp_path / "req.json"
    path.write_text(json.dumps(kw))
    return str(path)


def test_approx_passthrough(tmp_path, capsys):
    req = _request(tmp_path, H="tr(YY)", t=0.7, n=2, epsilon=1e-9, budget={"m": 2, "l": 2},
                   region={"R": 5.0, "count": 4})
    code, out, _ = run(["approx", req], capsys)
    data = json.loads(out)
    assert code == 0 and data["status"] == "ok" and data["report"]["sup"] < 1e-9


def test_approx_tr_xy(tmp_path, capsys):
    req = _request(tmp_path, H="tr(XY)", t=0.25, n=2, epsilon=1e-2, budget={"m": 8, "l": 8},
                   region={"R": 5.0, "count": 10, "seed": 1})
    code, out, _ = run(["approx", req], capsys)
    assert code == 0 and json.loads(out)["target_met"]


def test_approx_miss(tmp_path, capsys):
    req = _request(tmp_path, H="tr(YY) + tr(XXX)", t=0.5, n=2, epsilon=1e-8,
                   budget={"m": 1, "l": 1}, region={"R": 5.0, "count": 4})
    code, out, _ = run(["approx", req], capsys)
    data = json.loads(out)
    assert code == 3 and data["status"] == "target_miss" and data["program"]["steps"]


def test_approx_imaginary_coefficient(tmp_path, capsys):
    req = _request(tmp_path, H="2j*tr(XY)", t=0.25)
    code, _, err = run(["approx", req], capsys)
    assert code == 2 and "tau" in err


def test_verify_symplectic(capsys):
    code, out, _ = run(["verify", "symplectic", "--n", "2"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_verify_convention_flip(capsys, monkeypatch):
    monkeypatch.setattr(flows, "CONVENTION_PIN", -2.0)
    code, _, err = run(["verify", "convention"], capsys)
    assert code == 1 and "FAILED: convention/pin" in err


def test_verify_unknown_suite(capsys):
    code, _, _ = run(["verify", "nope"], capsys)
    assert code == 2


def test_tol_parsing(capsys):
    code, out, _ = run(["verify", "chart", "--tol", "chart=1e-300"], capsys)
    assert code == 1 and not json.loads(out)["passed"]
    assert run(["verify", "chart", "--tol", "bogus=1"], capsys)[0] == 2
    assert run(["verify", "chart", "--tol", "chart"], capsys)[0] == 2


def test_deterministic_output(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["verify", "all", "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    req = _request(tmp_path, H="tr(XY)", t=0.1, budget={"m": 2, "l": 2}, region={"count": 3})
    for path in (a, b):
        main(["approx", req, "--out", str(path), "--tol", "epsilon=10"])
    assert a.read_bytes() == b.read_bytes()
    assert np.isfinite(json.loads(a.read_text())["report"]["sup"])
