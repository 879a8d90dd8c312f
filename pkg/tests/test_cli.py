import json
import subprocess
import sys

import numpy as np
import pytest

from covgap.cli import run
from covgap.gap import gamma_gap
from covgap.core import Codomain
from oracles import mcmillan_matrix


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _run(argv, capsys):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_check_psd_on_reals(tmp_path, capsys):
    m = _write(tmp_path, "psd2.json", [[1, 0.5], [0.5, 1]])
    code, rep, _ = _run(["check", "cov", "-m", m, "-E", "R"], capsys)
    assert code == 0 and rep["status"] == "REALIZABLE"
    assert rep["command"] == "check" and "timing_ms" in rep


def test_check_mcmillan_rejected(tmp_path, capsys):
    m = _write(tmp_path, "cosine8.json", mcmillan_matrix().tolist())
    code, rep, _ = _run(["check", "cov", "-m", m, "-E", "{-1,1}"], capsys)
    assert code == 1 and rep["status"] == "NOT_REALIZABLE"
    cert = rep["certificate"]
    lam = np.array(cert["lambda"])
    assert np.sum(lam * mcmillan_matrix()) < cert["gap"]


def test_gap_offdiag(tmp_path, capsys):
    m = _write(tmp_path, "offdiag.json", [[0, 1], [1, 0]])
    code, rep, _ = _run(["gap", "-m", m, "-E", "{-1,1}"], capsys)
    assert code == 0
    assert rep["value"] == -2
    assert rep["gap"]["minimizer"] == [1, -1]


def test_gap_value_revalidates_via_minimizer(tmp_path, capsys):
    rng = np.random.default_rng(0)
    for _ in range(10):
        L = rng.integers(-3, 4, size=(4, 4))
        L = L + L.T
        m = _write(tmp_path, "L.json", L.tolist())
        code, rep, _ = _run(["gap", "-m", m, "-E", "{-1,0,1}"], capsys)
        assert code == 0 and rep["gap"]["exact"]
        z = np.array(rep["gap"]["minimizer"], dtype=float)
        assert z @ L @ z == rep["value"]
        assert rep["value"] == gamma_gap(L, Codomain.finite([-1, 0, 1])).value


def test_gap_eta_and_tensor(tmp_path, capsys):
    m = _write(tmp_path, "off.json", [[0, 1], [1, 0]])
    code, rep, _ = _run(["gap", "-m", m, "-E", "{-1,1}", "--eta"], capsys)
    assert code == 0 and rep["value"] == 4  # half of 2 * (1 - (-1))^2
    t = _write(tmp_path, "t.json", np.ones((2, 2, 2)).tolist())
    code, rep, _ = _run(["gap", "-m", t, "-E", "{-1,1}", "--tensor", "3"], capsys)
    assert code == 0 and rep["value"] == -8


def test_necessary_passed_exits_two(tmp_path, capsys):
    m = _write(tmp_path, "b.json", [[2, 0.5, 0.3], [0.5, 2, 0.1], [0.3, 0.1, 2]])
    code, rep, _ = _run(["check", "cov", "-m", m, "-E", "Z\\0"], capsys)
    assert rep["status"] == "NECESSARY_PASSED"
    assert code == 2


def test_report_embeds_config(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CODOMAIN_GAP_THREADS", "3")
    m = _write(tmp_path, "psd2.json", [[1, 0.5], [0.5, 1]])
    out = tmp_path / "r.json"
    code = run(["check", "cov", "-m", m, "-E", "{-1,1}", "--seed", "5", "-o", str(out)])
    assert capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    cfg = rep["config"]
    assert cfg["seed"] == 5 and cfg["codomain"] == "{-1,1}" and cfg["matrix"] == m
    assert cfg["threads"] == 3
    assert "gap_tol" in cfg["tolerances"]
    assert rep["engine_config"]["seed"] == 5
    assert code in (0, 2)


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["gap", "-m", "MISSING.json", "-E", "R"],
    ["gap", "-m", "{M}", "-E", "{1,"],
    ["check", "cov", "-m", "{M}", "-E", "R"],
    ["gap", "-m", "{M}"],
])
def test_input_errors_exit_three(tmp_path, capsys, argv):
    bad = _write(tmp_path, "bad.json", [[1, 2], [3, 1]])
    argv = [a.replace("{M}", bad) for a in argv]
    assert run(argv) == 3
    assert capsys.readouterr().err


def test_check_variogram_and_moment(tmp_path, capsys):
    x = np.array([0, 0.1, 0.2])
    g = 1 - np.cos(x[:, None] - x[None, :])
    m = _write(tmp_path, "g.json", g.tolist())
    code, rep, _ = _run(["check", "variogram", "-m", m, "-E", "{-1,1}"], capsys)
    assert code == 1 and rep["status"] == "NOT_REALIZABLE"
    t = _write(tmp_path, "t.json", np.ones((2, 2, 2, 2)).tolist())
    code, rep, _ = _run(["check", "moment", "-m", t, "-E", "{-1,1}"], capsys)
    assert code in (0, 2) and rep["status"] in ("REALIZABLE", "NECESSARY_PASSED")


def test_construct_writes_output(tmp_path, capsys):
    m = _write(tmp_path, "C.json", [[1, 0.8], [0.8, 1]])
    out = tmp_path / "out.json"
    assert run(["construct", "arcsin", "-m", m, "-a", "0.5", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["value"][0][1] == pytest.approx(2 / np.pi * np.arcsin(0.4), abs=1e-15)
    assert rep["spec"]["params"]["a"] == 0.5
    assert run(["construct", "integer_bump", "-m", m, "-e", "0.1"]) == 3


def test_simulate_pass_and_determinism(tmp_path, capsys):
    m = _write(tmp_path, "C.json", [[1, 0.3], [0.3, 1]])
    code, a, _ = _run(["simulate", "arcsin", "-m", m, "-N", "20000", "--seed", "4"], capsys)
    assert code == 0 and a["status"] == "PASS"
    _, b, _ = _run(["simulate", "arcsin", "-m", m, "-N", "20000", "--seed", "4"], capsys)
    a.pop("timing_ms"), b.pop("timing_ms")
    assert a == b


def test_simulate_unsupported_recipe(tmp_path, capsys):
    m = _write(tmp_path, "C.json", [[1, 0.3], [0.3, 1]])
    assert run(["simulate", "unit_diag_lift", "-m", m, "-N", "1000"]) == 3


def test_hafnian(tmp_path, capsys):
    m = _write(tmp_path, "S.json", np.ones((4, 4)).tolist())
    code, rep, _ = _run(["hafnian", "-m", m], capsys)
    assert code == 0 and rep["value"] == 3


def test_module_entry_point(tmp_path):
    m = _write(tmp_path, "off.json", [[0, 1], [1, 0]])
    proc = subprocess.run([sys.executable, "-m", "covgap", "gap", "-m", m, "-E", "{-1,1}"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == -2
