from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from graft import structures as st
from graft.cli import main
from graft.terms import eval_term, parse_term

DATA = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def _restore_cap(monkeypatch):
    # --cap writes the environment; let monkeypatch undo it
    monkeypatch.setenv("GRAFT_CAP", "20")
    monkeypatch.chdir(DATA)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_golden(capsys):
    code, out, _ = run(capsys, "eval", "-f", "vr_term.sexp", "--sig", "VR")
    assert code == 0
    assert out == (DATA / "eval_vr.golden.json").read_text()
    d = json.loads(out)
    term = parse_term((DATA / "vr_term.sexp").read_text())
    assert st.from_json(d["value"]) == eval_term(term, "VR")


def test_moddecomp_golden(capsys):
    code, out, _ = run(capsys, "moddecomp", "-f", "p4.json")
    assert code == 0
    assert out == (DATA / "moddecomp_p4.golden.json").read_text()
    assert json.loads(out)["kind"] == "prime"


def test_sep_check_golden(capsys):
    code, out, _ = run(capsys, "scheme", "sep-check", "fus.json")
    assert code == 1
    assert out == (DATA / "sep_fus.golden.json").read_text()
    d = json.loads(out)
    assert d["preserves_separation"] is False
    assert not st.is_source_separated(st.fus(st.from_json(d["counterexample"]), "a", "b"))
    code, out, _ = run(capsys, "scheme", "sep-check", "fg.json")
    assert code == 0 and json.loads(out)["preserves_separation"] is True


def test_prime_verdicts(capsys):
    assert run(capsys, "prime", "-f", "p4.json")[0] == 0
    code, out, _ = run(capsys, "prime", "-f", "k3.json")
    assert code == 1 and json.loads(out) == {"prime": False}


def test_normalize_bool(capsys):
    code, out, _ = run(capsys, "normalize", "bool", "(or p1 (not p1))")
    assert code == 0 and json.loads(out)["normal_form"] == "true"
    code, out, _ = run(capsys, "--format", "text", "normalize", "bool", "(and p1 p1 p2)")
    assert code == 0 and out.strip() == "(and p1 p2)"


def test_scheme_apply(capsys):
    code, out, _ = run(capsys, "scheme", "apply", "fg.json", "-s", "ab.json")
    assert code == 0
    got = st.from_json(json.loads(out))
    assert st.isomorphic(got, st.srcfg(st.from_json(json.loads((DATA / "ab.json").read_text())), "b"))


def test_theory_oplus_agrees(capsys):
    code, out, _ = run(capsys, "theory", "oplus", "za.json", "zb.json", "--depth", "1")
    assert code == 0 and json.loads(out)["agrees_with_direct"] is True


def test_automaton_run(capsys):
    code, out, _ = run(capsys, "automaton", "run", "builtin:simplicity",
                       "-t", "(mfus a b (parallel (edge a b) (edge a b)))")
    assert code == 1 and list(json.loads(out)["accepts"].values()) == [False]
    code, _, _ = run(capsys, "automaton", "run", "builtin:simplicity", "-t", "(edge a b)")
    assert code == 0


def test_compile_fo_verdicts(capsys):
    code, out, _ = run(capsys, "automaton", "compile-fo", "--sentence", "(exists x (exists y (rel edge x y)))",
                       "--depth", "2", "-t", "(edge a b)", "-t", "(src a)")
    assert code == 1
    assert json.loads(out)["verdicts"] == {"(edge a b)": True, "(src a)": False}


@pytest.mark.parametrize("argv,code", [
    (["eval", "(frob)"], 2),
    (["prime", "-f", "bad.json"], 2),
    (["prime", "-f", "missing.json"], 2),
    (["bogus"], 2),
    ([], 2),
    (["cwd", "-f", "k3.json", "--cap", "2"], 3),
    (["expansions", "-f", "p4.json"], 0),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    if code in (2, 3):
        assert err


def test_error_messages(capsys):
    _, _, err = run(capsys, "prime", "-f", "bad.json")
    assert "bad.json: line 2" in err
    _, _, err = run(capsys, "cwd", "-f", "k3.json", "--cap", "2")
    assert "capacity exceeded" in err


def test_module_entry_point_is_byte_stable():
    cmd = [sys.executable, "-m", "graft", "moddecomp", "-f", "p4.json"]
    a = subprocess.run(cmd, cwd=DATA, capture_output=True, check=True)
    b = subprocess.run(cmd, cwd=DATA, capture_output=True, check=True)
    assert a.stdout == b.stdout == (DATA / "moddecomp_p4.golden.json").read_bytes()
