import json
import subprocess
import sys

import pytest

from conftest import CORPUS
from ebadt.cli import main
from ebadt.parser import parse_unit, pretty_print


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def drop_elapsed(doc):
    for rec in doc.get("results", []):
        rec["stats"].pop("elapsed", None)
    return doc


STACK = [CORPUS / "stack_abstract.ebm", CORPUS / "stack_concrete.ebm"]
CONCRETE_TRAIN = ["--with", CORPUS / "train_concrete.ebm"]


def test_instantiate_stack_text(capsys):
    code, out, _ = run(capsys, "instantiate", *STACK, "--set", "ELEMENT=1", "--int", "-1..2")
    assert code == 0
    assert "INST/axm0_7" in out and "7 obligations: 7 valid-within-bounds" in out


def test_instantiate_bug_exit_one_with_witness(capsys):
    code, out, _ = run(capsys, "instantiate", CORPUS / "stack_abstract.ebm", CORPUS / "stack_concrete_bug.ebm",
                       CORPUS / "stack.ebb", "--set", "ELEMENT=1", "--int", "-1..2")
    assert code == 1
    assert "counterexample" in out and "s = {} |-> 0" in out


def test_json_is_deterministic(capsys):
    args = ("instantiate", CORPUS / "stack_abstract.ebm", CORPUS / "stack_concrete_bug.ebm",
            "--set", "ELEMENT=2", "--int", "-1..2")
    code1, doc1 = run_json(capsys, *args)
    code2, doc2 = run_json(capsys, *args, "--jobs", "2")
    assert code1 == code2 == 1
    assert drop_elapsed(doc1) == drop_elapsed(doc2)
    assert doc1["summary"]["counterexample"] >= 1
    assert doc1["bounds"] == {"int": [-1, 2], "carriers": {"ELEMENT": 2}}


def test_named_atoms_in_witness(capsys):
    code, doc = run_json(capsys, "instantiate", CORPUS / "stack_abstract.ebm",
                         CORPUS / "stack_concrete_bug.ebm", "--set", "ELEMENT={x,y}", "--int", "-1..2")
    assert code == 1
    rec = next(r for r in doc["results"] if r["label"] == "INST/axm0_7")
    assert rec["witness"]["e"] == "x"


def test_only_filter(capsys):
    code, doc = run_json(capsys, "instantiate", *STACK, "--only", "INST/axm0_[12]", "--set", "ELEMENT=1",
                         "--int", "-1..2")
    assert code == 0
    assert [r["label"] for r in doc["results"]] == ["INST/axm0_1", "INST/axm0_2"]


def test_carrier_bound_to_non_type_exits_two(capsys, tmp_path):
    bad = tmp_path / "bad.ebb"
    bad.write_text((CORPUS / "stack.ebb").read_text().replace(
        "set STACK_TYPE := POW(INT ** ELEMENT) ** INT", "set STACK_TYPE := STACK"))
    code, out, err = run(capsys, "instantiate", *STACK, bad)
    assert code == 2
    assert "not-a-type-expression" in err and "STACK_TYPE" in err
    assert out == ""


def test_bad_int_option(capsys):
    code, _, err = run(capsys, "check-context", CORPUS / "stack_concrete.ebm", "--int", "5..1")
    assert code == 2 and "--int" in err
    code, _, err = run(capsys, "check-context", CORPUS / "stack_concrete.ebm", "--int", "abc")
    assert code == 2


def test_bad_set_option(capsys):
    code, _, err = run(capsys, "check-context", CORPUS / "stack_concrete.ebm", "--set", "ELEMENT=0")
    assert code == 2


def test_malformed_file(capsys, tmp_path):
    f = tmp_path / "broken.ebm"
    f.write_text("context broken\nconstants c\naxioms\n  a1: c =\nend\n")
    code, _, err = run(capsys, "check-context", f)
    assert code == 2
    assert "syntax-error" in err and "broken.ebm:" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "fmt", tmp_path / "nope.ebm")
    assert code == 2


def test_false_theorem_exit_one(capsys, tmp_path):
    f = tmp_path / "thm.ebm"
    f.write_text("context thm\nconstants c\naxioms\n  d: c = 2\ntheorems\n  ok: c > 1\n  wrong: c > 2\nend\n")
    code, out, _ = run(capsys, "check-context", f)
    assert code == 1
    assert "THM/wrong" in out and "THM/ok" in out
    line = next(ln for ln in out.splitlines() if "THM/wrong" in ln)
    assert "counterexample" in line


def test_check_context_corpus(capsys):
    code, out, _ = run(capsys, "check-context", CORPUS / "stack_concrete.ebm", "--set", "ELEMENT=1",
                       "--int", "-1..2")
    assert code == 0 and "AXM/axm1_4" in out


def test_check_machine_bug(capsys):
    code, doc = run_json(capsys, "check-machine", CORPUS / "train_machine_bug.ebm", *CONCRETE_TRAIN,
                         "--set", "TRAIN_ID=2", "--int", "-2..3", "--only", "INV/enter/*")
    assert code == 1
    verdicts = {r["label"]: r["verdict"] for r in doc["results"]}
    assert verdicts["INV/enter/collision_free"] == "counterexample"


def test_explore_json(capsys):
    code, doc = run_json(capsys, "explore", CORPUS / "train_machine.ebm", *CONCRETE_TRAIN,
                         "--set", "TRAIN_ID=2", "--depth", "3")
    assert code == 0
    assert doc["violations"] == [] and doc["depth_reached"] == 3 and doc["frontier_exhausted"]


def test_explore_state_limit_env(capsys, monkeypatch):
    monkeypatch.setenv("EBADT_STATE_LIMIT", "3")
    code, out, _ = run(capsys, "explore", CORPUS / "train_machine.ebm", *CONCRETE_TRAIN, "--set", "TRAIN_ID=2")
    assert code == 0 and "state limit 3 reached" in out


def test_fmt_round_trips(capsys):
    for name in ("train_concrete.ebm", "train_machine.ebm", "stack.ebb"):
        code, out, _ = run(capsys, "fmt", CORPUS / name)
        assert code == 0
        code, again, _ = run(capsys, "fmt", CORPUS / name)
        assert again == out
    code, out, _ = run(capsys, "fmt", CORPUS / "stack_abstract.ebm")
    assert out == pretty_print(parse_unit((CORPUS / "stack_abstract.ebm").read_text()))


def test_abstract_machine_without_concrete_context(capsys):
    code, _, err = run(capsys, "explore", CORPUS / "train_machine.ebm")
    assert code == 2 and "not-definitional" in err


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        main(["explore", str(CORPUS / "train_machine.ebm"), "--depth", "-1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ebadt", "check-context", str(CORPUS / "stack_concrete.ebm"),
                           "--set", "ELEMENT=1", "--int", "-1..2"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "valid-within-bounds" in proc.stdout
