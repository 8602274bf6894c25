"""The scc command line: commands, formats, exit codes."""

import json
import pathlib
import shutil
import subprocess

from softcc import cli

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

CHOICE = (
    "semiring fuzzy;\n"
    "domain {a, b};\n"
    "var x;\n"
    "constraint low(x) { (a) = 0.2; (b) = 0.1; }\n"
    "constraint high(x) { (a) = 0.9; (b) = 0.8; }\n"
    "agent = ask(const(1)) -> tell(low(x)) -> stop"
    " + ask(const(1)) -> tell(high(x)) -> stop;\n"
)


def write(tmp_path, text, name="prog.scc"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- check ---------------------------------------------------------------


def test_check_ok(capsys):
    code, out, err = run_main(capsys, "check", str(FIXTURES / "fig1.scc"))
    assert code == 0
    assert out.strip() == "ok"
    assert err == ""


def test_check_duplicate_proc(capsys):
    code, out, err = run_main(capsys, "check", str(FIXTURES / "bad_dup_proc.scc"))
    assert code == 1
    assert "procedure defined twice" in err
    assert out == ""


def test_check_missing_file(capsys):
    code, out, err = run_main(capsys, "check", "no_such_file.scc")
    assert code == 1
    assert "no_such_file.scc" in err


def test_check_syntax_error_position(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\nagent = tell(;\n")
    code, out, err = run_main(capsys, "check", path)
    assert code == 1
    assert "line 4" in err


# -- solve ---------------------------------------------------------------


def test_solve_text_golden(capsys):
    code, out, err = run_main(capsys, "solve", str(FIXTURES / "fig1.scc"))
    assert code == 0
    assert out.strip() == "x: a=0.8 b=0 ; blevel=0.8"


def test_solve_json(capsys):
    code, out, err = run_main(
        capsys, "solve", str(FIXTURES / "fig1.scc"), "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"solution", "blevel"}
    assert doc["blevel"] == 0.8
    rows = {tuple(r["assignment"]): r["value"] for r in doc["solution"]["rows"]}
    assert rows[("a",)] == 0.8


def test_solve_needs_interest(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\nagent = stop;\n")
    code, out, err = run_main(capsys, "solve", path)
    assert code == 1
    assert "interest" in err


# -- run -----------------------------------------------------------------


def test_run_hang_exit_code(capsys):
    path = str(FIXTURES / "example5_cprime.scc")
    code, out, err = run_main(capsys, "run", path)
    assert code == 3
    assert "terminal: hang" in out
    code2, out2, _ = run_main(capsys, "run", path)
    assert (code2, out2) == (code, out)  # leftmost is deterministic


def test_run_success_json(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\nagent = tell(const(0.5)) -> stop;\n")
    code, out, err = run_main(capsys, "run", path, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["terminal"] == "success"
    assert doc["rule_trace"] == ["eventual-tell", "stop"]
    assert doc["steps"] == 2


def test_run_random_needs_seed(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code, out, err = run_main(capsys, "run", path, "--policy", "random")
    assert code == 1
    assert "requires --seed" in err
    code, out, err = run_main(capsys, "run", path, "--seed", "3")
    assert code == 1
    assert "only applies" in err


def test_run_random_seed_reproducible(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code1, out1, _ = run_main(capsys, "run", path, "--policy", "random", "--seed", "11")
    code2, out2, _ = run_main(capsys, "run", path, "--policy", "random", "--seed", "11")
    assert code1 == code2 == 0
    assert out1 == out2


def test_run_no_agent(capsys):
    code, out, err = run_main(capsys, "run", str(FIXTURES / "fig1.scc"))
    assert code == 1
    assert "no agent" in err


def test_run_step_limit_flag(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\n"
                           "agent = tell(const(0.9)) -> tell(const(0.8)) -> stop;\n")
    code, out, err = run_main(capsys, "run", path, "--max-steps", "2")
    assert code == 4
    assert "terminal: bound_exceeded" in out
    code, out, err = run_main(capsys, "run", path, "--max-steps", "10")
    assert code == 0


def test_step_limit_env(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\n"
                           "agent = tell(const(0.9)) -> tell(const(0.8)) -> stop;\n")
    monkeypatch.setenv("SCC_MAX_STEPS", "2")
    code, out, err = run_main(capsys, "run", path)
    assert code == 4
    # an explicit flag wins over the environment
    code, out, err = run_main(capsys, "run", path, "--max-steps", "50")
    assert code == 0


def test_bad_limits(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\nagent = stop;\n")
    code, out, err = run_main(capsys, "run", path, "--max-steps", "0")
    assert code == 1
    assert "positive" in err


# -- observe -------------------------------------------------------------


def test_observe_success(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code, out, err = run_main(capsys, "observe", path)
    assert code == 0
    assert "success_set: 2 store(s)" in out
    assert "fail=false" in out


def test_observe_hang_exit_code(capsys):
    code, out, err = run_main(
        capsys, "observe", str(FIXTURES / "example5_cprime.scc"), "--format", "json"
    )
    assert code == 3
    doc = json.loads(out)
    assert doc["hang"] is True
    assert doc["success_set"] == []
    assert doc["bb"] is None


def test_observe_fail_exit_code(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\n"
                           "agent = tell(const(0.2)) ->^0.5 stop;\n")
    code, out, err = run_main(capsys, "observe", path, "--format", "json")
    assert code == 2
    doc = json.loads(out)
    assert doc["fail"] is True and doc["fail_dk"] is True


def test_observe_filter(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code, out, err = run_main(capsys, "observe", path, "--filter", "best")
    assert code == 0
    assert "success_set: 1 store(s)" in out


# -- bb ------------------------------------------------------------------


def test_bb_json(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code, out, err = run_main(capsys, "bb", path, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert isinstance(doc["bb"]["iterations"], int)
    assert isinstance(doc["bb"]["runs_pruned"], int)
    assert doc["bb"]["iterations"] >= 1
    rows = {tuple(r["assignment"]): r["value"] for r in doc["dk_solution"]["rows"]}
    assert rows.get(("a",)) == 0.9


def test_bb_text(tmp_path, capsys):
    path = write(tmp_path, CHOICE)
    code, out, err = run_main(capsys, "bb", path)
    assert code == 0
    assert "bb: iterations=" in out
    assert "dk: " in out


def test_bb_dominated_choice_fixture(capsys):
    code, out, err = run_main(capsys, "bb", str(FIXTURES / "dominated_choice.scc"))
    assert code == 0
    assert "bb: iterations=1 runs_pruned=6" in out
    assert "(a,a)=0.7" in out


def test_bb_rejects_level_thresholds(tmp_path, capsys):
    path = write(tmp_path, "semiring fuzzy;\ndomain {a};\nvar x;\n"
                           "agent = tell(const(0.9)) ->^0.5 stop;\n")
    code, out, err = run_main(capsys, "bb", path)
    assert code == 1
    assert "level threshold" in err


# -- usage ---------------------------------------------------------------


def test_usage_errors(capsys):
    assert cli.main(["frobnicate", "x.scc"]) == 1
    capsys.readouterr()
    assert cli.main([]) == 1
    capsys.readouterr()
    assert cli.main(["observe"]) == 1
    capsys.readouterr()


def test_installed_entry_point():
    exe = shutil.which("scc")
    assert exe, "scc entry point is not on PATH"
    got = subprocess.run(
        [exe, "solve", str(FIXTURES / "fig1.scc")],
        capture_output=True,
        text=True,
    )
    assert got.returncode == 0
    assert got.stdout.strip() == "x: a=0.8 b=0 ; blevel=0.8"
