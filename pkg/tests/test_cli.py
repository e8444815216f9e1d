import json

import pytest

from cril.cli import main
from tests.conftest import program_path

SHARED = str(program_path("shared"))
RACY = str(program_path("airline_racy"))


def test_check_ok(capsys):
    assert main(["check", SHARED]) == 0
    out = capsys.readouterr().out
    assert "4 process blocks" in out and "ok" in out


def test_check_json(capsys):
    assert main(["check", SHARED, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["ok"] is True and data["violations"] == []


def test_check_rejects_bad_program(tmp_path, capsys):
    bad = tmp_path / "bad.cril"
    bad.write_text("begin main\nskip\n-> l\n")
    assert main(["check", str(bad)]) == 1


def test_check_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cril"
    bad.write_text("begin main\nx += x\nend main\n")
    with pytest.raises(SystemExit) as exc:
        main(["check", str(bad)])
    assert exc.value.code == 2


def test_run_golden_schedule_table(capsys):
    code = main(["run", SHARED, "--schedule", "e,e,1,2,3,1,e,e"])
    assert code == 0
    out = capsys.readouterr().out
    assert "final store: x=2, y=1, z=1" in out
    # the table ends with three steps at the final store
    assert out.count("|      2 |      1 |      1") == 3
    assert "b4 (1)" in out and "b2 (e)" in out


def test_run_backward_raw_divergence(capsys):
    code = main(
        [
            "run", SHARED, "--dir", "backward", "--raw", "--no-table",
            "--forward-schedule", "e,e,1,2,3,1,e,e",
            "--schedule", "e,e,2,3,1,1,e,e",
        ]
    )
    assert code == 0
    assert "x=0, y=-1, z=-1" in capsys.readouterr().out


def test_run_backward_controlled_returns_to_init(capsys):
    code = main(
        ["run", SHARED, "--dir", "backward", "--no-table",
         "--forward-schedule", "e,e,1,2,3,1,e,e", "--seed", "3"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "terminated" in out and "x=0, y=0, z=0" in out


def test_run_replay_and_trace_out(tmp_path, capsys):
    trace = tmp_path / "trace.json"
    assert main(["run", RACY, "--seed", "2", "--no-table", "--trace-out", str(trace)]) == 0
    out1 = capsys.readouterr().out
    assert "seats=-1" in out1
    assert main(["run", RACY, "--replay", str(trace), "--no-table"]) == 0
    out2 = capsys.readouterr().out
    assert "seats=-1" in out2


def test_run_rejects_ill_formed_program(tmp_path, capsys):
    bad = tmp_path / "bad.cril"
    bad.write_text("begin main\nskip\n-> dangling\n")
    assert main(["run", str(bad), "--no-table"]) == 1
    assert "not well-formed" in capsys.readouterr().err


def test_run_deadlock_exit_code(tmp_path, capsys):
    prog = tmp_path / "deadlock.cril"
    prog.write_text("begin main\nP x\nend main\n")
    assert main(["run", str(prog), "--no-table"]) == 3
    assert "blocked" in capsys.readouterr().out


def test_run_assert_failure_exit_code(tmp_path, capsys):
    prog = tmp_path / "assert.cril"
    prog.write_text("begin main\nassert x == 1\nend main\n")
    assert main(["run", str(prog), "--no-table"]) == 4


def test_explore_checks_and_report(tmp_path, capsys):
    report = tmp_path / "report.json"
    code = main(
        ["explore", SHARED, "--check", "sp,bti,wf,loop,cc,ire", "--json", str(report)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "49 states" in out and "SP: ok" in out
    data = json.loads(report.read_text())
    assert data["states"] == 49
    assert all(c["ok"] for c in data["checks"])


def test_dag_dot_output(capsys):
    assert main(["dag", SHARED, "--schedule", "e,e,1,2,3,1,e,e"]) == 0
    dot = capsys.readouterr().out
    assert dot.count("style=solid") == 4
    assert dot.count("style=dashed") == 2


def test_dag_json_out(tmp_path, capsys):
    out_file = tmp_path / "dag.json"
    assert main(["dag", SHARED, "--schedule", "e,e,1,2,3,1,e,e", "--json-out", str(out_file)]) == 0
    data = json.loads(out_file.read_text())
    assert len(data["nodes"]) == 9
    assert len(data["write_edges"]) == 4
    assert len(data["read_edges"]) == 2


def test_dag_run_to_termination(tmp_path, capsys):
    out_file = tmp_path / "dag.json"
    assert main(["dag", RACY, "--run", "--seed", "2", "--json-out", str(out_file)]) == 0
    data = json.loads(out_file.read_text())
    assert len(data["nodes"]) == 23  # 22 steps plus the root


def test_run_json_output(capsys):
    assert main(["run", SHARED, "--schedule", "e,e,1,2,3,1,e,e", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["outcome"] == "terminated"
    assert data["final_store"] == {"x": 2, "y": 1, "z": 1}
    assert len(data["trace"]) == 8
