"""CLI subcommands, exit codes, and output determinism."""

import json

import pytest

from tsforge.cli import main
from tsforge.simulator import ExecState, Workload


def sequential_schedule(n, algo="phase"):
    w = Workload(algo=algo, n=n)
    schedule = []
    state = ExecState(w)
    for pid in range(1, n + 1):
        while state.can_run(pid):
            state.advance(pid)
            schedule.append(pid)
    return ",".join(map(str, schedule))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_run_sequential_phase(capsys):
    code, out = run_cli(capsys, "run", "--algo", "phase", "--n", "7",
                        "--schedule", sequential_schedule(7), "--no-meta")
    assert code == 0
    doc = json.loads(out)
    assert [c["ts"] for c in doc["calls"]] == \
        ["(1,0)", "(2,0)", "(2,1)", "(3,0)", "(3,1)", "(3,2)", "(4,0)"]
    assert all(doc["stats"]["verdicts"].values())


def test_run_simple_policy(capsys):
    code, out = run_cli(capsys, "run", "--algo", "simple", "--n", "2",
                        "--policy", "round-robin", "--seed", "1", "--no-meta")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["calls"]) == 2
    assert all(c["ts"] is not None for c in doc["calls"])


def test_run_rejects_zero_processes():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--algo", "phase", "--n", "0"])
    assert exc.value.code == 2


def test_run_budget_exit_code(capsys):
    code, _ = run_cli(capsys, "run", "--algo", "phase", "--n", "2",
                      "--budget", "1", "--no-meta")
    assert code == 3


def test_explore_clean_graph(capsys):
    code, out = run_cli(capsys, "explore", "--algo", "phase", "--n", "2",
                        "--mode", "dedup-graph", "--no-meta")
    assert code == 0
    doc = json.loads(out)
    assert doc["violations"] == []
    assert doc["schema"] == "1"


def test_explore_budget_exit_code(capsys):
    code, out = run_cli(capsys, "explore", "--algo", "phase", "--n", "2",
                        "--budget", "1", "--no-meta")
    assert code == 3
    assert json.loads(out)["budget_exhausted"]


def test_explore_env_budget(capsys, monkeypatch):
    monkeypatch.setenv("TSFORGE_BUDGET", "2")
    code, out = run_cli(capsys, "explore", "--algo", "phase", "--n", "2",
                        "--no-meta")
    assert code == 3
    assert json.loads(out)["budget_exhausted"]


def test_stress_csv_shape_and_determinism(capsys):
    args = ["stress", "--algo", "phase", "--n", "8", "--runs", "20",
            "--seed", "7", "--no-meta"]
    code1, out1 = run_cli(capsys, *args)
    code2, out2 = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    lines = out1.strip().splitlines()
    header = lines[0].split(",")
    assert header[:7] == ["run", "seed", "steps", "max_reg_accessed",
                          "max_reg_written", "phases", "invalidation_writes"]
    assert len(lines) == 21
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[7] == "pass"
        assert int(cells[3]) <= 6  # ceil(2*sqrt(8))


def test_stress_zero_runs(capsys):
    code, out = run_cli(capsys, "stress", "--algo", "phase", "--n", "4",
                        "--runs", "0", "--no-meta")
    assert code == 0
    assert out.strip().splitlines() == [
        "run,seed,steps,max_reg_accessed,max_reg_written,phases,"
        "invalidation_writes,verdict,detail"]


def test_stress_python_fallback_policies(capsys):
    code, out = run_cli(capsys, "stress", "--algo", "phase", "--n", "3",
                        "--runs", "3", "--policy", "round-robin", "--no-meta")
    assert code == 0
    assert all(line.split(",")[7] == "pass"
               for line in out.strip().splitlines()[1:])
    code, out = run_cli(capsys, "stress", "--algo", "simple", "--n", "4",
                        "--runs", "3", "--no-meta")
    assert code == 0


def test_cover_reports(capsys):
    code, out = run_cli(capsys, "cover", "--algo", "phase", "--n", "1",
                        "--no-meta")
    assert code == 0
    assert json.loads(out)["max_k"] == 1
    code, out = run_cli(capsys, "cover", "--algo", "phase", "--n", "2",
                        "--no-meta")
    assert json.loads(out)["max_k"] >= 2
    code, out = run_cli(capsys, "cover", "--algo", "phase", "--n", "2",
                        "--budget", "1", "--no-meta")
    assert code == 3
    assert json.loads(out)["max_k"] == 0


def test_meta_header_present_unless_suppressed(capsys):
    code, out = run_cli(capsys, "run", "--algo", "phase", "--n", "1")
    assert code == 0
    assert "meta" in json.loads(out)
    code, out = run_cli(capsys, "run", "--algo", "phase", "--n", "1",
                        "--no-meta")
    assert "meta" not in json.loads(out)
