"""Schedule execution, policies, budgets, and exhaustive exploration."""

import pytest

from tsforge import verify
from tsforge.simulator import (BudgetExceeded, ExecState, SimulationError,
                               Workload, explore, run_schedule,
                               run_to_completion)

from oracle import phase_sequence, simple_sequence


def sequential_schedule(workload):
    """Schedule that drives each process to completion in pid order."""
    schedule = []
    state = ExecState(workload)
    for pid in range(1, workload.n + 1):
        while state.can_run(pid):
            state.advance(pid)
            schedule.append(pid)
    return schedule


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_sequential_phase_matches_oracle(n):
    w = Workload(algo="phase", n=n)
    trace = run_schedule(w, sequential_schedule(w))
    got = [(c.ts.rnd, c.ts.turn) for c in trace.calls]
    assert got == phase_sequence(n, m=w.m)


def test_sequential_simple_matches_oracle():
    w = Workload(algo="simple", n=4)
    trace = run_schedule(w, sequential_schedule(w))
    assert [c.ts.value for c in trace.calls] == simple_sequence([1, 2, 3, 4], 4)


def test_run_schedule_strict_rejects_exhausted_entry():
    w = Workload(algo="phase", n=1)
    schedule = sequential_schedule(w)
    with pytest.raises(SimulationError):
        run_schedule(w, schedule + [1])
    trace = run_schedule(w, schedule + [1, 1, 1], strict=False)
    assert len(trace.steps) == len(schedule)


def test_run_schedule_rejects_unknown_pid():
    with pytest.raises(SimulationError):
        run_schedule(Workload(algo="phase", n=2), [3])


def test_workload_validation():
    with pytest.raises(ValueError):
        Workload(algo="nope", n=2)
    with pytest.raises(ValueError):
        Workload(algo="simple", n=2, calls_per_process=2)
    with pytest.raises(ValueError):
        Workload(algo="phase", n=0)
    assert Workload(algo="phase", n=7).m == 6
    assert Workload(algo="phase", n=8, calls_per_process=4).m == 12


@pytest.mark.parametrize("policy", ["round-robin", "random",
                                    "adversarial-longest-scan"])
def test_policies_complete_and_pass_checkers(policy):
    for n in (2, 4):
        trace = run_to_completion(Workload(algo="phase", n=n, seed=3),
                                  policy=policy)
        assert all(c.complete for c in trace.calls)
        assert len(trace.calls) == n
        for name, verdict in verify.run_all(trace).items():
            assert verdict.ok, (policy, n, name, verdict.violations)


def test_simple_random_run_is_ordered():
    trace = run_to_completion(Workload(algo="simple", n=2, seed=11),
                              policy="random")
    assert all(c.complete for c in trace.calls)
    assert verify.check_simple_algorithm(trace).ok


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        run_to_completion(Workload(algo="phase", n=2, step_budget=1))


def test_unknown_policy_rejected():
    with pytest.raises(ValueError):
        run_to_completion(Workload(algo="phase", n=2), policy="fifo")


def test_run_to_completion_is_deterministic():
    a = run_to_completion(Workload(algo="phase", n=3, seed=9), policy="random")
    b = run_to_completion(Workload(algo="phase", n=3, seed=9), policy="random")
    assert a.to_json() == b.to_json()


def test_trace_json_round_trip():
    from tsforge.traces import Trace
    trace = run_to_completion(Workload(algo="phase", n=3, seed=2),
                              policy="random")
    again = Trace.from_json(trace.to_json())
    assert again.to_json() == trace.to_json()
    assert [c.ts for c in again.calls] == [c.ts for c in trace.calls]


def test_explore_single_process_has_one_path():
    report = explore(Workload(algo="phase", n=1), mode="full-paths")
    assert report.paths == 1
    assert report.violations == []


def test_explore_full_paths_phase_two_processes():
    report = explore(Workload(algo="phase", n=2), mode="full-paths")
    assert report.violations == []
    assert not report.budget_exhausted
    assert report.paths > 1000


def test_explore_dedup_phase_two_processes():
    report = explore(Workload(algo="phase", n=2), mode="dedup-graph")
    assert report.violations == []
    assert not report.budget_exhausted
    assert report.nodes > 50


def test_explore_modes_agree_on_simple():
    full = explore(Workload(algo="simple", n=2), mode="full-paths")
    dedup = explore(Workload(algo="simple", n=2), mode="dedup-graph")
    assert full.violations == [] and dedup.violations == []
    assert full.paths == 6  # interleavings of two 2-step calls: C(4,2)


def test_explore_budget_flag():
    report = explore(Workload(algo="phase", n=2, node_budget=3),
                     mode="dedup-graph")
    assert report.budget_exhausted
    report = explore(Workload(algo="phase", n=2, path_budget=1),
                     mode="full-paths")
    assert report.budget_exhausted


def test_explore_rejects_unknown_mode():
    with pytest.raises(ValueError):
        explore(Workload(algo="phase", n=1), mode="dfs")


def test_execstate_copy_is_independent():
    w = Workload(algo="phase", n=2)
    a = ExecState(w)
    b = a.copy()
    a.advance(1)
    assert b.step_count == 0
    assert b.machines == [None, None]
    assert a.key() != b.key()


def test_invocation_is_first_executed_step():
    """A call's interval starts when it first runs, not when scheduled."""
    w = Workload(algo="phase", n=2)
    trace = run_schedule(w, sequential_schedule(w))
    first, second = trace.calls
    assert first.invoke == 0
    assert second.invoke == first.response + 1
