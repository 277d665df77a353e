"""Trace checkers: positive runs, phase partitions, and negative controls."""

import json
import pathlib

import pytest

from tsforge import verify
from tsforge.simulator import ExecState, Workload, run_to_completion
from tsforge.traces import Trace, TraceBuilder

FORGED = pathlib.Path(__file__).parent / "data" / "forged"


def sequential_trace(algo, n):
    w = Workload(algo=algo, n=n)
    state = ExecState(w)
    builder = TraceBuilder(algo, n, w.M, w.m)
    for pid in range(1, n + 1):
        while state.can_run(pid):
            state.advance(pid, builder)
    return builder.finish(state.stats())


def load_forged(name):
    return Trace.from_json((FORGED / name).read_text())


def test_all_checkers_pass_on_good_traces():
    for algo, n in (("phase", 1), ("phase", 4), ("phase", 7), ("simple", 4)):
        trace = sequential_trace(algo, n)
        for name, verdict in verify.run_all(trace).items():
            assert verdict.ok, (algo, n, name, verdict.violations)
    for seed in range(5):
        trace = run_to_completion(Workload(algo="phase", n=5, seed=seed),
                                  policy="random")
        for name, verdict in verify.run_all(trace).items():
            assert verdict.ok, (seed, name, verdict.violations)


def test_ordering_vacuous_on_single_call():
    assert verify.check_ordering(sequential_trace("phase", 1)).ok


def test_happens_before_matches_intervals():
    trace = sequential_trace("phase", 3)
    hb = verify.HappensBefore(trace)
    assert hb.before("p1.1", "p2.1")
    assert hb.before("p1.1", "p3.1")
    assert not hb.before("p2.1", "p1.1")
    pairs = [(a.call, b.call) for a, b in hb.ordered_pairs()]
    assert ("p1.1", "p3.1") in pairs and ("p3.1", "p1.1") not in pairs


def test_compute_phases_sequential_counts():
    # one call: phases 0 and 1
    part = verify.compute_phases(sequential_trace("phase", 1))
    assert part.top_phase == 1
    assert part.completed_phases == 0
    # seven calls: rounds 1..4 all start, so phases 0..4
    part = verify.compute_phases(sequential_trace("phase", 7))
    assert part.top_phase == 4
    assert part.completed_phases == 3
    assert part.starts[0] == 0
    assert part.starts == sorted(part.starts)


def test_compute_phases_no_scans_is_single_phase():
    trace = Trace(algo="phase", n=1, M=1, m=2)
    part = verify.compute_phases(trace)
    assert part.top_phase == 0
    assert part.completed_phases == 0


def test_compute_phases_rejects_simple_traces():
    with pytest.raises(ValueError):
        verify.compute_phases(sequential_trace("simple", 2))


def test_phase_partition_is_stable_under_reserialization():
    trace = run_to_completion(Workload(algo="phase", n=6, seed=1),
                              policy="random")
    part1 = verify.compute_phases(trace)
    part2 = verify.compute_phases(Trace.from_json(trace.to_json()))
    assert part1.starts == part2.starts


def test_phase_of_respects_segments():
    trace = sequential_trace("phase", 7)
    part = verify.compute_phases(trace)
    for phase in range(part.top_phase + 1):
        start, end = part.segment(phase)
        assert part.phase_of(start) == phase
        assert part.phase_of(end) == phase


def test_verdict_serialization():
    verdict = verify.check_ordering(load_forged("ordering_swapped.json"))
    doc = json.loads(verdict.to_json())
    assert doc["checker"] == "ordering"
    assert doc["pass"] is False
    assert doc["violations"][0]["kind"] == "ordering"
    assert "detail" in doc["violations"][0]


NEGATIVE_CONTROLS = [
    ("ordering_swapped.json", verify.check_ordering),
    ("register_bottom_write.json", verify.check_register_claims),
    ("register_duplicate_last.json", verify.check_register_claims),
    ("register_bottom_round.json", verify.check_register_claims),
    ("register_prefix_gap.json", verify.check_register_claims),
    ("accounting_extra_invalidation.json",
     verify.check_invalidation_accounting),
    ("space_register_overrun.json", verify.check_space),
    ("wait_freedom_extra_collects.json", verify.check_wait_freedom),
    ("simple_bad_value.json", verify.check_simple_algorithm),
]


@pytest.mark.parametrize("name,checker", NEGATIVE_CONTROLS,
                         ids=[n for n, _ in NEGATIVE_CONTROLS])
def test_forged_trace_is_rejected(name, checker):
    assert not checker(load_forged(name)).ok


def test_every_checker_has_a_negative_control():
    covered = {checker for _, checker in NEGATIVE_CONTROLS}
    assert covered == {verify.check_ordering, verify.check_register_claims,
                       verify.check_invalidation_accounting,
                       verify.check_space, verify.check_wait_freedom,
                       verify.check_simple_algorithm}


def test_checkers_guard_algorithm_preconditions():
    simple = sequential_trace("simple", 2)
    assert not verify.check_register_claims(simple).ok
    assert not verify.check_space(simple).ok
    phase = sequential_trace("phase", 2)
    assert not verify.check_simple_algorithm(phase).ok
