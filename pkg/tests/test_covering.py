"""Covering predicates and the max-covering configuration search."""

import random

import pytest

from tsforge.covering import (block_write, covers, is_3k_configuration,
                              is_full, is_l_constrained, ordered_signature,
                              quiescent, replay, search_max_covering,
                              signature)
from tsforge.machines import Write
from tsforge.simulator import ExecState, Workload


def drive_to_cover(state, pid):
    """Advance one process until its next access is a write."""
    while covers(state, pid) is None:
        state.advance(pid)
    return state


def test_fresh_machine_does_not_cover():
    state = ExecState(Workload(algo="phase", n=2))
    assert covers(state, 1) is None
    assert signature(state) == (0, 0, 0)


def test_machine_before_round_write_covers_r1():
    state = ExecState(Workload(algo="phase", n=1))
    drive_to_cover(state, 1)
    assert covers(state, 1) == 1
    assert signature(state) == (1, 0)


def test_returned_machine_does_not_cover():
    state = ExecState(Workload(algo="phase", n=1))
    while state.can_run(1):
        state.advance(1)
    assert covers(state, 1) is None


def test_signature_counts_covering_processes():
    state = ExecState(Workload(algo="simple", n=4))
    drive_to_cover(state, 1)
    drive_to_cover(state, 2)
    assert signature(state) == (2, 0)
    assert ordered_signature(state) == (2, 0)


def test_ordered_signature_sorts():
    assert ordered_signature((0, 2, 1)) == (2, 1, 0)


def test_3k_configuration_predicate():
    assert is_3k_configuration((0, 0), 0)
    assert is_3k_configuration((3, 1), 4)
    assert not is_3k_configuration((4, 0), 4)
    assert not is_3k_configuration((2, 1), 4)


def test_l_constrained_predicate():
    assert is_l_constrained((2, 1, 0), 3)
    assert not is_l_constrained((3, 0, 0), 3)


def test_is_full_predicate():
    assert is_full((2, 2, 0), 2, 2)
    assert not is_full((2, 1, 0), 2, 2)
    assert is_full((1, 0, 0), 1, 1)


def test_quiescent_predicate():
    state = ExecState(Workload(algo="phase", n=1))
    assert quiescent(state)
    state.advance(1)
    assert not quiescent(state)
    while state.machines[0] is not None:
        state.advance(1)
    assert quiescent(state)


def test_block_write_order_and_errors():
    state = ExecState(Workload(algo="simple", n=4))
    drive_to_cover(state, 1)
    drive_to_cover(state, 2)  # both cover R[1]
    after = block_write(state, [2, 1])
    assert after.registers[0] == 1  # ascending order: p2 writes last
    # non-participants are untouched
    assert after.machines[2] == state.machines[2]
    assert block_write(state, []).registers == state.registers
    with pytest.raises(ValueError):
        block_write(state, [1, 3])


def test_search_solo_process_covers_one_register():
    report = search_max_covering(Workload(algo="phase", n=1))
    assert report.max_k == 1
    assert report.covered_registers == 1


def test_search_two_processes_reaches_k2_with_replayable_witness():
    workload = Workload(algo="phase", n=2)
    report = search_max_covering(workload)
    assert report.max_k >= 2
    state = replay(workload, report.witness_schedule)
    assert signature(state) == report.signature
    assert sum(report.signature) == report.max_k


def test_search_budget_one_reports_initial_configuration():
    report = search_max_covering(Workload(algo="phase", n=2), budget=1)
    assert report.max_k == 0
    assert report.budget_exhausted


def test_search_quiescent_filter_scores_nothing_covering():
    report = search_max_covering(Workload(algo="phase", n=1),
                                 quiescent_only=True)
    assert report.max_k == 0


def test_report_serialization():
    doc = search_max_covering(Workload(algo="phase", n=1)).to_doc()
    assert doc["schema"] == "1"
    assert set(doc) >= {"max_k", "witness_schedule", "signature",
                        "covered_registers", "nodes_visited"}


def test_signature_recount_on_random_configurations():
    """signature/ordered_signature agree with a brute-force recount."""
    rng = random.Random(42)
    for trial in range(100):
        n = rng.choice([1, 2, 3])
        workload = Workload(algo=rng.choice(["phase", "simple"]), n=n)
        state = ExecState(workload)
        for _ in range(rng.randrange(0, 25)):
            pids = state.enabled_pids()
            if not pids:
                break
            state.advance(rng.choice(pids))
        # brute-force recount straight from next_access
        counts = [0] * workload.m
        for pid in range(1, n + 1):
            mach = state.machines[pid - 1]
            if mach is None:
                continue
            acc = mach.next_access(state.registers)
            if isinstance(acc, Write):
                counts[acc.reg - 1] += 1
        assert signature(state) == tuple(counts)
        assert ordered_signature(state) == tuple(sorted(counts, reverse=True))
        assert is_3k_configuration(state, sum(counts)) == \
            (max(counts, default=0) <= 3)


def test_full_configurations_have_enough_covered_registers():
    """Any reachable configuration satisfying is_full(j, k) really has j
    registers with cover count >= k."""
    workload = Workload(algo="phase", n=3)
    rng = random.Random(7)
    for _ in range(200):
        state = ExecState(workload)
        for _ in range(rng.randrange(0, 40)):
            pids = state.enabled_pids()
            if not pids:
                break
            state.advance(rng.choice(pids))
        sig = signature(state)
        for j in range(1, 3):
            for k in range(1, 4):
                if is_full(sig, j, k):
                    assert sum(1 for c in sig if c >= k) >= j
