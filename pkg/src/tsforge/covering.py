"""Covering vocabulary and a search for high-covering configurations.

A process covers a register when its next shared access is a write to it.
The predicates here evaluate cover-count signatures of simulator
configurations; ``search_max_covering`` walks the deduplicated configuration
graph looking for the largest k such that some reachable configuration has k
covering processes with at most 3 per register.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .machines import Write
from .simulator import ExecState, Workload


def covers(state: ExecState, pid: int) -> Optional[int]:
    """Register index the process is about to write, if any."""
    mach = state.machines[pid - 1]
    if mach is None:
        return None
    access = mach.next_access(state.registers)
    return access.reg if isinstance(access, Write) else None


def signature(state: ExecState) -> Tuple[int, ...]:
    """Per-register cover counts (c_1, ..., c_m)."""
    counts = [0] * state.w.m
    for pid in range(1, state.w.n + 1):
        reg = covers(state, pid)
        if reg is not None:
            counts[reg - 1] += 1
    return tuple(counts)


def ordered_signature(state_or_sig) -> Tuple[int, ...]:
    """Signature sorted non-increasing."""
    sig = (state_or_sig if isinstance(state_or_sig, tuple)
           else signature(state_or_sig))
    return tuple(sorted(sig, reverse=True))


def is_3k_configuration(state_or_sig, k: int) -> bool:
    """Exactly k covering processes, no register covered more than 3 times."""
    sig = (state_or_sig if isinstance(state_or_sig, tuple)
           else signature(state_or_sig))
    return sum(sig) == k and all(c <= 3 for c in sig)


def is_l_constrained(state_or_sig, l: int) -> bool:
    """The c-th largest cover count is at most l - c, for every component."""
    ordered = ordered_signature(state_or_sig if isinstance(state_or_sig, tuple)
                                else signature(state_or_sig))
    return all(s <= l - c for c, s in enumerate(ordered, start=1))


def is_full(state_or_sig, j: int, k: int) -> bool:
    """At least j registers are each covered by at least k processes."""
    sig = (state_or_sig if isinstance(state_or_sig, tuple)
           else signature(state_or_sig))
    return sum(1 for c in sig if c >= k) >= j


def quiescent(state: ExecState) -> bool:
    """No call is in flight."""
    return state.quiescent()


def block_write(state: ExecState, pids: Sequence[int]) -> ExecState:
    """One covering write per listed process, in ascending process order.

    Returns a new configuration; the input is not modified.  Raises
    ValueError if a listed process does not cover a register.
    """
    for pid in pids:
        if covers(state, pid) is None:
            raise ValueError(f"process {pid} does not cover any register")
    out = state.copy()
    for pid in sorted(pids):
        out.advance(pid)
    return out


@dataclass
class CoveringReport:
    max_k: int = 0
    witness_schedule: List[int] = field(default_factory=list)
    signature: Tuple[int, ...] = ()
    covered_registers: int = 0
    nodes_visited: int = 0
    budget_exhausted: bool = False

    def to_doc(self) -> dict:
        return {
            "schema": "1",
            "max_k": self.max_k,
            "witness_schedule": list(self.witness_schedule),
            "signature": list(self.signature),
            "covered_registers": self.covered_registers,
            "nodes_visited": self.nodes_visited,
            "budget_exhausted": self.budget_exhausted,
        }


def search_max_covering(workload: Workload, budget: Optional[int] = None,
                        quiescent_only: bool = False) -> CoveringReport:
    """Find the largest k with a reachable configuration where k processes
    cover registers, at most 3 per register.

    Breadth-first over deduplicated configurations; the witness schedule
    replays from the initial configuration to the best one found.  With
    ``quiescent_only`` set, only configurations with no call in flight are
    scored (covering then requires fresh, not-yet-stepped calls, so counts
    drop to zero; the flag exists as a search filter, mainly for tests).
    """
    budget = workload.node_budget if budget is None else budget
    root = ExecState(workload)
    report = CoveringReport()

    def score(state: ExecState, node_id: int, parents):
        if quiescent_only and not state.quiescent():
            return
        sig = signature(state)
        k = sum(sig)
        if all(c <= 3 for c in sig) and k > report.max_k:
            sched = []
            while node_id > 0:
                parent, pid = parents[node_id]
                sched.append(pid)
                node_id = parent
            sched.reverse()
            report.max_k = k
            report.witness_schedule = sched
            report.signature = sig
            report.covered_registers = sum(1 for c in sig if c > 0)

    seen = {root.key(): 0}
    parents = [(-1, 0)]
    queue = deque([(0, root)])
    score(root, 0, parents)
    while queue:
        node_id, state = queue.popleft()
        for pid in state.enabled_pids():
            child = state.copy()
            child.advance(pid)
            k = child.key()
            if k in seen:
                continue
            child_id = len(parents)
            seen[k] = child_id
            parents.append((node_id, pid))
            score(child, child_id, parents)
            if len(seen) >= budget:
                report.budget_exhausted = True
                queue.clear()
                break
            queue.append((child_id, child))
    report.nodes_visited = len(seen)
    return report


def replay(workload: Workload, schedule: Sequence[int]) -> ExecState:
    """Drive a fresh configuration through the schedule and return it."""
    state = ExecState(workload)
    for pid in schedule:
        state.advance(pid)
    return state
