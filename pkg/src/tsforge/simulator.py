"""Deterministic execution of machine sets under explicit schedules.

One execution is strictly sequential: a schedule names, step by step, which
process advances.  A process's (k+1)-th call is auto-initiated at its first
scheduled step after its k-th call returned; a call's invocation point is its
first executed step.

``explore`` enumerates scheduler nondeterminism, either as a depth-first walk
over all maximal interleavings (full-paths) or as a breadth-first search over
deduplicated configurations (dedup-graph).  The dedup key folds in the
path-dependent bits the checkers need: happens-before predecessors, returned
timestamps, and relative phase-accounting state.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .core import (BOT, GetTsId, compare, registers_for_phase,
                   registers_for_simple, simple_compare)
from .machines import (SCAN, ModelViolation, PhaseMachine, Write,
                       init_phase, init_simple)
from .traces import Trace, TraceBuilder

POLICIES = ("round-robin", "random", "adversarial-longest-scan")
DEFAULT_NODE_BUDGET = 10**7
DEFAULT_PATH_BUDGET = 10**7


class SimulationError(Exception):
    pass


class BudgetExceeded(SimulationError):
    """Step budget ran out; in a wait-free algorithm this is itself a bug."""


@dataclass
class Workload:
    algo: str  # "phase" | "simple"
    n: int
    calls_per_process: int = 1
    m: Optional[int] = None
    seed: int = 0
    step_budget: Optional[int] = None
    node_budget: int = DEFAULT_NODE_BUDGET
    path_budget: int = DEFAULT_PATH_BUDGET

    def __post_init__(self):
        if self.algo not in ("phase", "simple"):
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.n < 1:
            raise ValueError("need at least one process")
        if self.calls_per_process < 1:
            raise ValueError("calls_per_process must be positive")
        if self.algo == "simple" and self.calls_per_process != 1:
            raise ValueError("the summing algorithm is one-shot: "
                             "calls_per_process must be 1")
        if self.m is None:
            self.m = (registers_for_phase(self.M) if self.algo == "phase"
                      else registers_for_simple(self.n))

    @property
    def M(self) -> int:
        return self.n * self.calls_per_process

    def default_step_budget(self) -> int:
        if self.step_budget is not None:
            return self.step_budget
        write_bound = self.M * (self.m - 1) if self.algo == "phase" else self.M
        return 10 * self.M * self.m * max(write_bound, 1)


class PhaseAccountant:
    """Online phase bookkeeping for graph exploration.

    Tracks the current phase, the ordered list of register writes attributed
    to it, and per-closed-phase write counts.  Phase boundaries are processed
    when a scan completes; the boundary is placed at the scan's linearization
    point, located by counting writes since the end of the scan's penultimate
    collect.  When a completing scan's linearization point falls before the
    recorded start of the phase it would begin (which requires reattributing
    writes across an already-closed boundary), the state is flagged ambiguous
    and the path is left to the exact post-hoc trace checker.
    """

    __slots__ = ("phase", "cur_writes", "closed_counts", "closed_inval",
                 "total_writes", "markers", "ambiguous")

    def __init__(self, nprocs: int):
        self.phase = 0
        self.cur_writes: tuple = ()
        self.closed_counts: tuple = ()  # writes attributed to each closed phase
        self.closed_inval = 0
        self.total_writes = 0
        self.markers = [0] * nprocs  # write count at last collect end, per pid
        self.ambiguous = False

    def copy(self) -> "PhaseAccountant":
        acc = PhaseAccountant.__new__(PhaseAccountant)
        acc.phase = self.phase
        acc.cur_writes = self.cur_writes
        acc.closed_counts = self.closed_counts
        acc.closed_inval = self.closed_inval
        acc.total_writes = self.total_writes
        acc.markers = list(self.markers)
        acc.ambiguous = self.ambiguous
        return acc

    def key(self):
        rel = tuple(self.total_writes - mk for mk in self.markers)
        return (self.phase, self.cur_writes, self.closed_counts,
                self.closed_inval, rel, self.ambiguous)

    def total_invalidations(self) -> int:
        return self.closed_inval + len(set(self.cur_writes))

    def on_write(self, reg: int) -> Optional[str]:
        self.total_writes += 1
        self.cur_writes = self.cur_writes + (reg,)
        if reg > self.phase and not self.ambiguous:
            return (f"write to R[{reg}] during phase {self.phase} "
                    f"(allowed: R[1..{self.phase}])")
        return None

    def on_collect_end(self, pid: int):
        self.markers[pid - 1] = self.total_writes

    def on_scan_start(self, pid: int):
        self.markers[pid - 1] = self.total_writes

    def on_scan_success(self, pid: int, myrnd: int) -> Optional[str]:
        lin_marker = self.markers[pid - 1]
        if myrnd > self.phase:
            return (f"scan with round {myrnd} completed while only phase "
                    f"{self.phase} has started")
        if myrnd < self.phase:
            # A late starter of an already-started phase; only relevant if its
            # linearization point precedes the boundary we already committed.
            start_of_next = sum(self.closed_counts[:myrnd + 1])
            if lin_marker < start_of_next:
                self.ambiguous = True
            return None
        suffix_len = self.total_writes - lin_marker
        if suffix_len > len(self.cur_writes):
            # Linearization point predates the current phase start.
            self.ambiguous = True
            suffix_len = len(self.cur_writes)
        cut = len(self.cur_writes) - suffix_len
        closed, carried = self.cur_writes[:cut], self.cur_writes[cut:]
        violation = None
        if not self.ambiguous:
            inval = len(set(closed))
            if inval != self.phase:
                violation = (f"completed phase {self.phase} has {inval} "
                             f"invalidation writes, expected {self.phase}")
        self.closed_inval += len(set(closed))
        self.closed_counts = self.closed_counts + (len(closed),)
        self.phase += 1
        self.cur_writes = carried
        return violation


@dataclass
class AdvanceResult:
    pid: int
    call: str
    effect: object
    line: int
    invoked: Optional[str] = None
    returned_ts: object = None
    hb_predecessors: tuple = ()  # (call, ts) pairs that happened before
    violations: List[str] = field(default_factory=list)


class ExecState:
    """Registers plus per-process machines and scheduler-side bookkeeping."""

    def __init__(self, workload: Workload, track_accounting: bool = False):
        self.w = workload
        self.registers = [BOT if workload.algo == "phase" else 0] * workload.m
        self.machines = [None] * workload.n
        self.calls_done = [0] * workload.n
        self.step_count = 0
        self.max_reg_accessed = 0
        self.max_reg_written = 0
        # happens-before bookkeeping
        self.done: tuple = ()  # ((call_text, ts), ...) in completion order
        self.preds = [None] * workload.n  # frozenset of call texts, per pid
        # wait-freedom bookkeeping
        self.interference = [0] * workload.n  # writes by others during my scan
        self.accountant = PhaseAccountant(workload.n) if track_accounting else None

    # -- structural ----------------------------------------------------------

    def copy(self) -> "ExecState":
        st = ExecState.__new__(ExecState)
        st.w = self.w
        st.registers = list(self.registers)
        st.machines = list(self.machines)
        st.calls_done = list(self.calls_done)
        st.step_count = self.step_count
        st.max_reg_accessed = self.max_reg_accessed
        st.max_reg_written = self.max_reg_written
        st.done = self.done
        st.preds = list(self.preds)
        st.interference = list(self.interference)
        st.accountant = self.accountant.copy() if self.accountant else None
        return st

    def key(self):
        return (tuple(self.registers),
                tuple(self.machines),
                tuple(self.calls_done),
                self.done,
                tuple(self.preds),
                tuple(self.interference),
                self.accountant.key() if self.accountant else None)

    # -- scheduling ----------------------------------------------------------

    def can_run(self, pid: int) -> bool:
        mach = self.machines[pid - 1]
        if mach is not None:
            return True
        return self.calls_done[pid - 1] < self.w.calls_per_process

    def enabled_pids(self) -> List[int]:
        return [pid for pid in range(1, self.w.n + 1) if self.can_run(pid)]

    def all_done(self) -> bool:
        return not self.enabled_pids()

    def quiescent(self) -> bool:
        """No call is in flight (initiated calls have all returned)."""
        return all(m is None for m in self.machines)

    def _fresh_machine(self, pid: int):
        seq = self.calls_done[pid - 1] + 1
        if self.w.algo == "phase":
            return init_phase(pid, seq, self.w.m)
        return init_simple(pid, self.w.n)

    def call_text(self, pid: int) -> str:
        mach = self.machines[pid - 1]
        if isinstance(mach, PhaseMachine):
            return mach.id.text()
        seq = self.calls_done[pid - 1] + 1
        return GetTsId(pid, seq).text()

    def advance(self, pid: int, builder: Optional[TraceBuilder] = None) -> AdvanceResult:
        if not self.can_run(pid):
            raise SimulationError(
                f"process {pid} has no enabled machine and no remaining calls")
        mach = self.machines[pid - 1]
        invoked = None
        if mach is None:
            mach = self._fresh_machine(pid)
            self.machines[pid - 1] = mach
            self.preds[pid - 1] = frozenset(c for c, _ in self.done)
            invoked = self.call_text(pid)
            if builder:
                builder.invoke(pid, invoked, len(builder.trace.steps))
        call = self.call_text(pid)
        was_scanning = getattr(mach, "pc", None) == SCAN

        out = mach.step(self.registers)
        effect = out.effect
        result = AdvanceResult(pid=pid, call=call, effect=effect, line=out.line,
                               invoked=invoked)

        self.max_reg_accessed = max(self.max_reg_accessed, effect.reg)
        if isinstance(effect, Write):
            if self.w.algo == "phase" and effect.reg in mach.written:
                result.violations.append(
                    f"{call} wrote R[{effect.reg}] twice")
            self.registers[effect.reg - 1] = effect.val
            self.max_reg_written = max(self.max_reg_written, effect.reg)
            for q in range(1, self.w.n + 1):
                other = self.machines[q - 1]
                if q != pid and other is not None and getattr(other, "pc", None) == SCAN:
                    self.interference[q - 1] += 1
            if self.accountant:
                v = self.accountant.on_write(effect.reg)
                if v:
                    result.violations.append(v)

        self.machines[pid - 1] = out.machine
        self.step_count += 1

        if builder:
            op = "write" if isinstance(effect, Write) else "read"
            idx = builder.record_step(pid, call, op, effect.reg, effect.val, out.line)
            if not was_scanning and getattr(out.machine, "pc", None) == SCAN:
                builder.scan_started(pid, call, out.machine.myrnd)
            if out.collect_started:
                builder.collect_started(pid, idx)
            if out.collect_ended:
                builder.collect_ended(pid, idx)
            if out.scan_ended:
                builder.scan_ended(pid)
        if self.accountant:
            if not was_scanning and getattr(out.machine, "pc", None) == SCAN:
                self.accountant.on_scan_start(pid)
            if out.scan_ended:
                v = self.accountant.on_scan_success(pid, out.machine.myrnd)
                if v:
                    result.violations.append(v)
            elif out.collect_ended:
                self.accountant.on_collect_end(pid)

        if not was_scanning and getattr(out.machine, "pc", None) == SCAN:
            self.interference[pid - 1] = 0

        if out.timestamp is not None:
            preds = self.preds[pid - 1]
            result.returned_ts = out.timestamp
            result.hb_predecessors = tuple(
                (c, ts) for c, ts in self.done if c in preds)
            self.done = self.done + ((call, out.timestamp),)
            self.machines[pid - 1] = None
            self.preds[pid - 1] = None
            self.calls_done[pid - 1] += 1
            if builder:
                builder.returned(pid, len(builder.trace.steps) - 1, out.timestamp)
        return result

    def stats(self) -> dict:
        return {
            "steps": self.step_count,
            "max_reg_accessed": self.max_reg_accessed,
            "max_reg_written": self.max_reg_written,
            "calls_completed": sum(self.calls_done),
        }


# ---------------------------------------------------------------------------
# Single executions
# ---------------------------------------------------------------------------

def run_schedule(workload: Workload, schedule: Sequence[int],
                 strict: bool = True) -> Trace:
    """Advance machines per the schedule and return the recorded trace.

    In strict mode an entry naming a process with nothing left to do is an
    error; in lenient mode such entries are skipped.
    """
    state = ExecState(workload)
    builder = TraceBuilder(workload.algo, workload.n, workload.M, workload.m)
    for pid in schedule:
        if not 1 <= pid <= workload.n:
            raise SimulationError(f"schedule names unknown process {pid}")
        if not state.can_run(pid):
            if strict:
                raise SimulationError(
                    f"schedule entry {pid} at step {state.step_count}: "
                    "calls exhausted")
            continue
        state.advance(pid, builder)
    return builder.finish(state.stats())


def _pick_round_robin(state: ExecState, cursor: List[int], rng) -> int:
    n = state.w.n
    for _ in range(n):
        pid = cursor[0] % n + 1
        cursor[0] += 1
        if state.can_run(pid):
            return pid
    raise SimulationError("no enabled process")


def _pick_random(state: ExecState, cursor, rng: random.Random) -> int:
    return rng.choice(state.enabled_pids())


def _pick_adversarial(state: ExecState, cursor, rng) -> int:
    """Prolong scans: feed pending writers while somebody is mid-collect."""
    enabled = state.enabled_pids()
    scanning = [p for p in enabled
                if getattr(state.machines[p - 1], "pc", None) == SCAN]
    if scanning:
        others = [p for p in enabled if p not in scanning]
        writers = [p for p in others
                   if state.machines[p - 1] is not None
                   and isinstance(state.machines[p - 1].next_access(), Write)]
        if writers:
            return writers[0]
        if others:
            return others[0]
        # only scanners left: push the longest-running scan
        return max(scanning, key=lambda p: state.machines[p - 1].collects)
    return _pick_round_robin(state, cursor, rng)


_POLICY_FN = {
    "round-robin": _pick_round_robin,
    "random": _pick_random,
    "adversarial-longest-scan": _pick_adversarial,
}


def run_to_completion(workload: Workload, policy: str = "round-robin",
                      seed: Optional[int] = None) -> Trace:
    """Schedule enabled machines under the policy until all calls return."""
    if policy not in _POLICY_FN:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    rng = random.Random(workload.seed if seed is None else seed)
    pick = _POLICY_FN[policy]
    budget = workload.default_step_budget()
    state = ExecState(workload)
    builder = TraceBuilder(workload.algo, workload.n, workload.M, workload.m)
    cursor = [0]
    schedule = []
    while not state.all_done():
        if state.step_count >= budget:
            raise BudgetExceeded(
                f"step budget {budget} exhausted with "
                f"{sum(state.calls_done)}/{workload.M} calls complete")
        pid = pick(state, cursor, rng)
        schedule.append(pid)
        state.advance(pid, builder)
    stats = state.stats()
    stats["policy"] = policy
    trace = builder.finish(stats)
    trace.stats["schedule_len"] = len(schedule)
    return trace


# ---------------------------------------------------------------------------
# Exhaustive exploration
# ---------------------------------------------------------------------------

@dataclass
class Violation:
    kind: str
    detail: str
    witness_schedule: List[int]

    def to_doc(self) -> dict:
        return {"kind": self.kind, "detail": self.detail,
                "witness_schedule": self.witness_schedule}


@dataclass
class ExplorationReport:
    mode: str
    paths: int = 0
    nodes: int = 0
    violations: List[Violation] = field(default_factory=list)
    budget_exhausted: bool = False
    ambiguous_nodes: int = 0
    reconciled: int = 0  # accountant alarms dismissed by exact trace replay

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_doc(self) -> dict:
        return {
            "schema": "1",
            "mode": self.mode,
            "paths": self.paths,
            "nodes": self.nodes,
            "violations": [v.to_doc() for v in self.violations],
            "budget_exhausted": self.budget_exhausted,
            "ambiguous_nodes": self.ambiguous_nodes,
            "reconciled": self.reconciled,
        }


def _ordering_violation(result: AdvanceResult, algo: str) -> Optional[str]:
    ts_b = result.returned_ts
    less = compare if algo == "phase" else simple_compare
    for call_a, ts_a in result.hb_predecessors:
        if not less(ts_a, ts_b) or less(ts_b, ts_a):
            return (f"{call_a} returned {ts_a} and happened before "
                    f"{result.call} which returned {ts_b}")
    return None


def _node_invariants(state: ExecState) -> List[str]:
    """Configuration-level claims, checked at every explored node."""
    out = []
    w = state.w
    if w.algo == "phase":
        regs = state.registers
        seen_bot = False
        for i, v in enumerate(regs):
            if v is BOT:
                seen_bot = True
            elif seen_bot:
                out.append(f"R[{i + 1}] is non-bottom below a bottom register")
                break
        if regs[w.m - 1] is not BOT:
            out.append(f"sentinel register R[{w.m}] was written")
        for call, ts in state.done:
            if regs[ts.rnd - 1] is BOT:
                out.append(f"{call} returned {ts} but R[{ts.rnd}] is bottom")
        for pid in range(1, w.n + 1):
            mach = state.machines[pid - 1]
            if mach is None:
                continue
            if mach.while_iters > w.m - 1:
                out.append(f"{mach.id.text()} ran {mach.while_iters} while-loop "
                           f"iterations (bound {w.m - 1})")
            if mach.for_iters > w.m - 2:
                out.append(f"{mach.id.text()} ran {mach.for_iters} for-loop "
                           f"iterations (bound {w.m - 2})")
            if len(mach.written) > w.m - 1:
                out.append(f"{mach.id.text()} wrote {len(mach.written)} registers")
            if mach.pc == SCAN and mach.collects > state.interference[pid - 1] + 2:
                out.append(f"{mach.id.text()} is on collect {mach.collects} with "
                           f"only {state.interference[pid - 1]} interfering writes")
        if state.accountant and not state.accountant.ambiguous:
            total = state.accountant.total_invalidations()
            if total > 2 * w.M:
                out.append(f"{total} invalidation writes exceed 2M = {2 * w.M}")
    else:
        for i, v in enumerate(state.registers):
            if v not in (0, 1, 2):
                out.append(f"R[{i + 1}] holds {v}, outside {{0,1,2}}")
    return out


def _edge_invariants(state_before_regs, result: AdvanceResult, algo: str) -> List[str]:
    out = []
    if isinstance(result.effect, Write):
        if algo == "phase" and result.effect.val is BOT:
            out.append(f"{result.call} wrote bottom to R[{result.effect.reg}]")
        if algo == "simple":
            old = state_before_regs[result.effect.reg - 1]
            if result.effect.val < old:
                out.append(f"{result.call} decreased R[{result.effect.reg}] "
                           f"from {old} to {result.effect.val}")
    if result.returned_ts is not None:
        v = _ordering_violation(result, algo)
        if v:
            out.append(v)
    return out


def _confirm_by_replay(workload: Workload, schedule: List[int]) -> bool:
    """Re-check a suspected phase-accounting violation with the exact,
    linearization-based trace checker.  Returns True if it is real."""
    from . import verify
    trace = run_schedule(workload, schedule)
    try:
        partition = verify.compute_phases(trace)
    except ValueError:
        return True
    verdict = verify.check_invalidation_accounting(trace, partition)
    return not verdict.ok


def explore(workload: Workload, mode: str = "dedup-graph",
            max_ambiguous_replays: int = 200) -> ExplorationReport:
    """Enumerate scheduler nondeterminism and check every claim en route.

    full-paths: depth-first over all maximal interleavings; every finished
    path is replayed through the post-hoc trace checkers.

    dedup-graph: breadth-first over distinct configurations with
    per-node/per-edge checks; phase-accounting alarms are confirmed against
    the exact trace checker before they are reported.
    """
    if mode == "full-paths":
        return _explore_full_paths(workload)
    if mode == "dedup-graph":
        return _explore_dedup(workload, max_ambiguous_replays)
    raise ValueError(f"unknown exploration mode {mode!r}")


def _run_trace_checkers(workload: Workload, schedule: List[int],
                        report: ExplorationReport):
    from . import verify
    trace = run_schedule(workload, schedule)
    for name, verdict in verify.run_all(trace).items():
        if not verdict.ok:
            for v in verdict.violations:
                report.violations.append(
                    Violation(kind=name, detail=v.detail,
                              witness_schedule=list(schedule)))


def _explore_full_paths(workload: Workload) -> ExplorationReport:
    report = ExplorationReport(mode="full-paths")
    budget = workload.path_budget
    root = ExecState(workload)
    stack = [(root, [])]
    while stack:
        state, schedule = stack.pop()
        pids = state.enabled_pids()
        if not pids:
            report.paths += 1
            _run_trace_checkers(workload, schedule, report)
            if report.paths >= budget:
                report.budget_exhausted = True
                break
            continue
        for pid in pids:
            child = state.copy()
            try:
                child.advance(pid)
            except ModelViolation as exc:
                report.violations.append(
                    Violation(kind="model", detail=str(exc),
                              witness_schedule=schedule + [pid]))
                continue
            stack.append((child, schedule + [pid]))
        report.nodes += 1
    return report


def _explore_dedup(workload: Workload,
                   max_ambiguous_replays: int) -> ExplorationReport:
    report = ExplorationReport(mode="dedup-graph")
    budget = workload.node_budget
    track = workload.algo == "phase"
    root = ExecState(workload, track_accounting=track)
    seen = {root.key(): 0}
    parents = [(-1, 0)]  # (parent node id, pid taken)
    queue = deque([(0, root)])
    ambiguous_replayed = 0

    def witness(node_id: int, extra: Optional[int] = None) -> List[int]:
        sched = []
        while node_id > 0:
            parent, pid = parents[node_id]
            sched.append(pid)
            node_id = parent
        sched.reverse()
        if extra is not None:
            sched.append(extra)
        return sched

    def note(kind, detail, sched):
        report.violations.append(
            Violation(kind=kind, detail=detail, witness_schedule=sched))

    while queue:
        node_id, state = queue.popleft()
        for pid in state.enabled_pids():
            child = state.copy()
            try:
                result = child.advance(pid)
            except ModelViolation as exc:
                note("model", str(exc), witness(node_id, pid))
                continue
            sched = None
            accounting_alarms = [v for v in result.violations
                                 if "phase" in v or "invalidation" in v]
            other_alarms = [v for v in result.violations
                            if v not in accounting_alarms]
            for v in other_alarms:
                sched = sched or witness(node_id, pid)
                note("edge", v, sched)
            for v in _edge_invariants(state.registers, result, workload.algo):
                sched = sched or witness(node_id, pid)
                note("ordering" if "returned" in v else "edge", v, sched)
            for v in accounting_alarms:
                sched = sched or witness(node_id, pid)
                if _confirm_by_replay(workload, sched):
                    note("invalidation-accounting", v, sched)
                else:
                    report.reconciled += 1
            k = child.key()
            if k in seen:
                continue
            child_id = len(parents)
            seen[k] = child_id
            parents.append((node_id, pid))
            for v in _node_invariants(child):
                sched = sched or witness(child_id)
                note("node", v, sched)
            if (track and child.accountant.ambiguous
                    and not state.accountant.ambiguous):
                report.ambiguous_nodes += 1
                if ambiguous_replayed < max_ambiguous_replays:
                    ambiguous_replayed += 1
                    sched = sched or witness(child_id)
                    if _confirm_by_replay(workload, sched):
                        note("invalidation-accounting",
                             "ambiguous boundary confirmed bad by replay", sched)
            if len(seen) >= budget:
                report.budget_exhausted = True
                queue.clear()
                break
            queue.append((child_id, child))
        report.nodes = len(seen)
    report.nodes = len(seen)
    return report
