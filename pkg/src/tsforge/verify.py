"""Post-hoc trace checkers.

Every checker is a pure function of a trace (plus, for the accounting
checker, a phase partition derived from the same trace) and returns a
Verdict.  Checkers never mutate the trace and can be applied in any order.

Verdict JSON: {"checker": ..., "pass": bool,
               "violations": [{"kind", "step", "detail"}, ...]}
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .core import BOT, compare, registers_for_phase, simple_compare
from .traces import Trace


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    step: Optional[int] = None

    def to_doc(self) -> dict:
        return {"kind": self.kind, "step": self.step, "detail": self.detail}


@dataclass
class Verdict:
    checker: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str, step: Optional[int] = None):
        self.violations.append(Violation(kind=kind, detail=detail, step=step))

    def to_doc(self) -> dict:
        return {"checker": self.checker, "pass": self.ok,
                "violations": [v.to_doc() for v in self.violations]}

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), ensure_ascii=False)


class HappensBefore:
    """Precedence over completed calls: a -> b iff response(a) < invoke(b)."""

    def __init__(self, trace: Trace):
        self._calls = [c for c in trace.calls if c.complete]

    def before(self, a: str, b: str) -> bool:
        ca = next(c for c in self._calls if c.call == a)
        cb = next(c for c in self._calls if c.call == b)
        return ca.response < cb.invoke

    def ordered_pairs(self):
        """Yield (earlier, later) CallRecord pairs with earlier -> later."""
        by_response = sorted(self._calls, key=lambda c: c.response)
        for i, a in enumerate(by_response):
            for b in self._calls:
                if a is not b and a.response < b.invoke:
                    yield a, b


def check_ordering(trace: Trace) -> Verdict:
    """Timestamps must agree with precedence: if a returned before b was
    invoked, a's timestamp compares strictly below b's."""
    verdict = Verdict("ordering")
    less = compare if trace.algo == "phase" else simple_compare
    hb = HappensBefore(trace)
    for a, b in hb.ordered_pairs():
        if not less(a.ts, b.ts) or less(b.ts, a.ts):
            verdict.add(
                "ordering",
                f"{a.call} returned {a.ts.text()} before {b.call} was invoked, "
                f"but {b.call} returned {b.ts.text()}",
                step=b.response)
    return verdict


def _replay_writes(trace: Trace):
    """Yield (step, registers-after) for each step, applying writes."""
    regs = [BOT if trace.algo == "phase" else 0] * trace.m
    for s in trace.steps:
        if s.op == "write":
            if not 1 <= s.reg <= trace.m:
                raise ValueError(f"step {s.i} writes register {s.reg} "
                                 f"outside 1..{trace.m}")
            regs[s.reg - 1] = s.val
        yield s, regs


def check_register_claims(trace: Trace) -> Verdict:
    """Register-content invariants of the phase algorithm.

    (a) registers never return to bottom; (b) consecutive writes to the same
    register install distinct last ids; (c) a returned (rnd, turn) implies
    R[rnd] is non-bottom at the response; (d) the non-bottom registers always
    form a prefix R[1..k].
    """
    verdict = Verdict("register-claims")
    if trace.algo != "phase":
        verdict.add("precondition", "not a phase-algorithm trace")
        return verdict
    last_ids = [set() for _ in range(trace.m)]
    responses = {c.response: c for c in trace.calls if c.complete}
    for s, regs in _replay_writes(trace):
        if s.op == "write":
            if s.val is BOT:
                verdict.add("a", f"step {s.i} writes bottom to R[{s.reg}]",
                            step=s.i)
                continue
            last = s.val.last()
            if last in last_ids[s.reg - 1]:
                verdict.add("b", f"step {s.i} rewrites R[{s.reg}] with "
                                 f"last id {last.text()}, seen before", step=s.i)
            last_ids[s.reg - 1].add(last)
            seen_bot = False
            for k, v in enumerate(regs):
                if v is BOT:
                    seen_bot = True
                elif seen_bot:
                    verdict.add("d", f"after step {s.i}, R[{k + 1}] is "
                                     f"non-bottom but a lower register is bottom",
                                step=s.i)
                    break
        call = responses.get(s.i)
        if call is not None and call.ts is not None:
            rnd = call.ts.rnd
            if not 1 <= rnd <= trace.m or regs[rnd - 1] is BOT:
                verdict.add("c", f"{call.call} returned {call.ts.text()} at "
                                 f"step {s.i} but R[{rnd}] is bottom", step=s.i)
    return verdict


@dataclass
class PhasePartition:
    """Contiguous phase segments of a trace.

    ``starts[k]`` is the first step of phase k; phase 0 starts at step 0 and
    phase f >= 1 starts at the linearization step of the first successful
    scan whose caller entered the scan with myrnd = f - 1.  A phase is
    complete once its successor has started.
    """

    starts: List[int]
    nsteps: int

    @property
    def top_phase(self) -> int:
        return len(self.starts) - 1

    @property
    def completed_phases(self) -> int:
        return max(len(self.starts) - 2, 0)

    def phase_of(self, step: int) -> int:
        return bisect.bisect_right(self.starts, step) - 1

    def segment(self, phase: int):
        start = self.starts[phase]
        end = (self.starts[phase + 1] - 1 if phase + 1 < len(self.starts)
               else self.nsteps - 1)
        return start, end


def compute_phases(trace: Trace) -> PhasePartition:
    """Derive the phase partition from the trace's completed scans."""
    if trace.algo != "phase":
        raise ValueError("phase partitions apply to phase-algorithm traces")
    first_lin: Dict[int, int] = {}
    for scan in trace.scans:
        if not scan.complete:
            continue
        if scan.lin is None or len(scan.collects) < 2:
            raise ValueError(f"malformed scan record for {scan.call}")
        if scan.myrnd not in first_lin or scan.lin < first_lin[scan.myrnd]:
            first_lin[scan.myrnd] = scan.lin
    starts = [0]
    phase = 1
    while phase - 1 in first_lin:
        lin = first_lin[phase - 1]
        if lin < starts[-1]:
            raise ValueError(
                f"phase {phase} would start at step {lin}, before phase "
                f"{phase - 1} started at step {starts[-1]}")
        starts.append(lin)
        phase += 1
    return PhasePartition(starts=starts, nsteps=len(trace.steps))


def check_invalidation_accounting(
        trace: Trace, partition: Optional[PhasePartition] = None) -> Verdict:
    """Phase-relative write accounting.

    An invalidation write is the first write to a given register within a
    phase.  Checks: writes during phase f touch only R[1..f]; every completed
    phase f contains exactly f invalidation writes; the whole trace contains
    at most 2M invalidation writes.
    """
    verdict = Verdict("invalidation-accounting")
    if trace.algo != "phase":
        verdict.add("precondition", "not a phase-algorithm trace")
        return verdict
    if partition is None:
        partition = compute_phases(trace)
    written_in_phase: Dict[int, set] = {}
    for s in trace.steps:
        if s.op != "write":
            continue
        phase = partition.phase_of(s.i)
        if s.reg > phase:
            verdict.add("confinement",
                        f"step {s.i} writes R[{s.reg}] during phase {phase} "
                        f"(allowed: R[1..{phase}])", step=s.i)
        written_in_phase.setdefault(phase, set()).add(s.reg)
    for phase in range(1, partition.completed_phases + 1):
        count = len(written_in_phase.get(phase, ()))
        if count != phase:
            verdict.add("per-phase-count",
                        f"completed phase {phase} has {count} invalidation "
                        f"writes, expected {phase}",
                        step=partition.starts[phase])
    total = sum(len(v) for v in written_in_phase.values())
    if total > 2 * trace.M:
        verdict.add("total", f"{total} invalidation writes exceed "
                             f"2M = {2 * trace.M}")
    return verdict


def check_space(trace: Trace) -> Verdict:
    """Register-footprint bounds for the phase algorithm."""
    verdict = Verdict("space")
    if trace.algo != "phase":
        verdict.add("precondition", "not a phase-algorithm trace")
        return verdict
    m = registers_for_phase(trace.M)
    max_accessed = max((s.reg for s in trace.steps), default=0)
    max_written = max((s.reg for s in trace.steps if s.op == "write"), default=0)
    if max_accessed > m:
        verdict.add("accessed", f"register R[{max_accessed}] accessed; "
                                f"bound for M={trace.M} is {m}")
    if max_written > m - 1:
        verdict.add("written", f"register R[{max_written}] written; only "
                               f"R[1..{m - 1}] may be written")
    phases = compute_phases(trace).completed_phases
    if phases * (phases + 1) // 2 > 2 * trace.M:
        verdict.add("phases", f"{phases} completed phases require "
                              f"{phases * (phases + 1) // 2} invalidation "
                              f"writes, above 2M = {2 * trace.M}")
    return verdict


def _scan_interference(trace: Trace, scan) -> int:
    start = scan.collects[0][0]
    end = scan.collects[-1][1]
    return sum(1 for s in trace.steps[start:end + 1]
               if s.op == "write" and s.call != scan.call)


def check_wait_freedom(trace: Trace) -> Verdict:
    """Per-call step bounds that make the algorithms wait-free."""
    verdict = Verdict("wait-freedom")
    m = trace.m
    per_call = {}
    for s in trace.steps:
        rec = per_call.setdefault(s.call, {"while": 0, "for": 0, "writes": 0,
                                           "steps": 0})
        rec["steps"] += 1
        if s.op == "write":
            rec["writes"] += 1
        if trace.algo == "phase":
            if s.line == 1 and s.val is not BOT:
                rec["while"] += 1
            elif s.line == 6:
                rec["for"] += 1
    for call, rec in per_call.items():
        if trace.algo == "phase":
            if rec["while"] > m - 1:
                verdict.add("while-loop", f"{call} performed {rec['while']} "
                                          f"while-loop iterations (bound {m - 1})")
            if rec["for"] > m - 2:
                verdict.add("for-loop", f"{call} performed {rec['for']} "
                                        f"for-loop iterations (bound {m - 2})")
            if rec["writes"] > m - 1:
                verdict.add("writes", f"{call} wrote {rec['writes']} times "
                                      f"(bound {m - 1})")
        else:
            if rec["writes"] > 1:
                verdict.add("writes", f"{call} wrote {rec['writes']} times")
            if rec["steps"] > m + 1:
                verdict.add("steps", f"{call} took {rec['steps']} steps "
                                     f"(bound {m + 1})")
    if trace.algo == "phase":
        for scan in trace.scans:
            if not scan.complete:
                continue
            collects = len(scan.collects)
            interfering = _scan_interference(trace, scan)
            if collects > interfering + 2:
                verdict.add("scan", f"scan by {scan.call} used {collects} "
                                    f"collects with only {interfering} "
                                    f"interfering writes")
    return verdict


def check_simple_algorithm(trace: Trace) -> Verdict:
    """Summing-algorithm invariants: values stay in {0,1,2} and never
    decrease, each process writes only its own register and only once, and
    timestamps respect precedence."""
    verdict = Verdict("simple-algorithm")
    if trace.algo != "simple":
        verdict.add("precondition", "not a simple-algorithm trace")
        return verdict
    values = [0] * trace.m
    writes_by_pid: Dict[int, int] = {}
    for s in trace.steps:
        if s.op != "write":
            continue
        own = (s.pid + 1) // 2
        if s.reg != own:
            verdict.add("ownership", f"step {s.i}: p{s.pid} wrote R[{s.reg}], "
                                     f"owns R[{own}]", step=s.i)
        writes_by_pid[s.pid] = writes_by_pid.get(s.pid, 0) + 1
        if s.val not in (0, 1, 2):
            verdict.add("range", f"step {s.i} writes {s.val} to R[{s.reg}], "
                                 f"outside 0..2", step=s.i)
        if s.val < values[s.reg - 1]:
            verdict.add("monotonicity",
                        f"step {s.i} lowers R[{s.reg}] from "
                        f"{values[s.reg - 1]} to {s.val}", step=s.i)
        values[s.reg - 1] = s.val
    for pid, count in writes_by_pid.items():
        if count > 1:
            verdict.add("one-shot", f"p{pid} wrote {count} times")
    for v in check_ordering(trace).violations:
        verdict.violations.append(v)
    return verdict


def run_all(trace: Trace) -> Dict[str, Verdict]:
    """Apply every checker that matches the trace's algorithm."""
    if trace.algo == "phase":
        partition = compute_phases(trace)
        return {
            "ordering": check_ordering(trace),
            "register-claims": check_register_claims(trace),
            "invalidation-accounting":
                check_invalidation_accounting(trace, partition),
            "space": check_space(trace),
            "wait-freedom": check_wait_freedom(trace),
        }
    return {
        "ordering": check_ordering(trace),
        "simple-algorithm": check_simple_algorithm(trace),
        "wait-freedom": check_wait_freedom(trace),
    }
