"""Step-machine encodings of the two getTS algorithms.

Each machine is an immutable value; ``step`` consumes a machine plus the
current register array and yields a successor machine together with exactly
one register effect (a read or a write).  Local computation is free and is
folded into the step that performs the neighbouring shared access.  A method
return that has no shared access of its own (e.g. bailing out after seeing a
non-bottom successor register) is attached to the step whose access revealed
the fact.

Program locations of the phase machine map onto pseudocode lines as follows
(the same numbering is recorded in traces):

====================  ====
location              line
====================  ====
while-loop read          1
sentinel check read      6
validity check read      7
invalidate-and-return    8
round re-read           10
invalidate-and-go-on    11
scan collect read       13
new-round write         15
====================  ====

Returns originate at lines 9, 12 and 16 and ride on the access of lines
8, 6 and 13/15 respectively.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Union

from .core import BOT, GetTsId, PhaseTimestamp, Reg, SimpleTimestamp, registers_for_simple


class ModelViolation(Exception):
    """The machine observed shared state that the algorithm rules out."""


class MachineReturned(Exception):
    """Attempt to step or inspect a machine that has already returned."""


class Read(NamedTuple):
    reg: int  # 1-based register index
    val: object = None  # value seen (filled in by step; None in descriptors)


class Write(NamedTuple):
    reg: int
    val: object


Access = Union[Read, Write]


class StepOutcome(NamedTuple):
    machine: object
    effect: Access  # Read carries the value seen, Write the value stored
    timestamp: object  # PhaseTimestamp | SimpleTimestamp | None
    line: int
    collect_started: bool = False
    collect_ended: bool = False
    scan_ended: bool = False


# ---------------------------------------------------------------------------
# Summing algorithm
# ---------------------------------------------------------------------------

LOOP_READ = "loop-read"
INC_WRITE = "increment-write"
DONE = "done"


@dataclass(frozen=True)
class SimpleMachine:
    """One getTS call of the summing algorithm.

    The register increment is two steps: a read buffered in ``pending`` and a
    write of pending+1 (plain registers only support read and write).
    """

    pid: int
    nregs: int
    own: int  # index of the register this process shares with its partner
    i: int = 1
    total: int = 0
    pending: Optional[int] = None
    pc: str = LOOP_READ

    @property
    def returned(self):
        return SimpleTimestamp(self.total) if self.pc == DONE else None

    def next_access(self, registers) -> Access:
        if self.pc == LOOP_READ:
            return Read(self.i)
        if self.pc == INC_WRITE:
            return Write(self.own, self.pending + 1)
        raise MachineReturned(f"p{self.pid} already returned")

    def step(self, registers) -> StepOutcome:
        if self.pc == LOOP_READ:
            val = registers[self.i - 1]
            if self.i == self.own:
                m = replace(self, pending=val, pc=INC_WRITE)
                return StepOutcome(m, Read(self.i, val), None, 1)
            return self._advance(self.total + val, Read(self.i, val))
        if self.pc == INC_WRITE:
            written = self.pending + 1
            m, eff, ts, line, *_ = self._advance(self.total + written, Write(self.own, written))
            return StepOutcome(m, eff, ts, 2)
        raise MachineReturned(f"p{self.pid} already returned")

    def _advance(self, new_total, effect) -> StepOutcome:
        if self.i == self.nregs:
            m = replace(self, total=new_total, pending=None, pc=DONE, i=self.i + 1)
            return StepOutcome(m, effect, SimpleTimestamp(new_total), 1)
        m = replace(self, total=new_total, pending=None, pc=LOOP_READ, i=self.i + 1)
        return StepOutcome(m, effect, None, 1)


def init_simple(pid: int, n: int) -> SimpleMachine:
    if not 1 <= pid <= n:
        raise ValueError(f"pid {pid} out of range 1..{n}")
    own = (pid + 1) // 2  # ceil(pid/2)
    return SimpleMachine(pid=pid, nregs=registers_for_simple(n), own=own)


# ---------------------------------------------------------------------------
# Phase algorithm
# ---------------------------------------------------------------------------

WHILE_READ = "while-read"
FOR_SENTINEL = "for-check-sentinel"
FOR_VALID = "for-check-valid"
READ_RND = "read-rnd"
WRITE_INVALIDATE_RET = "write-invalidate-return"
WRITE_INVALIDATE_CONT = "write-invalidate-continue"
SCAN = "scan-collect"
WRITE_ROUND = "write-new-round"
RETURNED = "returned"

_PC_LINE = {
    WHILE_READ: 1,
    FOR_SENTINEL: 6,
    FOR_VALID: 7,
    READ_RND: 10,
    WRITE_INVALIDATE_RET: 8,
    WRITE_INVALIDATE_CONT: 11,
    SCAN: 13,
    WRITE_ROUND: 15,
}


@dataclass(frozen=True)
class PhaseMachine:
    """One getTS call of the phase algorithm, one shared access per step.

    ``myseq`` caches the id-sequence read from R[myrnd] during the while loop;
    the validity test in the for loop indexes into it.  The scan is decomposed
    into collects of m reads each (index order 1..m); it completes when two
    consecutive collects are identical, and the resulting view feeds the
    new-round write.  Bookkeeping counters (loop iterations, writes, collects)
    exist so that wait-freedom bounds are checkable per configuration.
    """

    pid: int
    call_seq: int
    m: int
    pc: str = WHILE_READ
    j: int = 1
    myrnd: int = -1  # set exactly once, when the while loop ends
    myseq: tuple = ()
    scan_prev: Optional[tuple] = None
    scan_cur: tuple = ()
    view: Optional[tuple] = None  # r[1..m] after a completed scan
    while_iters: int = 0  # while-loop body executions (non-bottom reads)
    for_iters: int = 0  # sentinel checks, i.e. for-loop iterations begun
    collects: int = 0  # collects begun within the current scan
    written: frozenset = frozenset()  # register indices this call wrote
    result: Optional[PhaseTimestamp] = None

    @property
    def id(self) -> GetTsId:
        return GetTsId(self.pid, self.call_seq)

    @property
    def returned(self):
        return self.result

    def _invalidation_value(self) -> Reg:
        return Reg((self.id,), self.myrnd)

    def _round_value(self) -> Reg:
        lasts = tuple(self.view[i].last() for i in range(self.myrnd))
        return Reg(lasts + (self.id,), self.myrnd + 1)

    def next_access(self, registers=None) -> Access:
        pc = self.pc
        if pc == WHILE_READ:
            return Read(self.j)
        if pc == FOR_SENTINEL:
            return Read(self.myrnd + 1)
        if pc in (FOR_VALID, READ_RND):
            return Read(self.j)
        if pc in (WRITE_INVALIDATE_RET, WRITE_INVALIDATE_CONT):
            return Write(self.j, self._invalidation_value())
        if pc == SCAN:
            return Read(len(self.scan_cur) + 1)
        if pc == WRITE_ROUND:
            return Write(self.myrnd + 1, self._round_value())
        raise MachineReturned(f"{self.id.text()} already returned")

    # -- transitions ---------------------------------------------------------

    def step(self, registers) -> StepOutcome:
        pc = self.pc
        if pc == WHILE_READ:
            return self._step_while(registers)
        if pc == FOR_SENTINEL:
            return self._step_sentinel(registers)
        if pc == FOR_VALID:
            return self._step_valid(registers)
        if pc == READ_RND:
            return self._step_read_rnd(registers)
        if pc == WRITE_INVALIDATE_RET:
            m = replace(self, pc=RETURNED, result=PhaseTimestamp(self.myrnd, self.j),
                        written=self.written | {self.j})
            return StepOutcome(m, Write(self.j, self._invalidation_value()),
                               m.result, 8)
        if pc == WRITE_INVALIDATE_CONT:
            m = self._for_next(self.written | {self.j})
            return StepOutcome(m, Write(self.j, self._invalidation_value()), None, 11)
        if pc == SCAN:
            return self._step_scan(registers)
        if pc == WRITE_ROUND:
            m = replace(self, pc=RETURNED, result=PhaseTimestamp(self.myrnd + 1, 0),
                        written=self.written | {self.myrnd + 1})
            return StepOutcome(m, Write(self.myrnd + 1, self._round_value()),
                               m.result, 15)
        raise MachineReturned(f"{self.id.text()} already returned")

    def _step_while(self, registers) -> StepOutcome:
        if self.j > self.m:
            raise ModelViolation(
                f"{self.id.text()}: while loop ran past the sentinel register")
        val = registers[self.j - 1]
        if val is not BOT:
            m = replace(self, j=self.j + 1, myseq=val.seq,
                        while_iters=self.while_iters + 1)
            return StepOutcome(m, Read(self.j, val), None, 1)
        myrnd = self.j - 1
        if myrnd >= 2:
            if len(self.myseq) != myrnd:
                raise ModelViolation(
                    f"{self.id.text()}: R[{myrnd}] holds a sequence of length "
                    f"{len(self.myseq)}, expected {myrnd}")
            m = replace(self, myrnd=myrnd, j=1, pc=FOR_SENTINEL)
        else:
            m = replace(self, myrnd=myrnd, pc=SCAN, scan_prev=None, scan_cur=(),
                        collects=1)
        return StepOutcome(m, Read(self.j, val), None, 1)

    def _step_sentinel(self, registers) -> StepOutcome:
        idx = self.myrnd + 1
        val = registers[idx - 1]
        me = replace(self, for_iters=self.for_iters + 1)
        if val is not BOT:
            m = replace(me, pc=RETURNED, result=PhaseTimestamp(self.myrnd + 1, 0))
            return StepOutcome(m, Read(idx, val), m.result, 6)
        m = replace(me, pc=FOR_VALID)
        return StepOutcome(m, Read(idx, val), None, 6)

    def _step_valid(self, registers) -> StepOutcome:
        val = registers[self.j - 1]
        if val is BOT:
            raise ModelViolation(
                f"{self.id.text()}: R[{self.j}] is bottom below R[{self.myrnd}]")
        if self.myseq[self.j - 1] == val.last():
            m = replace(self, pc=WRITE_INVALIDATE_RET)
        else:
            m = replace(self, pc=READ_RND)
        return StepOutcome(m, Read(self.j, val), None, 7)

    def _step_read_rnd(self, registers) -> StepOutcome:
        val = registers[self.j - 1]
        if val is BOT:
            raise ModelViolation(
                f"{self.id.text()}: R[{self.j}] is bottom below R[{self.myrnd}]")
        if val.rnd < self.myrnd:
            m = replace(self, pc=WRITE_INVALIDATE_CONT)
        else:
            m = self._for_next(self.written)
        return StepOutcome(m, Read(self.j, val), None, 10)

    def _for_next(self, written) -> "PhaseMachine":
        """Advance the for loop past iteration j (after line 10 or 11)."""
        if self.j + 1 <= self.myrnd - 1:
            return replace(self, j=self.j + 1, pc=FOR_SENTINEL, written=written)
        return replace(self, pc=SCAN, scan_prev=None, scan_cur=(), collects=1,
                       written=written)

    def _step_scan(self, registers) -> StepOutcome:
        idx = len(self.scan_cur) + 1
        val = registers[idx - 1]
        started = self.scan_cur == ()
        cur = self.scan_cur + (val,)
        if idx < self.m:
            m = replace(self, scan_cur=cur)
            return StepOutcome(m, Read(idx, val), None, 13, collect_started=started)
        # collect complete
        if self.scan_prev == cur:
            view = cur
            if view[self.myrnd] is BOT:  # line 14 on the local view
                m = replace(self, view=view, pc=WRITE_ROUND, scan_prev=None,
                            scan_cur=())
                return StepOutcome(m, Read(idx, val), None, 13,
                                   collect_started=started, collect_ended=True,
                                   scan_ended=True)
            m = replace(self, view=view, pc=RETURNED, scan_prev=None, scan_cur=(),
                        result=PhaseTimestamp(self.myrnd + 1, 0))
            return StepOutcome(m, Read(idx, val), m.result, 13,
                               collect_started=started, collect_ended=True,
                               scan_ended=True)
        m = replace(self, scan_prev=cur, scan_cur=(), collects=self.collects + 1)
        return StepOutcome(m, Read(idx, val), None, 13,
                           collect_started=started, collect_ended=True)


def init_phase(pid: int, seq: int, m: int) -> PhaseMachine:
    if m < 2:
        raise ValueError("phase algorithm needs m >= 2 (one writable register "
                         "plus the sentinel)")
    if pid < 1 or seq < 1:
        raise ValueError("process index and invocation counter start at 1")
    return PhaseMachine(pid=pid, call_seq=seq, m=m)


Machine = Union[SimpleMachine, PhaseMachine]


def is_enabled(machine: Machine) -> bool:
    return machine.returned is None


def step(machine: Machine, registers) -> StepOutcome:
    return machine.step(registers)


def next_access(machine: Machine, registers=None) -> Access:
    return machine.next_access(registers)
