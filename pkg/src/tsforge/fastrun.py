"""Bulk random-schedule runner for the phase algorithm.

The reference machines in ``machines`` are convenient but slow; stress runs
need hundreds of thousands of executions.  This module re-implements the
phase algorithm's step function over flat integer arrays and compiles it
with numba.  Instead of full traces it emits condensed logs (write steps,
successful scans, per-call records) from which the same bounds the trace
checkers enforce are re-checked in Python.

Register values are represented by (bottom flag, last id, rnd, id sequence).
Collect views compare by (bottom, last id) pairs alone: every write installs
a distinct last id, so that pair determines the full value.  The optional
schedule recording mode allows replaying a run through the reference
machines, which the test suite uses to cross-validate this runner.

Error codes: 0 ok, 1 step budget exceeded, 2 model violation (the machine
observed shared state the algorithm rules out), 3 log overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# program counters
_IDLE, _WHILE, _SENTINEL, _VALID, _READ_RND = 0, 1, 2, 3, 4
_INVAL_RET, _INVAL_CONT, _SCAN, _ROUND, _DONE = 5, 6, 7, 8, 9

OK, ERR_BUDGET, ERR_MODEL, ERR_OVERFLOW = 0, 1, 2, 3


@njit(cache=True)
def _run_batch(n, m, cpp, seeds, budget,
               calls_out, ncalls, writes_out, nwrites,
               scans_out, nscans, summary, sched_out, record_schedule):
    """Execute one random-schedule run per seed.

    calls_out rows: invoke, response, rnd, turn, while_iters, for_iters,
    writes, pid, uid.  writes_out rows: step, reg.  scans_out rows: myrnd,
    lin, collects, interference.  summary rows: steps, max accessed reg,
    max written reg, error code, ordering violations.
    """
    M = n * cpp
    W = writes_out.shape[0] // seeds.shape[0]
    C = calls_out.shape[0] // seeds.shape[0]
    S = scans_out.shape[0] // seeds.shape[0]
    for run in range(seeds.shape[0]):
        np.random.seed(seeds[run])
        # shared registers, 1-indexed
        reg_bot = np.ones(m + 1, dtype=np.int8)
        reg_last = np.zeros(m + 1, dtype=np.int64)
        reg_rnd = np.zeros(m + 1, dtype=np.int64)
        regseq = np.zeros((m + 1, m + 1), dtype=np.int64)
        regseq_len = np.zeros(m + 1, dtype=np.int64)
        # per-process machine state, 1-indexed
        pc = np.zeros(n + 1, dtype=np.int64)
        jj = np.zeros(n + 1, dtype=np.int64)
        myrnd = np.zeros(n + 1, dtype=np.int64)
        myseq = np.zeros((n + 1, m + 1), dtype=np.int64)
        myseq_len = np.zeros(n + 1, dtype=np.int64)
        cur_last = np.zeros((n + 1, m + 1), dtype=np.int64)
        cur_bot = np.zeros((n + 1, m + 1), dtype=np.int8)
        cur_len = np.zeros(n + 1, dtype=np.int64)
        prev_last = np.zeros((n + 1, m + 1), dtype=np.int64)
        prev_bot = np.zeros((n + 1, m + 1), dtype=np.int8)
        have_prev = np.zeros(n + 1, dtype=np.int8)
        collects = np.zeros(n + 1, dtype=np.int64)
        while_iters = np.zeros(n + 1, dtype=np.int64)
        for_iters = np.zeros(n + 1, dtype=np.int64)
        wcount = np.zeros(n + 1, dtype=np.int64)
        interf = np.zeros(n + 1, dtype=np.int64)
        prev_end = np.zeros(n + 1, dtype=np.int64)
        uid = np.zeros(n + 1, dtype=np.int64)
        calls_done = np.zeros(n + 1, dtype=np.int64)
        invoke_step = np.zeros(n + 1, dtype=np.int64)
        threshold = np.zeros(n + 1, dtype=np.int64)

        enabled = np.empty(n, dtype=np.int64)
        for i in range(n):
            enabled[i] = i + 1
        nen = n

        step = 0
        next_uid = 1
        max_acc = 0
        max_wr = 0
        nw = 0
        nc = 0
        ns = 0
        err = 0
        ord_viol = 0
        max_key = np.int64(-1)
        key_base = np.int64(m + 2)

        while nen > 0:
            if step >= budget:
                err = ERR_BUDGET
                break
            p = enabled[np.random.randint(0, nen)]
            if record_schedule:
                if step < sched_out.shape[0]:
                    sched_out[step] = p
                else:
                    err = ERR_OVERFLOW
                    break
            if pc[p] == _IDLE:
                uid[p] = next_uid
                next_uid += 1
                invoke_step[p] = step
                threshold[p] = max_key
                pc[p] = _WHILE
                jj[p] = 1
                myrnd[p] = -1
                myseq_len[p] = 0
                while_iters[p] = 0
                for_iters[p] = 0
                wcount[p] = 0

            cpc = pc[p]
            returned_rnd = np.int64(-1)
            returned_turn = np.int64(-1)

            if cpc == _WHILE:
                j = jj[p]
                if j > m:
                    err = ERR_MODEL
                    break
                if j > max_acc:
                    max_acc = j
                if reg_bot[j] == 0:
                    for t in range(regseq_len[j]):
                        myseq[p, t] = regseq[j, t]
                    myseq_len[p] = regseq_len[j]
                    jj[p] = j + 1
                    while_iters[p] += 1
                else:
                    myrnd[p] = j - 1
                    if myrnd[p] >= 2:
                        if myseq_len[p] != myrnd[p]:
                            err = ERR_MODEL
                            break
                        jj[p] = 1
                        pc[p] = _SENTINEL
                    else:
                        pc[p] = _SCAN
                        cur_len[p] = 0
                        have_prev[p] = 0
                        collects[p] = 1
                        interf[p] = 0
            elif cpc == _SENTINEL:
                idx = myrnd[p] + 1
                if idx > max_acc:
                    max_acc = idx
                for_iters[p] += 1
                if reg_bot[idx] == 0:
                    returned_rnd = myrnd[p] + 1
                    returned_turn = 0
                else:
                    pc[p] = _VALID
            elif cpc == _VALID:
                j = jj[p]
                if j > max_acc:
                    max_acc = j
                if reg_bot[j] == 1:
                    err = ERR_MODEL
                    break
                if myseq[p, j - 1] == reg_last[j]:
                    pc[p] = _INVAL_RET
                else:
                    pc[p] = _READ_RND
            elif cpc == _READ_RND:
                j = jj[p]
                if j > max_acc:
                    max_acc = j
                if reg_bot[j] == 1:
                    err = ERR_MODEL
                    break
                if reg_rnd[j] < myrnd[p]:
                    pc[p] = _INVAL_CONT
                else:
                    if j + 1 <= myrnd[p] - 1:
                        jj[p] = j + 1
                        pc[p] = _SENTINEL
                    else:
                        pc[p] = _SCAN
                        cur_len[p] = 0
                        have_prev[p] = 0
                        collects[p] = 1
                        interf[p] = 0
            elif cpc == _INVAL_RET or cpc == _INVAL_CONT:
                j = jj[p]
                reg_bot[j] = 0
                reg_last[j] = uid[p]
                reg_rnd[j] = myrnd[p]
                regseq[j, 0] = uid[p]
                regseq_len[j] = 1
                if j > max_acc:
                    max_acc = j
                if j > max_wr:
                    max_wr = j
                wcount[p] += 1
                if nw >= W:
                    err = ERR_OVERFLOW
                    break
                writes_out[run * W + nw, 0] = step
                writes_out[run * W + nw, 1] = j
                nw += 1
                for q in range(1, n + 1):
                    if q != p and pc[q] == _SCAN:
                        interf[q] += 1
                if cpc == _INVAL_RET:
                    returned_rnd = myrnd[p]
                    returned_turn = j
                else:
                    if j + 1 <= myrnd[p] - 1:
                        jj[p] = j + 1
                        pc[p] = _SENTINEL
                    else:
                        pc[p] = _SCAN
                        cur_len[p] = 0
                        have_prev[p] = 0
                        collects[p] = 1
                        interf[p] = 0
            elif cpc == _SCAN:
                idx = cur_len[p] + 1
                if idx > max_acc:
                    max_acc = idx
                cur_last[p, idx] = reg_last[idx]
                cur_bot[p, idx] = reg_bot[idx]
                cur_len[p] = idx
                if idx == m:
                    same = have_prev[p] == 1
                    if same:
                        for t in range(1, m + 1):
                            if (cur_bot[p, t] != prev_bot[p, t]
                                    or (cur_bot[p, t] == 0
                                        and cur_last[p, t] != prev_last[p, t])):
                                same = False
                                break
                    if same:
                        lin = prev_end[p] + 1
                        if ns >= S:
                            err = ERR_OVERFLOW
                            break
                        scans_out[run * S + ns, 0] = myrnd[p]
                        scans_out[run * S + ns, 1] = lin
                        scans_out[run * S + ns, 2] = collects[p]
                        scans_out[run * S + ns, 3] = interf[p]
                        ns += 1
                        if cur_bot[p, myrnd[p] + 1] == 1:
                            pc[p] = _ROUND
                        else:
                            returned_rnd = myrnd[p] + 1
                            returned_turn = 0
                    else:
                        for t in range(1, m + 1):
                            prev_last[p, t] = cur_last[p, t]
                            prev_bot[p, t] = cur_bot[p, t]
                        have_prev[p] = 1
                        prev_end[p] = step
                        cur_len[p] = 0
                        collects[p] += 1
            elif cpc == _ROUND:
                idx = myrnd[p] + 1
                reg_bot[idx] = 0
                reg_last[idx] = uid[p]
                reg_rnd[idx] = idx
                bad = False
                for t in range(myrnd[p]):
                    if cur_bot[p, t + 1] == 1:
                        bad = True
                    regseq[idx, t] = cur_last[p, t + 1]
                if bad:
                    err = ERR_MODEL
                    break
                regseq[idx, myrnd[p]] = uid[p]
                regseq_len[idx] = idx
                if idx > max_acc:
                    max_acc = idx
                if idx > max_wr:
                    max_wr = idx
                wcount[p] += 1
                if nw >= W:
                    err = ERR_OVERFLOW
                    break
                writes_out[run * W + nw, 0] = step
                writes_out[run * W + nw, 1] = idx
                nw += 1
                for q in range(1, n + 1):
                    if q != p and pc[q] == _SCAN:
                        interf[q] += 1
                returned_rnd = myrnd[p] + 1
                returned_turn = 0

            if returned_rnd >= 0:
                key = returned_rnd * key_base + returned_turn
                if key <= threshold[p]:
                    ord_viol += 1
                if key > max_key:
                    max_key = key
                if nc >= C:
                    err = ERR_OVERFLOW
                    break
                row = run * C + nc
                calls_out[row, 0] = invoke_step[p]
                calls_out[row, 1] = step
                calls_out[row, 2] = returned_rnd
                calls_out[row, 3] = returned_turn
                calls_out[row, 4] = while_iters[p]
                calls_out[row, 5] = for_iters[p]
                calls_out[row, 6] = wcount[p]
                calls_out[row, 7] = p
                calls_out[row, 8] = uid[p]
                nc += 1
                calls_done[p] += 1
                pc[p] = _IDLE
                if calls_done[p] >= cpp:
                    for t in range(nen):
                        if enabled[t] == p:
                            enabled[t] = enabled[nen - 1]
                            nen -= 1
                            break
            step += 1

        summary[run, 0] = step
        summary[run, 1] = max_acc
        summary[run, 2] = max_wr
        summary[run, 3] = err
        summary[run, 4] = ord_viol
        nwrites[run] = nw
        ncalls[run] = nc
        nscans[run] = ns


@dataclass
class RunResult:
    """Condensed record of one random-schedule execution."""
    seed: int
    steps: int
    max_reg_accessed: int
    max_reg_written: int
    error: int
    completed_phases: int
    invalidation_writes: int
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error == OK and not self.violations


def _check_run(n, m, cpp, seed, summary, calls, writes, scans) -> RunResult:
    """Re-check the trace-checker bounds from one run's condensed logs."""
    M = n * cpp
    res = RunResult(seed=int(seed), steps=int(summary[0]),
                    max_reg_accessed=int(summary[1]),
                    max_reg_written=int(summary[2]),
                    error=int(summary[3]),
                    completed_phases=0, invalidation_writes=0)
    v = res.violations
    if res.error == ERR_BUDGET:
        v.append("step budget exceeded")
    elif res.error == ERR_MODEL:
        v.append("model violation inside a machine")
    elif res.error == ERR_OVERFLOW:
        v.append("log buffer overflow")
    if summary[4] > 0:
        v.append(f"{int(summary[4])} ordering violations")

    # space bounds
    if res.max_reg_accessed > m:
        v.append(f"accessed R[{res.max_reg_accessed}], bound {m}")
    if res.max_reg_written > m - 1:
        v.append(f"wrote R[{res.max_reg_written}], bound {m - 1}")

    # wait-freedom bounds
    if len(calls):
        if calls[:, 4].max() > m - 1:
            v.append("while-loop iteration bound exceeded")
        if calls[:, 5].max() > m - 2:
            v.append("for-loop iteration bound exceeded")
        if calls[:, 6].max() > m - 1:
            v.append("per-call write bound exceeded")
    if len(calls) != M and res.error == OK:
        v.append(f"only {len(calls)} of {M} calls completed")
    for myrnd_s, lin, ncollects, interfering in scans:
        if ncollects > interfering + 2:
            v.append(f"scan used {ncollects} collects with "
                     f"{interfering} interfering writes")

    # phase partition from first successful scan per round
    first_lin = {}
    for myrnd_s, lin, _, _ in scans:
        if myrnd_s not in first_lin or lin < first_lin[myrnd_s]:
            first_lin[myrnd_s] = lin
    starts = [0]
    while len(starts) - 1 in first_lin:
        lin = first_lin[len(starts) - 1]
        if lin < starts[-1]:
            v.append("phase boundaries not monotonic")
            break
        starts.append(lin)
    top = len(starts) - 1
    res.completed_phases = max(top - 1, 0)
    if res.completed_phases * (res.completed_phases + 1) // 2 > 2 * M:
        v.append(f"{res.completed_phases} completed phases exceed the "
                 f"2M invalidation budget")

    # invalidation accounting
    per_phase = [set() for _ in range(top + 1)]
    bounds = np.asarray(starts[1:], dtype=np.int64)
    for wstep, reg in writes:
        phase = int(np.searchsorted(bounds, wstep, side="right"))
        if reg > phase:
            v.append(f"write to R[{reg}] during phase {phase}")
        per_phase[phase].add(int(reg))
    for phase in range(1, res.completed_phases + 1):
        if len(per_phase[phase]) != phase:
            v.append(f"completed phase {phase} has {len(per_phase[phase])} "
                     f"invalidation writes")
    res.invalidation_writes = sum(len(s) for s in per_phase)
    if res.invalidation_writes > 2 * M:
        v.append(f"{res.invalidation_writes} invalidation writes exceed "
                 f"2M = {2 * M}")
    return res


def stress(n: int, runs: int, seed: int = 0, cpp: int = 1,
           m: Optional[int] = None, batch: int = 2000,
           budget: Optional[int] = None) -> List[RunResult]:
    """Run the phase algorithm under many random schedules and re-check the
    space, accounting, wait-freedom and ordering bounds on each run.

    Run i uses seed ``seed + i``; results are ordered by run index.
    """
    from .core import registers_for_phase
    M = n * cpp
    if m is None:
        m = registers_for_phase(M)
    if budget is None:
        budget = 10 * M * m * max(M * (m - 1), 1)
    W = M * (m - 1) + 1
    C = M
    results: List[RunResult] = []
    dummy_sched = np.zeros(1, dtype=np.int64)
    for base in range(0, runs, batch):
        b = min(batch, runs - base)
        seeds = np.arange(seed + base, seed + base + b, dtype=np.int64)
        calls = np.zeros((b * C, 9), dtype=np.int64)
        ncalls = np.zeros(b, dtype=np.int64)
        writes = np.zeros((b * W, 2), dtype=np.int64)
        nwrites = np.zeros(b, dtype=np.int64)
        scans = np.zeros((b * C, 4), dtype=np.int64)
        nscans = np.zeros(b, dtype=np.int64)
        summary = np.zeros((b, 5), dtype=np.int64)
        _run_batch(n, m, cpp, seeds, budget, calls, ncalls, writes, nwrites,
                   scans, nscans, summary, dummy_sched, False)
        for r in range(b):
            results.append(_check_run(
                n, m, cpp, seeds[r], summary[r],
                calls[r * C:r * C + ncalls[r]],
                writes[r * W:r * W + nwrites[r]],
                scans[r * C:r * C + nscans[r]]))
    return results


def recorded_run(n: int, seed: int, cpp: int = 1, m: Optional[int] = None,
                 max_steps: int = 200000):
    """One run with its schedule recorded, for cross-validation.

    Returns (schedule, calls array, summary row); the schedule can be
    replayed through the reference machines.
    """
    from .core import registers_for_phase
    M = n * cpp
    if m is None:
        m = registers_for_phase(M)
    W = M * (m - 1) + 1
    seeds = np.array([seed], dtype=np.int64)
    calls = np.zeros((M, 9), dtype=np.int64)
    ncalls = np.zeros(1, dtype=np.int64)
    writes = np.zeros((W, 2), dtype=np.int64)
    nwrites = np.zeros(1, dtype=np.int64)
    scans = np.zeros((M, 4), dtype=np.int64)
    nscans = np.zeros(1, dtype=np.int64)
    summary = np.zeros((1, 5), dtype=np.int64)
    sched = np.zeros(max_steps, dtype=np.int64)
    _run_batch(n, m, cpp, seeds, max_steps, calls, ncalls, writes, nwrites,
               scans, nscans, summary, sched, True)
    steps = int(summary[0, 0])
    return (sched[:steps].tolist(), calls[:int(ncalls[0])], summary[0],
            writes[:int(nwrites[0])], scans[:int(nscans[0])])
