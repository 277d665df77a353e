"""Totally ordered execution records and their JSON form.

A trace is the contract between the simulator and every verifier: a dense
step log plus call intervals and per-scan collect windows.  Serialized form
(schema "1"):

    {"schema": "1", "algo": ..., "n": ..., "M": ..., "m": ...,
     "steps":  [{"i":0,"pid":1,"call":"p1.1","op":"read","reg":1,"val":"⊥","line":1}, ...],
     "calls":  [{"call":"p1.1","pid":1,"invoke":0,"response":8,"ts":"(1,0)"}, ...],
     "scans":  [{"call":"p1.1","myrnd":0,"collects":[[1,3],[4,6]],"lin":4,"complete":true}, ...],
     "stats":  {...}}

Register values and timestamps use the canonical textual forms from core.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

from .core import parse_id, parse_timestamp, parse_value, value_text

SCHEMA = "1"


@dataclass(frozen=True)
class Step:
    i: int
    pid: int
    call: str  # canonical getTS-id text, e.g. "p2.1"
    op: str  # "read" | "write"
    reg: int  # 1-based register index
    val: object  # value seen (read) or stored (write)
    line: int  # pseudocode line of the access


@dataclass
class CallRecord:
    call: str
    pid: int
    invoke: int
    response: Optional[int] = None
    ts: object = None

    @property
    def complete(self) -> bool:
        return self.response is not None


@dataclass
class ScanRecord:
    call: str
    myrnd: int
    collects: List[List[int]] = field(default_factory=list)  # [first, last] steps
    lin: Optional[int] = None  # boundary: just after the penultimate collect
    complete: bool = False


@dataclass
class Trace:
    algo: str  # "phase" | "simple"
    n: int
    M: int
    m: int
    steps: List[Step] = field(default_factory=list)
    calls: List[CallRecord] = field(default_factory=list)
    scans: List[ScanRecord] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def call_of(self, text: str) -> CallRecord:
        for c in self.calls:
            if c.call == text:
                return c
        raise KeyError(text)

    def to_json(self, meta: Optional[dict] = None) -> str:
        doc = {
            "schema": SCHEMA,
            "algo": self.algo,
            "n": self.n,
            "M": self.M,
            "m": self.m,
            "steps": [
                {"i": s.i, "pid": s.pid, "call": s.call, "op": s.op,
                 "reg": s.reg, "val": value_text(s.val), "line": s.line}
                for s in self.steps
            ],
            "calls": [
                {"call": c.call, "pid": c.pid, "invoke": c.invoke,
                 "response": c.response,
                 "ts": c.ts.text() if c.ts is not None else None}
                for c in self.calls
            ],
            "scans": [
                {"call": s.call, "myrnd": s.myrnd, "collects": s.collects,
                 "lin": s.lin, "complete": s.complete}
                for s in self.scans
            ],
            "stats": self.stats,
        }
        if meta:
            doc["meta"] = meta
        return json.dumps(doc, ensure_ascii=False, indent=None)

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported trace schema: {doc.get('schema')!r}")
        algo = doc["algo"]
        trace = cls(algo=algo, n=doc["n"], M=doc["M"], m=doc["m"],
                    stats=doc.get("stats", {}))
        for s in doc["steps"]:
            trace.steps.append(Step(
                i=s["i"], pid=s["pid"], call=s["call"], op=s["op"],
                reg=s["reg"], val=parse_value(s["val"], algo), line=s["line"]))
        for c in doc["calls"]:
            trace.calls.append(CallRecord(
                call=c["call"], pid=c["pid"], invoke=c["invoke"],
                response=c["response"],
                ts=parse_timestamp(c["ts"], algo) if c["ts"] is not None else None))
        for s in doc["scans"]:
            trace.scans.append(ScanRecord(
                call=s["call"], myrnd=s["myrnd"],
                collects=[list(c) for c in s["collects"]],
                lin=s["lin"], complete=s["complete"]))
        return trace


class TraceBuilder:
    """Accumulates a trace during one execution."""

    def __init__(self, algo: str, n: int, M: int, m: int):
        self.trace = Trace(algo=algo, n=n, M=M, m=m)
        self._open_scans = {}  # pid -> ScanRecord
        self._open_calls = {}  # pid -> CallRecord
        self._collect_start = {}  # pid -> step index of current collect start

    def invoke(self, pid: int, call: str, step_index: int):
        rec = CallRecord(call=call, pid=pid, invoke=step_index)
        self.trace.calls.append(rec)
        self._open_calls[pid] = rec

    def record_step(self, pid: int, call: str, op: str, reg: int, val, line: int):
        i = len(self.trace.steps)
        self.trace.steps.append(Step(i=i, pid=pid, call=call, op=op,
                                     reg=reg, val=val, line=line))
        return i

    def scan_started(self, pid: int, call: str, myrnd: int):
        self._open_scans[pid] = ScanRecord(call=call, myrnd=myrnd)
        self.trace.scans.append(self._open_scans[pid])

    def collect_started(self, pid: int, step_index: int):
        self._collect_start[pid] = step_index

    def collect_ended(self, pid: int, step_index: int):
        rec = self._open_scans[pid]
        rec.collects.append([self._collect_start[pid], step_index])

    def scan_ended(self, pid: int):
        rec = self._open_scans.pop(pid)
        rec.complete = True
        rec.lin = rec.collects[-2][1] + 1

    def returned(self, pid: int, step_index: int, ts):
        rec = self._open_calls.pop(pid)
        rec.response = step_index
        rec.ts = ts

    def finish(self, stats: dict) -> Trace:
        self.trace.stats = stats
        return self.trace
