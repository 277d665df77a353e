"""Domain types shared by all modules, plus the two pure timestamp comparators.

Two timestamp flavours exist and are never inter-compared:

* ``SimpleTimestamp`` -- a plain integer sum produced by the summing algorithm.
* ``PhaseTimestamp`` -- an ordered pair ``(rnd, turn)`` produced by the
  phase/round algorithm, ordered lexicographically.

Shared registers hold either the distinguished bottom value ``BOT`` or a
``Reg(seq, rnd)`` pair, where ``seq`` is a non-empty tuple of getTS-ids.
"""

from __future__ import annotations

import math
import re
from typing import NamedTuple, Optional, Union

BOT_TEXT = "⊥"  # ⊥


class PhaseTimestamp(NamedTuple):
    """Timestamp of the phase algorithm: a (round, turn) pair."""

    rnd: int
    turn: int

    def text(self) -> str:
        return f"({self.rnd},{self.turn})"


class SimpleTimestamp(NamedTuple):
    """Timestamp of the summing algorithm: a non-negative register sum."""

    value: int

    def text(self) -> str:
        return str(self.value)


class GetTsId(NamedTuple):
    """Identity of one getTS invocation: process index plus per-process counter."""

    process: int
    seq: int

    def text(self) -> str:
        return f"p{self.process}.{self.seq}"


class Reg(NamedTuple):
    """Non-bottom register content: a sequence of getTS-ids plus a round number."""

    seq: tuple  # non-empty tuple of GetTsId
    rnd: int

    def last(self) -> GetTsId:
        return self.seq[-1]

    def text(self) -> str:
        ids = ",".join(i.text() for i in self.seq)
        return f"<[{ids}],{self.rnd}>"


# A register value is BOT (represented as None) or a Reg pair.
RegisterValue = Optional[Reg]
BOT: RegisterValue = None

Timestamp = Union[PhaseTimestamp, SimpleTimestamp]


def compare(t1: PhaseTimestamp, t2: PhaseTimestamp) -> bool:
    """Strict lexicographic order on (rnd, turn) pairs."""
    return (t1.rnd < t2.rnd) or (t1.rnd == t2.rnd and t1.turn < t2.turn)


def simple_compare(t1: SimpleTimestamp, t2: SimpleTimestamp) -> bool:
    """Strict integer order on summed timestamps."""
    return t1.value < t2.value


def registers_for_phase(max_calls: int) -> int:
    """Register-array size for the phase algorithm: ceil(2*sqrt(M)).

    The final register is a sentinel that is read but never written.
    """
    if max_calls < 1:
        raise ValueError("need at least one call")
    return math.isqrt(4 * max_calls - 1) + 1  # == ceil(2*sqrt(M)) for M >= 1


def registers_for_simple(n: int) -> int:
    """Register-array size for the summing algorithm: ceil(n/2)."""
    if n < 1:
        raise ValueError("need at least one process")
    return (n + 1) // 2


# --- canonical textual forms (used verbatim in traces and CLI output) ---

_ID_RE = re.compile(r"p(\d+)\.(\d+)")
_REG_RE = re.compile(r"<\[(.*)\],(\d+)>")
_TS_RE = re.compile(r"\((\d+),(\d+)\)")


def value_text(val) -> str:
    """Canonical text for a register value (phase or simple algorithm)."""
    if val is None:
        return BOT_TEXT
    if isinstance(val, Reg):
        return val.text()
    return str(val)  # simple algorithm: small int


def parse_id(text: str) -> GetTsId:
    m = _ID_RE.fullmatch(text)
    if not m:
        raise ValueError(f"bad getTS-id: {text!r}")
    return GetTsId(int(m.group(1)), int(m.group(2)))


def parse_value(text: str, algo: str):
    """Inverse of value_text for the given algorithm tag."""
    if algo == "simple":
        return int(text)
    if text == BOT_TEXT:
        return BOT
    m = _REG_RE.fullmatch(text)
    if not m:
        raise ValueError(f"bad register value: {text!r}")
    ids = tuple(parse_id(t) for t in m.group(1).split(",") if t)
    return Reg(ids, int(m.group(2)))


def parse_timestamp(text: str, algo: str) -> Timestamp:
    if algo == "simple":
        return SimpleTimestamp(int(text))
    m = _TS_RE.fullmatch(text)
    if not m:
        raise ValueError(f"bad timestamp: {text!r}")
    return PhaseTimestamp(int(m.group(1)), int(m.group(2)))
