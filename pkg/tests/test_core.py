"""Comparator laws, register-count formulas, and text round-trips."""

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsforge.core import (BOT, GetTsId, PhaseTimestamp, Reg, SimpleTimestamp,
                          compare, parse_id, parse_timestamp, parse_value,
                          registers_for_phase, registers_for_simple,
                          simple_compare, value_text)

PHASE_DOMAIN = [PhaseTimestamp(r, t)
                for r in range(6) for t in range(6)]
SIMPLE_DOMAIN = [SimpleTimestamp(v) for v in range(9)]


def _assert_strict_total_order(domain, less):
    for a in domain:
        assert not less(a, a)
    for a, b in itertools.permutations(domain, 2):
        assert less(a, b) != less(b, a) or a == b
        if a != b:
            assert less(a, b) or less(b, a)
    for a, b, c in itertools.permutations(domain, 3):
        if less(a, b) and less(b, c):
            assert less(a, c)


def test_compare_is_strict_total_order():
    _assert_strict_total_order(PHASE_DOMAIN, compare)


def test_simple_compare_is_strict_total_order():
    _assert_strict_total_order(SIMPLE_DOMAIN, simple_compare)


def test_compare_is_lexicographic():
    assert compare(PhaseTimestamp(1, 5), PhaseTimestamp(2, 0))
    assert compare(PhaseTimestamp(2, 0), PhaseTimestamp(2, 1))
    assert not compare(PhaseTimestamp(2, 1), PhaseTimestamp(2, 0))


@pytest.mark.parametrize("M,expected", [
    (1, 2), (2, 3), (3, 4), (4, 4), (5, 5), (7, 6), (8, 6),
    (9, 6), (16, 8), (32, 12), (36, 12), (64, 16), (100, 20),
])
def test_registers_for_phase(M, expected):
    assert registers_for_phase(M) == expected


@given(st.integers(min_value=1, max_value=10**6))
def test_registers_for_phase_is_smallest_sufficient(M):
    """m = ceil(2*sqrt(M)): (m/2)^2 covers M calls but ((m-1)/2)^2 does not."""
    m = registers_for_phase(M)
    assert m * m >= 4 * M
    assert (m - 1) * (m - 1) < 4 * M


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 2), (4, 2),
                                        (7, 4), (8, 4)])
def test_registers_for_simple(n, expected):
    assert registers_for_simple(n) == expected


def test_register_count_rejects_nonpositive():
    with pytest.raises(ValueError):
        registers_for_phase(0)
    with pytest.raises(ValueError):
        registers_for_simple(0)


def test_value_text_round_trip():
    val = Reg((GetTsId(1, 1), GetTsId(3, 2)), 2)
    assert value_text(val) == "<[p1.1,p3.2],2>"
    assert parse_value(value_text(val), "phase") == val
    assert parse_value("⊥", "phase") is BOT
    assert value_text(BOT) == "⊥"
    assert parse_value("2", "simple") == 2


@given(st.lists(st.tuples(st.integers(1, 99), st.integers(1, 99)),
                min_size=1, max_size=6),
       st.integers(0, 30))
def test_reg_text_round_trip_random(ids, rnd):
    val = Reg(tuple(GetTsId(p, s) for p, s in ids), rnd)
    assert parse_value(value_text(val), "phase") == val


def test_timestamp_text_round_trip():
    assert parse_timestamp("(3,1)", "phase") == PhaseTimestamp(3, 1)
    assert PhaseTimestamp(3, 1).text() == "(3,1)"
    assert parse_timestamp("4", "simple") == SimpleTimestamp(4)
    assert parse_id("p7.2") == GetTsId(7, 2)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_value("<[p1.1],x>", "phase")
    with pytest.raises(ValueError):
        parse_timestamp("3,1", "phase")
    with pytest.raises(ValueError):
        parse_id("q1.1")
