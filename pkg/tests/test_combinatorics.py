import math

import pytest
from hypothesis import given, strategies as st

from oukernels.combinatorics import (
    MultiIndex,
    StirlingTable,
    check_stirling_generating,
    check_stirling_recursion,
    compositions,
    falling_factorial,
    multinomial,
    partition_counts,
    stirling2,
    stirling2_explicit,
    stirling_table,
)

# OEIS A000110
BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975]


def brute_partitions(N):
    """Histogram of block counts over all set partitions, built by inserting
    each element into an existing block or a new one."""
    parts = [[]]
    for e in range(N):
        nxt = []
        for p in parts:
            for i in range(len(p)):
                nxt.append(p[:i] + [p[i] + [e]] + p[i + 1:])
            nxt.append(p + [[e]])
        parts = nxt
    counts = [0] * (N + 1)
    for p in parts:
        counts[len(p)] += 1
    return counts


@pytest.mark.parametrize("N", range(9))
def test_table_matches_brute_force(N):
    assert list(stirling_table(N).row(N)) == brute_partitions(N)


@pytest.mark.parametrize("N", range(11))
def test_row_sums_are_bell_numbers(N):
    assert sum(stirling_table(N).row(N)) == BELL[N]
    assert sum(partition_counts(N)) == BELL[N]


def test_known_values():
    assert stirling2(0, 0) == 1
    assert stirling2(4, 2) == 7
    assert stirling2(5, 3) == 25
    assert stirling2(10, 5) == 42525
    assert stirling2(3, 5) == 0
    assert stirling2(5, 0) == 0


def test_factor_is_block_count():
    # one way to put {1, 2} in a single block; a factor N would give 2
    assert stirling2(2, 1) == 1
    assert StirlingTable(3)[3, 2] == 3


def test_big_values_exact():
    assert stirling2(25, 12) == stirling2_explicit(25, 12)
    assert stirling2(30, 15) > 2**63
    assert stirling2(60, 30) == stirling2_explicit(60, 30)


def test_generating_and_recursion_checks():
    assert check_stirling_generating(0, 5)
    assert check_stirling_generating(20, 20)
    assert check_stirling_recursion(30)


def test_negative_indices_rejected():
    with pytest.raises(ValueError):
        stirling2(-1, 0)
    with pytest.raises(ValueError):
        StirlingTable(-1)


def test_falling_factorial():
    assert falling_factorial(5, 0) == 1
    assert falling_factorial(5, 2) == 20
    assert falling_factorial(3, 5) == 0
    assert falling_factorial(20, 20) == math.factorial(20)


def test_multinomial():
    assert multinomial(4, (2, 1, 1)) == 12
    assert multinomial(0, (0, 0)) == 1
    with pytest.raises(ValueError):
        multinomial(3, (1, 1))


def test_compositions_order_and_count():
    assert [tuple(c) for c in compositions(2, 2)] == [(0, 2), (1, 1), (2, 0)]
    for N in range(7):
        for d in range(1, 5):
            comps = list(compositions(N, d))
            assert len(comps) == math.comb(N + d - 1, d - 1)
            assert len(set(comps)) == len(comps)
            assert all(c.order == N and c.d == d for c in comps)
            assert comps == sorted(comps)


def test_compositions_bad_dimension():
    with pytest.raises(ValueError):
        list(compositions(2, 0))


def test_multi_index():
    a = MultiIndex([2, 0, 3])
    assert a.d == 3 and a.order == 5 and a.factorial == 12
    with pytest.raises(ValueError):
        MultiIndex([1, -1])
    with pytest.raises(ValueError):
        MultiIndex([])


@given(st.integers(0, 9), st.integers(1, 4))
def test_multinomial_theorem(N, d):
    assert sum(multinomial(N, c) for c in compositions(N, d)) == d**N


@given(st.integers(0, 15), st.integers(0, 15))
def test_power_as_falling_factorials(N, j):
    assert j**N == sum(stirling2(N, n) * falling_factorial(j, n) for n in range(N + 1))
