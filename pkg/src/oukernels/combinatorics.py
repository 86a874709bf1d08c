"""Exact integer combinatorics: Stirling numbers of the second kind,
falling factorials, multinomial coefficients and weak compositions.

All values are Python ints, so nothing overflows.
"""

from __future__ import annotations

import math
import threading
from typing import Iterator, Sequence


class MultiIndex(tuple):
    """A d-tuple of non-negative integers with order ``|alpha|`` and ``alpha!``."""

    def __new__(cls, components: Sequence[int]):
        comps = tuple(int(c) for c in components)
        if len(comps) < 1:
            raise ValueError("a multi-index needs at least one component")
        if any(c < 0 for c in comps):
            raise ValueError(f"multi-index components must be non-negative, got {comps}")
        return super().__new__(cls, comps)

    @property
    def d(self) -> int:
        return len(self)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        out = 1
        for c in self:
            out *= math.factorial(c)
        return out

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


class StirlingTable:
    """Triangular table of S(N, n) for 0 <= n <= N <= n_max.

    Rows are built with ``S(N, n) = n S(N-1, n) + S(N-1, n-1)``. Note the
    factor is the block count ``n``; a factor ``N`` would overcount
    (it gives S(2, 1) = 2 instead of the single partition {{1, 2}}).
    """

    def __init__(self, n_max: int):
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        rows = [(1,)]
        for N in range(1, n_max + 1):
            prev = rows[-1]
            row = [0] * (N + 1)
            for n in range(1, N + 1):
                left = prev[n] if n < N else 0
                row[n] = n * left + prev[n - 1]
            rows.append(tuple(row))
        self._rows = tuple(rows)

    @property
    def n_max(self) -> int:
        return len(self._rows) - 1

    def row(self, N: int) -> tuple[int, ...]:
        return self._rows[N]

    def __getitem__(self, key: tuple[int, int]) -> int:
        N, n = key
        if N < 0 or n < 0:
            raise ValueError("Stirling indices must be non-negative")
        if n > N:
            return 0
        return self._rows[N][n]


_table = StirlingTable(32)
_table_lock = threading.Lock()


def stirling_table(n_max: int) -> StirlingTable:
    """Shared table covering at least ``n_max`` rows (grown on demand)."""
    global _table
    if n_max > _table.n_max:
        with _table_lock:
            if n_max > _table.n_max:
                _table = StirlingTable(max(n_max, 2 * _table.n_max))
    return _table


def stirling2(N: int, n: int) -> int:
    """Number of partitions of an N-set into n non-empty blocks (0 when n > N)."""
    if N < 0 or n < 0:
        raise ValueError("Stirling indices must be non-negative")
    if n > N:
        return 0
    return stirling_table(N)[N, n]


def falling_factorial(j: int, n: int) -> int:
    """(j)_n = j (j-1) ... (j-n+1); 1 for n = 0 and 0 for n > j >= 0."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = 1
    for i in range(n):
        out *= j - i
    return out


def multinomial(N: int, parts: Sequence[int]) -> int:
    """N! / (n_1! ... n_d!) for a composition ``parts`` of N."""
    parts = MultiIndex(parts)
    if parts.order != N:
        raise ValueError(f"parts {tuple(parts)} do not sum to N={N}")
    out = 1
    running = 0
    for p in parts:
        running += p
        out *= math.comb(running, p)
    return out


def compositions(N: int, d: int) -> Iterator[MultiIndex]:
    """All d-tuples of non-negative integers summing to N, in lexicographic order.

    >>> [tuple(c) for c in compositions(2, 2)]
    [(0, 2), (1, 1), (2, 0)]
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if N < 0:
        return

    def rec(remaining: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining + 1):
            for rest in rec(remaining - first, slots - 1):
                yield (first,) + rest

    for comp in rec(N, d):
        yield MultiIndex(comp)


def check_stirling_generating(N_max: int, j_max: int) -> bool:
    """Exact check of j^N = sum_n S(N, n) (j)_n for all N <= N_max, j <= j_max."""
    table = stirling_table(N_max)
    for N in range(N_max + 1):
        row = table.row(N)
        for j in range(j_max + 1):
            rhs = sum(row[n] * falling_factorial(j, n) for n in range(N + 1))
            if j**N != rhs:
                return False
    return True


def partition_counts(N: int) -> list[int]:
    """Block-count histogram of all set partitions of {1..N}, by enumeration.

    Walks restricted growth strings (a_1 = 0, a_i <= 1 + max of earlier
    entries); entry n of the result counts partitions with n blocks.
    Exponential in N, so meant as an oracle for N around 10.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    counts = [0] * (N + 1)
    if N == 0:
        counts[0] = 1
        return counts

    def rec(i: int, blocks: int) -> None:
        if i == N:
            counts[blocks] += 1
            return
        for b in range(blocks + 1):
            rec(i + 1, max(blocks, b + 1))

    rec(1, 1)
    return counts


def stirling2_explicit(N: int, n: int) -> int:
    """S(N, n) = (1/n!) sum_i (-1)^(n-i) C(n, i) i^N, in exact integers."""
    if N < 0 or n < 0:
        raise ValueError("Stirling indices must be non-negative")
    total = sum((-1) ** (n - i) * math.comb(n, i) * i**N for i in range(n + 1))
    q, r = divmod(total, math.factorial(n))
    assert r == 0
    return q


def check_stirling_recursion(N_max: int) -> bool:
    """The recursively built table agrees with the explicit formula for N <= N_max."""
    table = stirling_table(N_max)
    return all(
        table[N, n] == stirling2_explicit(N, n) for N in range(N_max + 1) for n in range(N + 1)
    )
