"""Brute-force oracles shared by the tests. Deliberately naive."""

from itertools import combinations

import pytest
from hypothesis import settings

from partcons import Partition

settings.register_profile("ci", max_examples=150, deadline=None)
settings.load_profile("ci")


def brute_partitions(n):
    """All partitions of 1..n as frozensets of frozensets, by block insertion."""
    if n == 0:
        return [frozenset()]
    out = []
    for p in brute_partitions(n - 1):
        blocks = list(p)
        out.append(p | {frozenset({n})})
        for b in blocks:
            out.append((p - {b}) | {b | {n}})
    return out


def blocks_of(p: Partition):
    return frozenset(frozenset(c) for c in p.clusters())


def co_pairs(blocks):
    return {pair for b in blocks for pair in combinations(sorted(b), 2)}


def brute_uncd(a, b):
    """Pairs together in exactly one of the two partitions."""
    return len(co_pairs(blocks_of(a)) ^ co_pairs(blocks_of(b)))


@pytest.fixture
def oracle():
    class O:
        partitions = staticmethod(brute_partitions)
        uncd = staticmethod(brute_uncd)
        blocks = staticmethod(blocks_of)

    return O


# acceptance lines, printed in the terminal summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []
ACCEPTANCE_NOTES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        tr.write_line(line)
    if ACCEPTANCE_NOTES:
        tr.section("acceptance notes")
        for line in ACCEPTANCE_NOTES:
            tr.write_line(line)
