"""Exhaustive ground truth for tiny stub systems.

Everything here enumerates all pairings (and all root stubs) and counts with
exact integers and fractions. The closed-form counting expressions in
:func:`closed_form_report` are evaluated for comparison only; the
enumerated counts are the reference.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Iterable, Iterator

import numpy as np

from .configuration import OddStubCount, Pairing, StubSystem, build_stub_system
from .tree_code import _bfs

MAX_STUBS = 16


class TooLarge(ValueError):
    pass


def pairing_count(S: int) -> int:
    """``(S-1)!! = S! / ((S/2)! 2^(S/2))``."""
    if S < 0 or S % 2:
        raise OddStubCount(f"S={S} must be even and non-negative")
    return prod(range(S - 1, 0, -2))


def _mates(S: int) -> Iterator[list[int]]:
    # lowest free stub takes each later free stub in turn: lexicographic pair lists
    mate = [-1] * S

    def rec(s):
        while s < S and mate[s] >= 0:
            s += 1
        if s == S:
            yield mate
            return
        for t in range(s + 1, S):
            if mate[t] < 0:
                mate[s], mate[t] = t, s
                yield from rec(s + 1)
                mate[s] = mate[t] = -1

    yield from rec(0)


def _check_size(S: int) -> None:
    if S % 2:
        raise OddStubCount(f"S={S} is odd")
    if S > MAX_STUBS:
        raise TooLarge(f"S={S} exceeds the enumeration cap {MAX_STUBS}")


def enumerate_pairings(system: StubSystem | int) -> Iterator[Pairing]:
    S = system if isinstance(system, int) else system.S
    _check_size(S)
    for mate in _mates(S):
        yield Pairing(np.array(mate, dtype=np.int64))


def split_counts(system: StubSystem, part: Iterable[int]) -> tuple[int, int, int]:
    """``(pairings without a cross pair, #Pi(S_1) #Pi(S_2), #Pi(S))`` for the split ``part`` / rest."""
    _check_size(system.S)
    part = set(part)
    owner = system.stub_owner.tolist()
    side = [owner[s] in part for s in range(system.S)]
    S1 = sum(side)
    S2 = system.S - S1
    if S1 % 2 or S2 % 2:
        raise OddStubCount(f"split has odd stub totals ({S1}, {S2})")
    closed = sum(
        1 for mate in _mates(system.S) if all(side[s] == side[t] for s, t in enumerate(mate))
    )
    return closed, pairing_count(S1) * pairing_count(S2), pairing_count(system.S)


def split_factorization_check(system: StubSystem, part: Iterable[int]) -> bool:
    closed, product, _ = split_counts(system, part)
    return closed == product


@dataclass(frozen=True)
class RootedTally:
    """Counts of (pairing, root stub) by rooted code; ``None`` keys non-tree clusters."""

    counts: Counter
    pairings: int
    S: int
    tree_pairings: int  # pairings whose configuration is one spanning tree


@lru_cache(maxsize=64)
def _tally(degrees: tuple[int, ...]) -> RootedTally:
    system = build_stub_system(degrees)
    _check_size(system.S)
    first = system.vertex_first_stub.tolist()
    deg = list(degrees)
    owner = system.stub_owner.tolist()
    n = len(deg)
    counts: Counter = Counter()
    pairings = 0
    spanning = 0
    for mate in _mates(system.S):
        pairings += 1
        for s in range(system.S):
            out = _bfs(first, deg, owner, mate, s)
            counts[None if out is None else out[0]] += 1
        if system.S and n > 1:
            out = _bfs(first, deg, owner, mate, 0)
            spanning += out is not None and len(out[0]) == n
    return RootedTally(counts, pairings, system.S, spanning)


def rooted_tally(system: StubSystem) -> RootedTally:
    return _tally(tuple(system.degrees.degrees.tolist()))


def rooted_structure_count(system: StubSystem, code, spanning: bool = False) -> int:
    """Number of (pairing, root stub) whose rooted cluster has ``code``.

    With ``spanning`` the cluster must contain every vertex.
    """
    code = tuple(code)
    if spanning and len(code) != system.n:
        return 0
    return rooted_tally(system).counts.get(code, 0)


def exact_rho_expectation(system: StubSystem, code) -> Fraction:
    """``E[rho_n(code)]`` under the uniform pairing; ``code=None`` is the non-tree mass."""
    t = rooted_tally(system)
    if t.S == 0:
        return Fraction(0)
    key = None if code is None else tuple(code)
    return Fraction(t.counts.get(key, 0), t.pairings * t.S)


def exact_rho_table(system: StubSystem) -> dict:
    t = rooted_tally(system)
    return {c: Fraction(v, t.pairings * t.S) for c, v in t.counts.items()}


def multinomial_of(values: Iterable[int]) -> int:
    values = list(values)
    return factorial(len(values)) // prod(factorial(c) for c in Counter(values).values())


@dataclass(frozen=True)
class FormulaReport:
    rooted_count_closed_form: int
    variant: int
    enumerated: int
    tree_pairings_closed_form: int
    tree_pairings_enumerated: int

    def as_triple(self) -> tuple[int, int, int]:
        return self.rooted_count_closed_form, self.variant, self.enumerated


def closed_form_tree_pairing_count(system: StubSystem) -> int:
    """Closed-form count ``(k-1)! * prod d`` of pairings making the system one tree."""
    degs = system.degrees.degrees.tolist()
    return factorial(len(degs) - 1) * prod(degs)


def closed_form_report(system: StubSystem, code) -> FormulaReport:
    """Closed-form rooted-structure counts next to the enumerated ones (spanning case).

    ``rooted_count_closed_form`` is ``M * prod d`` with ``M = k! / prod(l_i!)`` over the
    degree multiplicities; ``variant`` is ``(k!/M) * prod d``, i.e. the
    number of vertex orderings realising the code times the choices of first stub.
    """
    code = tuple(code)
    degs = system.degrees.degrees.tolist()
    k = len(degs)
    if system.S != 2 * (k - 1):
        raise ValueError("closed forms only apply when S = 2(k-1)")
    M = multinomial_of(degs)
    pd = prod(degs)
    compatible = sorted(code) == sorted(degs)
    t = rooted_tally(system)
    return FormulaReport(
        rooted_count_closed_form=M * pd if compatible else 0,
        variant=factorial(k) // M * pd if compatible else 0,
        enumerated=rooted_structure_count(system, code, spanning=True),
        tree_pairings_closed_form=closed_form_tree_pairing_count(system),
        tree_pairings_enumerated=t.tree_pairings,
    )
