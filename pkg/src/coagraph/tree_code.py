"""Breadth-first degree codes of planar rooted trees.

A code is a tuple ``(d_1, ..., d_k)`` of positive integers whose partial sums
stay strictly above ``2(j-1)`` until they reach ``2(k-1)`` at ``j = k``.
The stubs of a vertex are cyclically ordered by their index; when a tree is
rooted, the origin's stubs are read from the root stub onward and every other
vertex's stubs from the one pointing back towards the origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .configuration import Pairing, StubSystem, build_stub_system

TreeCode = tuple


class InvalidCode(ValueError):
    pass


class StubOutOfRange(IndexError):
    pass


def is_valid_code(d) -> bool:
    try:
        d = [int(x) for x in d]
    except (TypeError, ValueError):
        return False
    k = len(d)
    if k < 2 or min(d) < 1:
        return False
    p = 0
    for j, x in enumerate(d[:-1], start=1):
        p += x
        if p <= 2 * (j - 1):
            return False
    return p + d[-1] == 2 * (k - 1)


def _checked(code) -> TreeCode:
    if not is_valid_code(code):
        raise InvalidCode(f"{tuple(code)!r} is not a tree code")
    return tuple(int(x) for x in code)


def stub_count(code: TreeCode) -> int:
    return 2 * (len(code) - 1)


def format_code(code: TreeCode | None) -> str:
    return "" if code is None else ",".join(map(str, code))


def parse_code(text: str) -> TreeCode:
    return _checked(tuple(int(x) for x in text.split(",")))


def _bfs(first, deg, owner, mate, root):
    """BFS from ``root``; returns ``(code, visits)`` or None if the cluster is not a tree.

    ``visits`` lists ``(vertex, anchor_stub)`` in visit order; works on plain lists.
    """
    origin = owner[root]
    seen = {origin}
    visits = [(origin, root)]
    i = 0
    while i < len(visits):
        v, anchor = visits[i]
        i += 1
        f, dv = first[v], deg[v]
        start = anchor - f
        for j in range(0 if i == 1 else 1, dv):
            t = mate[f + (start + j) % dv]
            w = owner[t]
            if w in seen:
                return None
            seen.add(w)
            visits.append((w, t))
    return tuple(deg[v] for v, _ in visits), visits


def encode(system: StubSystem, pairing: Pairing, root_stub: int) -> TreeCode | None:
    """Code of the cluster of ``root_stub`` rooted there; ``None`` when that cluster is not a tree."""
    if not 0 <= root_stub < system.S:
        raise StubOutOfRange(root_stub)
    out = _bfs(
        system.vertex_first_stub.tolist(),
        system.degrees.degrees.tolist(),
        system.stub_owner.tolist(),
        pairing.mate.tolist(),
        int(root_stub),
    )
    return None if out is None else out[0]


class Encoder:
    """Reusable encoder holding list copies of a system and pairing.

    Calling :func:`encode` per stub re-converts the arrays; this avoids that
    when every stub of a large configuration is classified.
    """

    def __init__(self, system: StubSystem, pairing: Pairing):
        self.first = system.vertex_first_stub.tolist()
        self.deg = system.degrees.degrees.tolist()
        self.owner = system.stub_owner.tolist()
        self.mate = pairing.mate.tolist()

    def __call__(self, root_stub: int) -> TreeCode | None:
        out = _bfs(self.first, self.deg, self.owner, self.mate, root_stub)
        return None if out is None else out[0]


@dataclass(frozen=True)
class PlanarTree:
    """Canonical planar tree of a code; positions are BFS positions.

    Slot 0 of every non-origin vertex points at its parent; slot 0 of the
    origin is the root stub.
    """

    degrees: TreeCode
    parent: tuple
    children: tuple
    parent_stub_slot: tuple

    @property
    def k(self) -> int:
        return len(self.degrees)

    def to_configuration(self) -> tuple[StubSystem, Pairing]:
        """Stub system in (position, slot) order together with the pairing of the tree."""
        _, _, mate = _layout(self.degrees)
        return build_stub_system(self.degrees), Pairing(np.array(mate, dtype=np.int64))


def decode(code) -> PlanarTree:
    code = _checked(code)
    k = len(code)
    parent = [-1] * k
    children = [[] for _ in range(k)]
    nxt = 1
    for v in range(k):
        n_kids = code[v] if v == 0 else code[v] - 1
        for _ in range(n_kids):
            parent[nxt] = v
            children[v].append(nxt)
            nxt += 1
    slots = tuple(None if v == 0 else 0 for v in range(k))
    return PlanarTree(code, tuple(parent), tuple(tuple(c) for c in children), slots)


def _layout(code: TreeCode) -> tuple[list[int], list[int], list[int]]:
    """``(first, owner, mate)`` lists of the canonical tree of a valid code."""
    first = [0] * len(code)
    for v in range(1, len(code)):
        first[v] = first[v - 1] + code[v - 1]
    owner = [v for v, d in enumerate(code) for _ in range(d)]
    mate = [0] * (2 * (len(code) - 1))
    nxt = 1
    for v, d in enumerate(code):
        for slot in range(0 if v == 0 else 1, d):
            a, b = first[v] + slot, first[nxt]
            mate[a], mate[b] = b, a
            nxt += 1
    return first, owner, mate


def reroot_with_map(code, stub: int) -> tuple[TreeCode, list[int]]:
    """Re-root at ``stub``; also return where every old stub index lands."""
    code = _checked(code)
    first, owner, mate = _layout(code)
    if not 0 <= stub < len(mate):
        raise StubOutOfRange(f"stub {stub} not in 0..{len(mate) - 1}")
    new_code, visits = _bfs(first, code, owner, mate, stub)
    new_first = [0] * len(code)
    for pos in range(1, len(code)):
        new_first[pos] = new_first[pos - 1] + new_code[pos - 1]
    stub_map = [0] * len(mate)
    for pos, (v, anchor) in enumerate(visits):
        d = code[v]
        for s in range(first[v], first[v] + d):
            stub_map[s] = new_first[pos] + (s - anchor) % d
    return new_code, stub_map


def reroot(code, stub: int) -> TreeCode:
    return reroot_with_map(code, stub)[0]


def enumerate_codes(k: int, allowed: Sequence[int] | None = None) -> Iterator[TreeCode]:
    """All codes of length ``k`` in lexicographic order, optionally with degrees in ``allowed``."""
    if k < 2:
        return
    total = 2 * (k - 1)
    allowed_set = None if allowed is None else set(allowed)
    prefix: list[int] = []

    def rec(j, p):
        # j entries placed, partial sum p
        if j == k - 1:
            last = total - p
            if last >= 1 and (allowed_set is None or last in allowed_set):
                yield tuple(prefix) + (last,)
            return
        # need p + x > 2j and leave at least one per remaining slot
        lo = max(1, 2 * j + 1 - p)
        hi = total - p - (k - 1 - j)
        for x in range(lo, hi + 1):
            if allowed_set is not None and x not in allowed_set:
                continue
            prefix.append(x)
            yield from rec(j + 1, p + x)
            prefix.pop()

    yield from rec(0, 0)
