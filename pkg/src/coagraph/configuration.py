"""Stub systems, uniform pairings and the clusters of the induced multigraph."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .degree_model import DegreeSequence


class OddStubCount(ValueError):
    pass


@dataclass(frozen=True)
class StubSystem:
    """Consecutive stub layout: vertex ``v`` owns ``[first[v], first[v] + d[v])``."""

    degrees: DegreeSequence
    stub_owner: np.ndarray
    vertex_first_stub: np.ndarray

    @property
    def n(self) -> int:
        return self.degrees.n

    @property
    def S(self) -> int:
        return int(self.stub_owner.size)

    def stubs_of(self, v: int) -> range:
        f = int(self.vertex_first_stub[v])
        return range(f, f + int(self.degrees.degrees[v]))


@dataclass(frozen=True)
class Pairing:
    """Fixed-point-free involution on stub indices."""

    mate: np.ndarray

    def __post_init__(self):
        mate = np.asarray(self.mate, dtype=np.int64)
        idx = np.arange(mate.size)
        if mate.size % 2 or (mate.size and ((mate < 0).any() or (mate >= mate.size).any())):
            raise ValueError("mate must map {0..S-1} into itself with S even")
        if (mate[mate] != idx).any() or (mate == idx).any():
            raise ValueError("mate is not a fixed-point-free involution")
        mate.setflags(write=False)
        object.__setattr__(self, "mate", mate)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], S: int | None = None) -> "Pairing":
        pairs = list(pairs)
        if S is None:
            S = 2 * len(pairs)
        mate = np.full(S, -1, dtype=np.int64)
        for s, t in pairs:
            mate[s] = t
            mate[t] = s
        return cls(mate)

    def __eq__(self, other) -> bool:
        return isinstance(other, Pairing) and np.array_equal(self.mate, other.mate)

    def __hash__(self) -> int:
        return hash(self.mate.tobytes())

    def pairs(self) -> list[tuple[int, int]]:
        return [(s, int(t)) for s, t in enumerate(self.mate) if s < t]

    @property
    def S(self) -> int:
        return int(self.mate.size)


def build_stub_system(degrees: DegreeSequence | Iterable[int]) -> StubSystem:
    if not isinstance(degrees, DegreeSequence):
        degrees = DegreeSequence(np.asarray(list(degrees), dtype=np.int64))
    d = degrees.degrees
    if d.sum() % 2:
        raise OddStubCount(f"total stub count {int(d.sum())} is odd")
    owner = np.repeat(np.arange(d.size, dtype=np.int64), d)
    first = np.concatenate(([0], np.cumsum(d)[:-1])).astype(np.int64)
    owner.setflags(write=False)
    first.setflags(write=False)
    return StubSystem(degrees, owner, first)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def uniform_pairing(system: StubSystem, seed) -> Pairing:
    """Shuffle the stubs and pair shuffled positions ``(2i, 2i+1)``.

    ``seed`` is an int, a SeedSequence, or an existing Generator (consumed in place).
    """
    S = system.S
    if S % 2:
        raise OddStubCount(f"total stub count {S} is odd")
    perm = _rng(seed).permutation(S)
    mate = np.empty(S, dtype=np.int64)
    mate[perm[0::2]] = perm[1::2]
    mate[perm[1::2]] = perm[0::2]
    return Pairing(mate)


@dataclass(frozen=True)
class ClusterSummary:
    vertex_count: int
    edge_count: int
    loop_count: int
    multi_edge_excess: int
    is_tree: bool
    member_vertices: np.ndarray


@dataclass(frozen=True)
class ClusterPartition:
    """Columnar per-cluster diagnostics; cluster ids follow their smallest vertex."""

    cluster_of: np.ndarray
    vertex_count: np.ndarray
    edge_count: np.ndarray
    loop_count: np.ndarray
    multi_edge_excess: np.ndarray
    is_tree: np.ndarray
    _order: np.ndarray
    _offsets: np.ndarray

    def __len__(self) -> int:
        return int(self.vertex_count.size)

    def members(self, c: int) -> np.ndarray:
        return self._order[self._offsets[c] : self._offsets[c + 1]]

    def summary(self, c: int) -> ClusterSummary:
        return ClusterSummary(
            int(self.vertex_count[c]),
            int(self.edge_count[c]),
            int(self.loop_count[c]),
            int(self.multi_edge_excess[c]),
            bool(self.is_tree[c]),
            self.members(c),
        )

    @property
    def clusters(self) -> list[ClusterSummary]:
        return [self.summary(c) for c in range(len(self))]

    def __iter__(self) -> Iterator[ClusterSummary]:
        return (self.summary(c) for c in range(len(self)))


# below this many vertices scipy's per-call overhead outweighs the search itself
SMALL_GRAPH = 256


def _labels_small(system: StubSystem, mate: np.ndarray) -> np.ndarray:
    owner = system.stub_owner.tolist()
    mate_l = mate.tolist()
    first = system.vertex_first_stub.tolist() + [system.S]
    label = [-1] * system.n
    cid = 0
    for v0 in range(system.n):
        if label[v0] >= 0:
            continue
        label[v0] = cid
        stack = [v0]
        while stack:
            v = stack.pop()
            for s in range(first[v], first[v + 1]):
                w = owner[mate_l[s]]
                if label[w] < 0:
                    label[w] = cid
                    stack.append(w)
        cid += 1
    return np.array(label, dtype=np.int64)


def _component_labels(system: StubSystem, mate: np.ndarray) -> np.ndarray:
    """Component index per vertex, numbered in order of each component's lowest vertex."""
    if system.n < SMALL_GRAPH:
        return _labels_small(system, mate)
    # stubs of a vertex are consecutive, so the stub layout already is a CSR row layout
    indptr = np.append(system.vertex_first_stub, system.S)
    adj = sparse.csr_matrix((np.ones(system.S), system.stub_owner[mate], indptr), shape=(system.n, system.n))
    _, label = csgraph.connected_components(adj, directed=False)
    return label.astype(np.int64)


def clusters(system: StubSystem, pairing: Pairing) -> ClusterPartition:
    if pairing.S != system.S:
        raise ValueError("pairing and stub system disagree on S")
    n = system.n
    mate = pairing.mate
    label = _component_labels(system, mate)
    nc = int(label.max()) + 1 if n else 0

    owner = system.stub_owner
    vcount = np.bincount(label, minlength=nc)
    stub_total = np.bincount(label, weights=system.degrees.degrees, minlength=nc).astype(np.int64)
    edges = stub_total // 2

    s = np.arange(system.S)
    lo = s < mate
    u, w = owner[s[lo]], owner[mate[lo]]
    is_loop = u == w
    loops = np.bincount(label[u[is_loop]], minlength=nc)

    # excess = non-loop edges minus distinct unordered vertex pairs
    a, b = np.minimum(u[~is_loop], w[~is_loop]), np.maximum(u[~is_loop], w[~is_loop])
    plain = np.bincount(label[a], minlength=nc)
    distinct_keys = np.unique(a * n + b)
    distinct = np.bincount(label[distinct_keys // n], minlength=nc) if distinct_keys.size else np.zeros(nc, int)
    excess = plain - distinct

    is_tree = (loops == 0) & (edges == vcount - 1)
    order = np.argsort(label, kind="stable")
    offsets = np.concatenate(([0], np.cumsum(vcount)))
    return ClusterPartition(label, vcount, edges, loops, excess, is_tree, order, offsets)


def cluster_size_counts(partition: ClusterPartition) -> dict[int, int]:
    return dict(sorted(Counter(partition.vertex_count.tolist()).items()))


def format_pairing(pairing: Pairing) -> str:
    """One ``"s t"`` line per pair with ``s < t``, sorted by ``s``."""
    return "".join(f"{s} {t}\n" for s, t in pairing.pairs())


def parse_pairing(text: str, S: int | None = None) -> Pairing:
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            s, t = map(int, line.split())
            pairs.append((s, t))
    return Pairing.from_pairs(pairs, S)
