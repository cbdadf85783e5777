"""Shared builders for tests: configurations from adjacency lists and relabelling."""

from __future__ import annotations

import numpy as np

from coagraph.configuration import Pairing, build_stub_system


def from_cyclic_adjacency(adjacency: dict, order=None, rotation=None):
    """Build ``(system, pairing, stub_of)`` from clockwise neighbour lists.

    ``adjacency[v]`` lists the neighbours of ``v`` in cyclic order (simple trees
    only). ``order`` fixes the vertex ids; ``rotation[v]`` shifts the stub index
    of each neighbour. ``stub_of[(u, w)]`` is the stub of ``u`` facing ``w``.
    """
    names = list(adjacency) if order is None else list(order)
    rotation = rotation or {}
    ids = {v: i for i, v in enumerate(names)}
    degrees = [len(adjacency[v]) for v in names]
    system = build_stub_system(degrees)
    first = system.vertex_first_stub.tolist()
    stub_of = {}
    for v in names:
        d = len(adjacency[v])
        for j, w in enumerate(adjacency[v]):
            stub_of[(v, w)] = first[ids[v]] + (j + rotation.get(v, 0)) % d
    mate = np.empty(system.S, dtype=np.int64)
    for (v, w), s in stub_of.items():
        mate[s] = stub_of[(w, v)]
    return system, Pairing(mate), stub_of


def relabel(system, pairing, perm, shifts):
    """Move vertex ``v`` to ``perm[v]`` and rotate its stubs by ``shifts[v]``.

    Cyclic stub orders are preserved, so every rooted code is unchanged.
    Returns the new system, pairing and the old-to-new stub map.
    """
    deg = system.degrees.degrees.tolist()
    new_deg = [0] * len(deg)
    for v, d in enumerate(deg):
        new_deg[perm[v]] = d
    new_system = build_stub_system(new_deg)
    nf = new_system.vertex_first_stub.tolist()
    of = system.vertex_first_stub.tolist()
    stub_map = np.empty(system.S, dtype=np.int64)
    for v, d in enumerate(deg):
        for j in range(d):
            stub_map[of[v] + j] = nf[perm[v]] + (j + shifts[v]) % d
    mate = np.empty(system.S, dtype=np.int64)
    mate[stub_map] = stub_map[pairing.mate]
    return new_system, Pairing(mate), stub_map
