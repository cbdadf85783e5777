"""Degree laws, their size-biased and offspring transforms, and finite degree sequences.

A degree law ``mu`` is a finitely supported probability on the positive integers.
Masses may be floats or :class:`fractions.Fraction`; every derived quantity keeps
the number type of its input, so exact laws stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

TOL = 1e-12


class NonProbability(ValueError):
    """Masses are negative or do not sum to one."""


class ZeroSupport(ValueError):
    """A law has no admissible atom (or a degree outside its domain)."""


def _atom(i) -> int:
    if int(i) != i:
        raise ZeroSupport(f"atom {i!r} is not an integer")
    return int(i)


def _check_masses(items, lowest):
    if not items:
        raise ZeroSupport("empty law")
    seen = set()
    for i, p in items:
        if int(i) != i or i < lowest:
            raise ZeroSupport(f"atom {i!r} outside the support domain (>= {lowest})")
        if i in seen:
            raise ZeroSupport(f"duplicate atom {i}")
        seen.add(i)
        if p < 0:
            raise NonProbability(f"negative mass {p!r} at {i}")
    total = sum(p for _, p in items)
    if abs(total - 1) > TOL:
        raise NonProbability(f"masses sum to {float(total)!r}, not 1")


@dataclass(frozen=True)
class DegreeLaw:
    """Finitely supported law on degrees ``i >= 1``.

    ``weights`` is a sorted tuple of ``(degree, mass)`` with positive masses only.
    """

    weights: tuple

    def __post_init__(self):
        items = tuple(sorted((_atom(i), p) for i, p in self.weights if p != 0))
        _check_masses(items, 1)
        object.__setattr__(self, "weights", items)

    @property
    def support_max(self) -> int:
        return self.weights[-1][0]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.weights)

    @property
    def m(self):
        return sum(i * p for i, p in self.weights)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for _, p in self.weights)

    def __call__(self, i: int):
        return dict(self.weights).get(i, 0)

    def as_dict(self) -> dict:
        return dict(self.weights)

    def __str__(self) -> str:
        return format_law(self)


@dataclass(frozen=True)
class OffspringLaw:
    """Law of a child count ``i >= 0`` (the shifted size-biased degree law)."""

    weights: tuple

    def __post_init__(self):
        items = tuple(sorted((_atom(i), p) for i, p in self.weights if p != 0))
        _check_masses(items, 0)
        object.__setattr__(self, "weights", items)

    @property
    def support_max(self) -> int:
        return self.weights[-1][0]

    @property
    def mean(self):
        return sum(i * p for i, p in self.weights)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for _, p in self.weights)

    def __call__(self, i: int):
        return dict(self.weights).get(i, 0)

    def pmf(self, dtype=float) -> np.ndarray:
        """Dense mass vector indexed by child count ``0..support_max``."""
        out = np.zeros(self.support_max + 1, dtype=dtype)
        if dtype is object:
            out[:] = 0
        for i, p in self.weights:
            out[i] = p
        return out

    def is_subcritical_or_critical(self) -> bool:
        return self.mean <= 1 + TOL

    def is_dirac_one(self) -> bool:
        return len(self.weights) == 1 and self.weights[0][0] == 1


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("degree sequence must be a non-empty 1-d array")
        if (d < 1).any():
            raise ValueError("every degree must be >= 1")
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def S(self) -> int:
        return int(self.degrees.sum())

    def empirical_law(self) -> dict[int, float]:
        vals, counts = np.unique(self.degrees, return_counts=True)
        return {int(v): c / self.n for v, c in zip(vals, counts)}

    def __len__(self):
        return self.n


def from_probabilities(weights: Iterable[tuple[int, float]] | Mapping[int, float]) -> DegreeLaw:
    if isinstance(weights, Mapping):
        weights = weights.items()
    return DegreeLaw(tuple(weights))


def size_biased(law: DegreeLaw) -> DegreeLaw:
    m = law.m
    return DegreeLaw(tuple((i, i * p / m) for i, p in law.weights))


def offspring_law(law: DegreeLaw) -> OffspringLaw:
    return OffspringLaw(tuple((i - 1, p) for i, p in size_biased(law).weights))


def criticality(law: DegreeLaw):
    """``sum_i i(i-2) mu(i)``; negative is subcritical, zero critical."""
    return sum(i * (i - 2) * p for i, p in law.weights)


def degree_sequence(law: DegreeLaw, n: int, mode: str = "quota", seed: int = 0) -> DegreeSequence:
    """Materialise ``n`` degrees from ``law``.

    ``quota`` gives ``floor(n mu(i))`` vertices of degree ``i`` and hands the
    leftover vertices out by largest remainder (ties to the smaller degree);
    ``iid`` draws independently with ``seed``. An odd stub total is fixed by
    giving the last vertex one extra stub.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "quota":
        counts = {}
        rems = []
        for i, p in law.weights:
            target = n * p
            c = math.floor(target)
            counts[i] = c
            rems.append((-(target - c), i))
        left = n - sum(counts.values())
        for _, i in sorted(rems)[:left]:
            counts[i] += 1
        degrees = np.repeat(np.array(list(counts), dtype=np.int64), list(counts.values()))
    elif mode == "iid":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        support = np.array(law.support, dtype=np.int64)
        probs = np.array([float(p) for _, p in law.weights])
        degrees = rng.choice(support, size=n, p=probs / probs.sum())
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if degrees.sum() % 2:
        degrees[-1] += 1
    return DegreeSequence(degrees)


def truncated_poisson(p: float, tail: float = TOL) -> OffspringLaw:
    """Poisson(p) offspring law cut where the remaining tail is below ``tail``, renormalised."""
    if p < 0:
        raise ValueError("p must be >= 0")
    if p == 0:
        return OffspringLaw(((0, 1.0),))
    masses = []
    pk = math.exp(-p)
    acc = 0.0
    k = 0
    while 1.0 - acc >= tail or k <= p:
        masses.append(pk)
        acc += pk
        k += 1
        pk *= p / k
    total = sum(masses)
    return OffspringLaw(tuple((i, q / total) for i, q in enumerate(masses)))


def geometric_offspring(q: float, tail: float = TOL) -> OffspringLaw:
    """``nu(j) = (1-q) q^j``, truncated and renormalised like :func:`truncated_poisson`."""
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    jmax = 0 if q == 0 else int(math.ceil(math.log(tail) / math.log(q)))
    masses = [(1 - q) * q**j for j in range(jmax + 1)]
    total = sum(masses)
    return OffspringLaw(tuple((j, x / total) for j, x in enumerate(masses)))


def _parse_mass(s: str):
    return Fraction(s) if "/" in s else float(s)


def parse_law(text: str) -> DegreeLaw:
    """Parse ``"1:0.8,3:0.2"``; masses written as ``a/b`` are kept exact."""
    items = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            i, p = chunk.split(":")
            items.append((int(i), _parse_mass(p.strip())))
        except ValueError as exc:
            raise ValueError(f"bad law entry {chunk!r}; expected 'degree:mass'") from exc
    return from_probabilities(items)


def _format_mass(p) -> str:
    if isinstance(p, Fraction):
        return str(p)
    return repr(float(p))


def format_law(law: DegreeLaw) -> str:
    return ",".join(f"{i}:{_format_mass(p)}" for i, p in law.weights)


def parse_offspring(text: str) -> OffspringLaw:
    """Same text form as degree laws, atoms starting at 0."""
    items = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        i, p = chunk.split(":")
        items.append((int(i), _parse_mass(p.strip())))
    return OffspringLaw(tuple(items))


def format_offspring(nu: OffspringLaw) -> str:
    return ",".join(f"{i}:{_format_mass(p)}" for i, p in nu.weights)
