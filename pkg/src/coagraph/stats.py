"""Small statistical helpers shared by the samplers and experiments."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np
from scipy import stats as _st

# two-sided normal tail at 4 sigma
FOUR_SIGMA_P = 2 * _st.norm.sf(4.0)


@dataclass
class RunningMoments:
    """Welford accumulator; ``merge`` is associative up to rounding."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        n = self.count + other.count
        if n == 0:
            return RunningMoments()
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        return RunningMoments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count else 0.0


def within_sigmas(mean: float, target: float, se: float, k: float = 4.0) -> bool:
    """``|mean - target| <= k se``; with ``se == 0`` only exact agreement passes."""
    if se == 0:
        return abs(mean - target) <= 1e-12
    return abs(mean - target) <= k * se


def z_score(mean: float, target: float, se: float) -> float:
    if se == 0:
        return 0.0 if abs(mean - target) <= 1e-12 else float("inf")
    return (mean - target) / se


def frequencies(samples: Iterable[Hashable]) -> tuple[Counter, int]:
    c = Counter(samples)
    return c, sum(c.values())


def tv_restricted(p: Mapping, q: Mapping, keys: Iterable) -> float:
    """Half the L1 distance between ``p`` and ``q`` over ``keys`` only."""
    return 0.5 * float(sum(abs(float(p.get(x, 0)) - float(q.get(x, 0))) for x in keys))


def tv_null_band(probs: Iterable[float], n: int, *, two_sample: bool, seed: int = 0,
                 reps: int = 400, sigmas: float = 4.0) -> float:
    """Mean plus ``sigmas`` standard deviations of the restricted TV under the null.

    ``probs`` are the tracked cell probabilities; their complement is an
    untracked lump. Null replicates are multinomial draws of size ``n``:
    against the exact law (one sample) or against a second draw (two sample).
    """
    probs = np.asarray([float(x) for x in probs])
    rest = max(0.0, 1.0 - probs.sum())
    cells = np.append(probs, rest)
    cells = cells / cells.sum()
    rng = np.random.default_rng(seed)
    a = rng.multinomial(n, cells, size=reps)[:, :-1] / n
    b = rng.multinomial(n, cells, size=reps)[:, :-1] / n if two_sample else probs[None, :]
    tv = 0.5 * np.abs(a - b).sum(axis=1)
    return float(tv.mean() + sigmas * tv.std(ddof=1))


@dataclass
class LawComparison:
    """Empirical code law against a reference law, restricted to tracked codes."""

    rows: list = field(default_factory=list)  # (code, empirical, reference)
    tv: float = 0.0
    band: float = 0.0
    samples: int = 0
    censored: int = 0

    @property
    def passed(self) -> bool:
        return self.tv <= self.band
