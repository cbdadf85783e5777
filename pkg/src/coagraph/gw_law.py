"""The two-ancestor Galton-Watson law on tree codes: exact masses, Dwass sizes, sampling.

Exact (``Fraction``) offspring laws give exact results throughout; float laws
give floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .degree_model import DegreeLaw, OffspringLaw, offspring_law, truncated_poisson
from .stats import LawComparison, frequencies, tv_null_band, tv_restricted
from .tree_code import InvalidCode, enumerate_codes, is_valid_code


class Outcome(enum.Enum):
    CENSORED = "censored"


CENSORED = Outcome.CENSORED
DEFAULT_SIZE_CAP = 10**6


@dataclass(frozen=True)
class Distribution:
    """Finite law on ``0..len(weights)-1``; ``shed`` is mass cut off beyond the cap."""

    weights: np.ndarray
    shed: object = 0

    def __call__(self, i: int):
        if 0 <= i < len(self.weights):
            return self.weights[i]
        return 0

    @property
    def total(self):
        return sum(self.weights.tolist())


def gw2_mass(code, nu: OffspringLaw):
    if not is_valid_code(code):
        raise InvalidCode(f"{tuple(code)!r} is not a tree code")
    table = dict(nu.weights)
    return prod(table.get(int(d) - 1, 0) for d in code)


def single_ancestor_mass(code, nu: OffspringLaw):
    """Law of the code read off a one-ancestor tree conditioned on size >= 2.

    The ancestor's first child stands in for the second ancestor, so the code
    ``(c_1, c_2 + 1, ..., c_k + 1)`` has mass
    ``nu(d_1) prod_{i >= 2} nu(d_i - 1) / (1 - nu(0))``.
    """
    if not is_valid_code(code):
        raise InvalidCode(f"{tuple(code)!r} is not a tree code")
    table = dict(nu.weights)
    alive = 1 - table.get(0, 0)
    if alive == 0:
        return 0 * alive
    return table.get(int(code[0]), 0) * prod(table.get(int(d) - 1, 0) for d in code[1:]) / alive


def _convolve(a: np.ndarray, b: np.ndarray, cap: int):
    full = np.convolve(a, b)
    return full[: cap + 1], sum(full[cap + 1 :].tolist())


def convolution_power(nu: OffspringLaw, k: int, cap: int | None = None) -> Distribution:
    """``nu^{*k}`` on ``0..cap`` by iterated convolution; mass above ``cap`` is reported as shed."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if cap is None:
        cap = k * nu.support_max
    dtype = object if nu.is_exact else float
    base = nu.pmf(dtype)
    out = base[: cap + 1].copy()
    shed = sum(base[cap + 1 :].tolist())
    for _ in range(k - 1):
        out, extra = _convolve(out, base, cap)
        shed += extra
    if len(out) < cap + 1:
        pad = np.zeros(cap + 1 - len(out), dtype=dtype)
        if dtype is object:
            pad[:] = 0
        out = np.concatenate((out, pad))
    return Distribution(out, shed)


def dwass_total_progeny(nu: OffspringLaw, k: int):
    """``P(T_2 = k) = (2/k) nu^{*k}(k-2)``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    conv = convolution_power(nu, k, cap=k - 2)(k - 2)
    return Fraction(2, k) * conv if nu.is_exact else 2.0 / k * conv


def limit_concentration(mu: DegreeLaw, k: int):
    """Limiting ``C_n(k)/n``: ``m / (k(k-1)) * nu^{*k}(k-2)`` with ``nu`` the offspring law of ``mu``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    nu = offspring_law(mu)
    conv = convolution_power(nu, k, cap=k - 2)(k - 2)
    if mu.is_exact:
        return mu.m * Fraction(1, k * (k - 1)) * conv
    return float(mu.m) / (k * (k - 1)) * conv


def exact_code_law(nu: OffspringLaw, max_size: int) -> dict:
    """``gw2_mass`` of every code of length ``2..max_size`` with positive mass."""
    allowed = [i + 1 for i, p in nu.weights if p > 0]
    out = {}
    for k in range(2, max_size + 1):
        for code in enumerate_codes(k, allowed):
            out[code] = gw2_mass(code, nu)
    return out


# --- sampling -------------------------------------------------------------------


def _split_excursions(steps: np.ndarray, depth: int):
    """Cut a skip-free walk into pieces ending at the first hits of ``-depth, -2 depth, ...``.

    Returns the end index (exclusive) of every completed piece.
    """
    w = np.cumsum(steps)
    # the walk starts at level 0, so minima are only new once below it
    runmin = np.minimum.accumulate(np.minimum(w, 0))
    prev = np.concatenate(([0], runmin[:-1]))
    new_min = runmin < prev
    ends = np.flatnonzero(new_min & (w % depth == 0)) + 1
    return ends


class _OffspringSampler:
    def __init__(self, nu: OffspringLaw, rng: np.random.Generator):
        self.cdf = np.cumsum(nu.pmf(float))
        self.cdf[-1] = np.inf
        self.rng = rng

    def draw(self, size: int) -> np.ndarray:
        return np.searchsorted(self.cdf, self.rng.random(size), side="right")


def _walk_codes(nu, samples, rng, size_cap, depth, stop_after_censored=None):
    """Codes of ``samples`` trees read off a child-count stream.

    ``depth`` is the number of ancestors: the tree ends when the walk of
    ``children - 1`` first reaches ``-depth``. Trees longer than ``size_cap``
    come back as CENSORED.
    """
    sampler = _OffspringSampler(nu, rng)
    out = []
    censored = 0
    carry = np.empty(0, dtype=np.int64)
    # a censored tree costs about one chunk, so keep chunks near the cap when it is small
    chunk_size = int(min(1 << 16, max(1 << 10, 8 * size_cap)))
    while len(out) < samples:
        chunk = sampler.draw(max(chunk_size, len(carry)))
        stream = np.concatenate((carry, chunk))
        ends = _split_excursions(stream - 1, depth)
        start = 0
        for e in ends.tolist():
            if e - start > size_cap:
                out.append(CENSORED)
                censored += 1
            else:
                out.append(stream[start:e])
            start = e
            if len(out) >= samples:
                break
        carry = stream[start:]
        if len(carry) > size_cap and len(out) < samples:
            out.append(CENSORED)
            censored += 1
            carry = np.empty(0, dtype=np.int64)
        if stop_after_censored is not None and censored > stop_after_censored:
            break
    return out[:samples]


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_gw2_codes(nu: OffspringLaw, samples: int, seed=0, size_cap: int = DEFAULT_SIZE_CAP,
                     stop_after_censored: int | None = None) -> list:
    """Independent GW2 codes (or CENSORED) from one seeded stream.

    Both ancestors and every descendant get iid ``nu`` children; in breadth-first
    order the code entries are ``1 + children``, so the code is the stream cut at
    the first time the partial sums of ``children - 1`` reach ``-2``.
    """
    raw = _walk_codes(nu, samples, _as_rng(seed), size_cap, 2, stop_after_censored)
    return [x if x is CENSORED else tuple((x + 1).tolist()) for x in raw]


def sample_gw2_tree(nu: OffspringLaw, seed=0, size_cap: int = DEFAULT_SIZE_CAP):
    if size_cap < 2:
        raise ValueError("size_cap must be >= 2")
    return sample_gw2_codes(nu, 1, seed, size_cap)[0]


def sample_single_ancestor_codes(nu: OffspringLaw, samples: int, seed=0,
                                 size_cap: int = DEFAULT_SIZE_CAP) -> list:
    """Single-ancestor GW trees of size >= 2, read as two-ancestor codes.

    The ancestor's first child plays the second ancestor: the code is
    ``(c_1, c_2 + 1, ..., c_k + 1)`` for breadth-first child counts ``c``.
    Size-one trees are rejected.
    """
    rng = _as_rng(seed)
    out = []
    while len(out) < samples:
        raw = _walk_codes(nu, samples - len(out), rng, size_cap, 1)
        for x in raw:
            if x is CENSORED:
                out.append(CENSORED)
            elif len(x) >= 2:
                code = x + 1
                code[0] -= 1
                out.append(tuple(code.tolist()))
    return out


def compare_to_gw2(codes: list, nu: OffspringLaw, report_cap: int, seed: int = 0) -> LawComparison:
    """Restricted TV between sampled codes and exact GW2 masses on codes of size <= ``report_cap``."""
    exact = exact_code_law(nu, report_cap)
    counts, n = frequencies(codes)
    emp = {c: counts.get(c, 0) / n for c in exact}
    keys = sorted(exact, key=lambda c: (len(c), c))
    rows = [(c, emp[c], float(exact[c])) for c in keys]
    return LawComparison(
        rows=rows,
        tv=tv_restricted(emp, exact, keys),
        band=tv_null_band([exact[c] for c in keys], n, two_sample=False, seed=seed),
        samples=n,
        censored=counts.get(CENSORED, 0),
    )


def single_ancestor_law_check(nu: OffspringLaw, samples: int, seed=0, report_cap: int = 6,
                              size_cap: int = DEFAULT_SIZE_CAP) -> LawComparison:
    codes = sample_single_ancestor_codes(nu, samples, seed, size_cap)
    return compare_to_gw2(codes, nu, report_cap, seed=_band_seed(seed))


def poisson_conditioned_law_check(p: float, samples: int, seed=0, report_cap: int = 6,
                                  size_cap: int = DEFAULT_SIZE_CAP) -> LawComparison:
    """Size-conditioned single-ancestor Poisson(p) trees against GW2 of Poisson(p)."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    return single_ancestor_law_check(truncated_poisson(p), samples, seed, report_cap, size_cap)


def _band_seed(seed) -> int:
    return seed if isinstance(seed, int) else 0
