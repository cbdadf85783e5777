"""Monte Carlo experiments on large configurations and on sampled GW2 trees.

Every replicate draws its own generator from ``SeedSequence([seed, index])``,
so a replicate's result depends only on the master seed and its index.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _st

from . import __version__
from .configuration import build_stub_system, clusters, uniform_pairing
from .degree_model import (
    DegreeLaw,
    DegreeSequence,
    OffspringLaw,
    criticality,
    degree_sequence,
    format_law,
    from_probabilities,
    offspring_law,
)
from .gw_law import (
    CENSORED,
    dwass_total_progeny,
    exact_code_law,
    gw2_mass,
    limit_concentration,
    sample_gw2_codes,
)
from .stats import (
    FOUR_SIGMA_P,
    RunningMoments,
    frequencies,
    tv_null_band,
    tv_restricted,
    z_score,
)
from .tree_code import Encoder, reroot

OTHER_TREE = "other-tree"
NULL = "null"
MAX_TARGET_SIZE = 10


class CriticalityWarning(UserWarning):
    pass


class CensoredExcess(RuntimeError):
    pass


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- rooted structures ----------------------------------------------------------


def classify_stubs(system, pairing, code_size_cap: int) -> Counter:
    """Stub counts by rooted code; bigger trees go to OTHER_TREE, non-trees to NULL.

    The counts add up to ``S``.
    """
    part = clusters(system, pairing)
    out: Counter = Counter()
    enc = Encoder(system, pairing)
    first, deg = enc.first, enc.deg
    stubs = 2 * part.edge_count
    out[NULL] = int(stubs[~part.is_tree].sum())
    big = part.is_tree & (part.vertex_count > code_size_cap)
    out[OTHER_TREE] = int(stubs[big].sum())
    order = part._order.tolist()
    offsets = part._offsets.tolist()
    for c in np.flatnonzero(part.is_tree & ~big).tolist():
        for v in order[offsets[c] : offsets[c + 1]]:
            for s in range(first[v], first[v] + deg[v]):
                out[enc(s)] += 1
    return out


@dataclass
class CodeRow:
    code: object
    mean: float
    se: float
    variance: float
    target: float | None
    z: float | None


@dataclass
class StructureReport:
    rows: list
    null: CodeRow
    other_tree: CodeRow
    metadata: dict
    replicate_totals: list = field(default_factory=list)

    def row(self, code) -> CodeRow | None:
        code = tuple(code)
        return next((r for r in self.rows if r.code == code), None)


def _structure_replicate(args):
    law, system, n, mode, seed, r, cap = args
    rng = replicate_rng(seed, r)
    if system is None:
        system = build_stub_system(degree_sequence(law, n, mode, rng))
    pairing = uniform_pairing(system, rng)
    counts = classify_stubs(system, pairing, cap)
    return {k: v / system.S for k, v in counts.items()}, sum(counts.values()) == system.S


def _moments(values_by_rep: list[dict], key) -> RunningMoments:
    acc = RunningMoments()
    for d in values_by_rep:
        acc.add(d.get(key, 0.0))
    return acc


def _row(code, acc: RunningMoments, target) -> CodeRow:
    t = None if target is None else float(target)
    z = None if t is None else z_score(acc.mean, t, acc.stderr)
    return CodeRow(code, acc.mean, acc.stderr, acc.variance, t, z)


def run_structure_experiment(
    mu: DegreeLaw | None,
    n: int | None = None,
    replicates: int = 20,
    code_size_cap: int = 8,
    mode: str = "quota",
    seed: int = 0,
    degrees: DegreeSequence | Sequence[int] | None = None,
    workers: int = 1,
) -> StructureReport:
    """Empirical ``rho_n`` over independent pairings, with GW2 targets attached.

    Pass ``degrees`` to use one fixed degree sequence instead of sampling from
    ``mu``; targets then come from its empirical law.
    """
    if code_size_cap < 2:
        raise ValueError("code_size_cap must be >= 2")
    if degrees is not None:
        degrees = degrees if isinstance(degrees, DegreeSequence) else DegreeSequence(np.asarray(degrees))
        n = degrees.n
        if mu is None:
            mu = from_probabilities({i: c * 1.0 / n for i, c in Counter(degrees.degrees.tolist()).items()})
    elif mode == "quota":
        degrees = degree_sequence(mu, n, "quota")
    if n is None or n < 2:
        raise ValueError("n must be >= 2")
    system = None if degrees is None else build_stub_system(degrees)
    tasks = [(mu, system, n, mode, seed, r, code_size_cap) for r in range(replicates)]
    results = _pmap(_structure_replicate, tasks, workers)
    per_rep = [d for d, _ in results]

    nu = offspring_law(mu)
    targets = exact_code_law(nu, min(code_size_cap, MAX_TARGET_SIZE))
    keys = {k for d in per_rep for k in d if k not in (NULL, OTHER_TREE)}
    keys |= {c for c, p in targets.items() if p > 0}
    rows = []
    for code in sorted(keys, key=lambda c: (len(c), c)):
        target = targets.get(code)
        if target is None:
            target = gw2_mass(code, nu)
        rows.append(_row(code, _moments(per_rep, code), target))
    S = degrees.S if degrees is not None else None
    return StructureReport(
        rows=rows,
        null=_row(NULL, _moments(per_rep, NULL), None),
        other_tree=_row(OTHER_TREE, _moments(per_rep, OTHER_TREE), None),
        metadata=_metadata(mu, n, replicates, mode, seed, S=S, code_size_cap=code_size_cap),
        replicate_totals=[sum(d.values()) for d in per_rep],
    )


def _metadata(mu, n, replicates, mode, seed, **extra) -> dict:
    meta = {
        "law": format_law(mu) if mu is not None else "",
        "n": n,
        "replicates": replicates,
        "mode": mode,
        "seed": seed,
        "version": __version__,
    }
    meta.update({k: v for k, v in extra.items() if v is not None})
    return meta


# --- cluster sizes --------------------------------------------------------------


@dataclass
class SizeRow:
    k: int
    mean: float
    se: float
    target: float
    z: float


@dataclass
class SizeReport:
    rows: list
    weighted_l1: float
    weighted_l1_se: float
    metadata: dict
    mass_ok: bool = True

    def row(self, k: int) -> SizeRow | None:
        return next((r for r in self.rows if r.k == k), None)


def _size_replicate(args):
    law, system, n, mode, seed, r = args
    rng = replicate_rng(seed, r)
    if system is None:
        system = build_stub_system(degree_sequence(law, n, mode, rng))
    part = clusters(system, uniform_pairing(system, rng))
    sizes = Counter(part.vertex_count.tolist())
    return sizes, sum(k * c for k, c in sizes.items()) == system.n


def run_cluster_size_experiment(
    mu: DegreeLaw,
    n: int,
    replicates: int = 20,
    k_cap: int = 20,
    mode: str = "quota",
    seed: int = 0,
    workers: int = 1,
) -> SizeReport:
    """Cluster-size densities ``C_n(k)/n`` against their limits.

    ``weighted_l1`` averages ``sum_{2 <= k <= k_cap} k |C_n(k)/n - target(k)|``
    over replicates.
    """
    system = build_stub_system(degree_sequence(mu, n, "quota")) if mode == "quota" else None
    tasks = [(mu, system, n, mode, seed, r) for r in range(replicates)]
    results = _pmap(_size_replicate, tasks, workers)
    targets = {k: float(limit_concentration(mu, k)) for k in range(2, k_cap + 1)}
    dens = [{k: c / n for k, c in sizes.items()} for sizes, _ in results]
    rows = []
    for k in range(1, k_cap + 1):
        acc = _moments(dens, k)
        target = targets.get(k, 0.0)
        rows.append(SizeRow(k, acc.mean, acc.stderr, target, z_score(acc.mean, target, acc.stderr)))
    l1 = RunningMoments()
    for d in dens:
        l1.add(sum(k * abs(d.get(k, 0.0) - targets[k]) for k in targets))
    return SizeReport(
        rows=rows,
        weighted_l1=l1.mean,
        weighted_l1_se=l1.stderr,
        metadata=_metadata(mu, n, replicates, mode, seed, k_cap=k_cap),
        mass_ok=all(ok for _, ok in results),
    )


# --- convergence sweep ----------------------------------------------------------


@dataclass
class SweepPoint:
    n: int
    max_error: float
    null_mean: float
    null_se: float
    variances: dict
    report: StructureReport


def convergence_sweep(
    mu: DegreeLaw,
    n_list: Sequence[int],
    replicates: int = 20,
    seed: int = 0,
    code_size_cap: int = 8,
    mode: str = "quota",
    workers: int = 1,
) -> list[SweepPoint]:
    """``max |rho_hat - GW2|`` over tracked codes and the non-tree mass, for each ``n``."""
    if mu.support == (2,):
        raise ValueError("the point mass at degree 2 is excluded")
    if criticality(mu) > 0:
        warnings.warn(
            f"criticality {float(criticality(mu)):.4g} > 0: a giant component is expected",
            CriticalityWarning,
            stacklevel=2,
        )
    out = []
    for n in n_list:
        rep = run_structure_experiment(mu, n, replicates, code_size_cap, mode, seed, workers=workers)
        err = max((abs(r.mean - r.target) for r in rep.rows), default=0.0)
        out.append(
            SweepPoint(n, err, rep.null.mean, rep.null.se, {r.code: r.variance for r in rep.rows}, rep)
        )
    return out


# --- GW2 samplers: re-rooting and Dwass -------------------------------------------


@dataclass
class RerootReport:
    rows: list  # (code, before, after, exact)
    tv_before_after: float
    band_two_sample: float
    tv_after_exact: float
    band_one_sample: float
    samples: int
    censored: int

    @property
    def passed(self) -> bool:
        return self.tv_before_after <= self.band_two_sample and self.tv_after_exact <= self.band_one_sample


def _censor_guard(codes, samples):
    censored = sum(1 for c in codes if c is CENSORED)
    if censored > 0.01 * samples:
        raise CensoredExcess(f"{censored} of {samples} samples hit the size cap")
    return censored


def run_rerooting_experiment(
    nu: OffspringLaw,
    samples: int,
    size_cap: int = 10**4,
    report_size_cap: int = 5,
    seed: int = 0,
) -> RerootReport:
    """Re-root each sampled GW2 code at a uniform stub and compare code laws."""
    rng = np.random.default_rng(seed)
    codes = sample_gw2_codes(nu, samples, rng, size_cap, stop_after_censored=int(0.01 * samples))
    censored = _censor_guard(codes, samples)
    after = []
    for c in codes:
        if c is CENSORED or len(c) > report_size_cap:
            after.append(c)
        else:
            after.append(reroot(c, int(rng.integers(2 * (len(c) - 1)))))
    exact = exact_code_law(nu, report_size_cap)
    keys = sorted(exact, key=lambda c: (len(c), c))
    before_c, n = frequencies(codes)
    after_c, _ = frequencies(after)
    before = {k: before_c.get(k, 0) / n for k in keys}
    aft = {k: after_c.get(k, 0) / n for k in keys}
    probs = [exact[k] for k in keys]
    return RerootReport(
        rows=[(k, before[k], aft[k], float(exact[k])) for k in keys],
        tv_before_after=tv_restricted(before, aft, keys),
        band_two_sample=tv_null_band(probs, n, two_sample=True, seed=seed),
        tv_after_exact=tv_restricted(aft, exact, keys),
        band_one_sample=tv_null_band(probs, n, two_sample=False, seed=seed),
        samples=n,
        censored=censored,
    )


@dataclass
class DwassReport:
    rows: list  # (k, observed, expected_probability); k = None is the lumped tail
    chi2: float
    dof: int
    p_value: float
    samples: int
    censored: int

    @property
    def passed(self) -> bool:
        return self.p_value > FOUR_SIGMA_P

    def frequency(self, k) -> float:
        return next(obs for kk, obs, _ in self.rows if kk == k) / self.samples


def run_dwass_check(
    nu: OffspringLaw,
    samples: int,
    k_cap: int = 10,
    seed: int = 0,
    size_cap: int = 10**4,
) -> DwassReport:
    """Pearson chi-square of sampled GW2 sizes against ``(2/k) nu^{*k}(k-2)``.

    Sizes above ``k_cap`` (censored trees included) form one tail bin; bins
    with zero expected mass are dropped from the statistic but any
    observation there makes it infinite.
    """
    codes = sample_gw2_codes(nu, samples, seed, size_cap, stop_after_censored=int(0.01 * samples))
    censored = _censor_guard(codes, samples)
    sizes = Counter(len(c) if c is not CENSORED and len(c) <= k_cap else None for c in codes)
    probs = {k: float(dwass_total_progeny(nu, k)) for k in range(2, k_cap + 1)}
    probs[None] = max(0.0, 1.0 - sum(probs.values()))
    rows = [(k, sizes.get(k, 0), probs[k]) for k in list(range(2, k_cap + 1)) + [None]]
    chi2 = 0.0
    used = 0
    for _, obs, p in rows:
        if p > 1e-15:
            chi2 += (obs - samples * p) ** 2 / (samples * p)
            used += 1
        elif obs > 0:
            chi2 = math.inf
    dof = max(used - 1, 0)
    if math.isinf(chi2):
        pval = 0.0
    elif dof == 0:
        pval = 1.0
    else:
        pval = float(_st.chi2.sf(chi2, dof))
    return DwassReport(rows, chi2, dof, pval, samples, censored)
