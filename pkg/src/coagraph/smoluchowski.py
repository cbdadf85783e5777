"""Coagulation with a limited number of aggregations, truncated to a finite grid.

A particle ``(a, k)`` has ``a`` free arms and size ``k``. Two particles merge at
rate ``a a' c(a,k) c(a',k')`` into ``(a + a' - 2, k + k')``. Concentrations live
on ``0 <= a <= A_max``, ``1 <= k <= K_max`` (array index ``[a, k-1]``). Products
that fall outside the grid are booked in ``shed_flux`` so that
``sum k c + shed_flux`` is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .degree_model import DegreeLaw, offspring_law
from .gw_law import convolution_power

CLAMP = 1e-14


class TruncationTooSmall(ValueError):
    pass


class NegativeConcentration(ArithmeticError):
    pass


class BlowUp(ArithmeticError):
    pass


@dataclass(frozen=True)
class ConcentrationGrid:
    c: np.ndarray
    shed_flux: float = 0.0
    reachable: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def A_max(self) -> int:
        return self.c.shape[0] - 1

    @property
    def K_max(self) -> int:
        return self.c.shape[1]

    def __call__(self, a: int, k: int) -> float:
        if 0 <= a <= self.A_max and 1 <= k <= self.K_max:
            return float(self.c[a, k - 1])
        return 0.0

    @property
    def mass(self) -> float:
        return float((self.c * np.arange(1, self.K_max + 1)).sum())

    @property
    def arms(self) -> float:
        return float((self.c * np.arange(self.A_max + 1)[:, None]).sum())


def arm_bound(support_max: int, K_max: int) -> int:
    """Largest arm count reachable by particles of size <= K_max.

    A particle of size ``k`` has ``sum d_i - 2(k-1) <= k (d_max - 2) + 2`` arms.
    """
    return max(support_max, K_max * (support_max - 2) + 2)


class _Convolver:
    def __init__(self, shape):
        A1, K = shape
        # rows a'+a'' are read up to A1+1, so pad past that as well as past aliasing
        rows = max(2 * A1 - 1, A1 + 2)
        self.shape = (fft.next_fast_len(rows, True), fft.next_fast_len(2 * K - 1, True))

    def __call__(self, x, y=None):
        fx = fft.rfft2(x, self.shape)
        fy = fx if y is None else fft.rfft2(y, self.shape)
        return fft.irfft2(fx * fy, self.shape)


def _reachable(c0: np.ndarray) -> np.ndarray:
    """Cells that can ever carry mass, by closing the initial support under merging."""
    A1, K = c0.shape
    conv = _Convolver(c0.shape)
    arms = np.arange(A1)[:, None]
    mask = c0 > 0
    while True:
        active = (mask & (arms > 0)).astype(float)
        hits = conv(active)
        grown = mask.copy()
        grown[:, 1:] |= hits[2 : A1 + 2, : K - 1] > 0.5
        if (grown == mask).all():
            return mask
        mask = grown


def initial_monomers(mu: DegreeLaw, A_max: int | None = None, K_max: int = 64) -> ConcentrationGrid:
    """Monomers only: ``c(a, 1) = mu(a) / m``."""
    if A_max is None:
        A_max = arm_bound(mu.support_max, K_max)
    if A_max < mu.support_max:
        raise TruncationTooSmall(f"A_max={A_max} below the largest degree {mu.support_max}")
    c = np.zeros((A_max + 1, K_max))
    m = float(mu.m)
    for a, p in mu.weights:
        c[a, 0] = float(p) / m
    return ConcentrationGrid(c, 0.0, _reachable(c))


class _Rhs:
    def __init__(self, grid: ConcentrationGrid):
        self.A1, self.K = grid.c.shape
        self.arms = np.arange(self.A1, dtype=float)[:, None]
        self.conv = _Convolver(grid.c.shape)
        self.mask = grid.reachable if grid.reachable is not None else _reachable(grid.c)
        P0, P1 = self.conv.shape
        # size k' + k'' of every convolution cell, used to weigh shed mass
        self.size_of = (np.arange(P1) + 2.0)[None, :] * np.ones((P0, 1))
        inside = np.zeros((P0, P1), dtype=bool)
        inside[2 : self.A1 + 2, : self.K - 1] = True
        inside[:2, :] = True  # products need two arms, these cells stay empty
        self.outside = ~inside

    def __call__(self, c: np.ndarray) -> tuple[np.ndarray, float]:
        b = self.arms * c
        total_arms = b.sum()
        gain_full = 0.5 * self.conv(b)
        dc = -total_arms * b
        dc[:, 1:] += gain_full[2 : self.A1 + 2, : self.K - 1]
        shed = float((gain_full * self.size_of)[self.outside].sum())
        dc[~self.mask] = 0.0
        return dc, shed


def rhs(grid: ConcentrationGrid) -> ConcentrationGrid:
    """Time derivative as a grid; its ``shed_flux`` is the rate of mass leaving the grid."""
    dc, shed = _Rhs(grid)(grid.c)
    return ConcentrationGrid(dc, shed, grid.reachable)


@dataclass
class Integration:
    final: ConcentrationGrid
    checkpoints: list  # (t, ConcentrationGrid)
    diagnostics: list  # (t, mass, shed_flux, arms)
    initial_mass: float

    @property
    def max_drift_rate(self) -> float:
        """Largest ``|mass + shed - initial| / t`` over the diagnostics."""
        out = 0.0
        for t, mass, shed, _ in self.diagnostics:
            if t > 0:
                out = max(out, abs(mass + shed - self.initial_mass) / t)
        return out

    @property
    def valid(self) -> bool:
        return self.final.shed_flux < 1e-4 * self.initial_mass

    def at(self, t: float) -> ConcentrationGrid:
        return min(self.checkpoints, key=lambda tc: abs(tc[0] - t))[1]


def _geometric_times(T: float) -> list[float]:
    out, t = [0.0], 1.0
    while t < T:
        out.append(t)
        t *= 2
    out.append(T)
    return out


def integrate(
    grid: ConcentrationGrid,
    T: float,
    dt: float,
    method: str = "rk4",
    checkpoints=None,
    clock: str = "t",
) -> Integration:
    """Fixed-step integration to time ``T``.

    With ``clock="log"`` the steps are uniform in ``s = log(1 + t)`` (``dt`` is
    then the step in ``s``); the right-hand side is rescaled by ``1 + t``.
    Checkpoint times are always physical times; each is taken at the nearest
    step.
    """
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")
    if clock not in ("t", "log"):
        raise ValueError(f"unknown clock {clock!r}")
    f = _Rhs(grid)
    horizon = T if clock == "t" else float(np.log1p(T))
    steps = int(round(horizon / dt))
    h = horizon / steps if steps else 0.0

    def time_of(u):
        return u if clock == "t" else float(np.expm1(u))

    def field_(u, c):
        dc, shed = f(c)
        if clock == "log":
            scale = 1.0 + time_of(u)
            return dc * scale, shed * scale
        return dc, shed

    wanted = sorted(set(_geometric_times(T) if checkpoints is None else checkpoints))
    if clock == "t":
        marks = {int(round(t / h)) if h else 0: t for t in wanted}
    else:
        marks = {int(round(np.log1p(t) / h)) if h else 0: t for t in wanted}

    c = grid.c.copy()
    shed = grid.shed_flux
    initial = grid.mass + grid.shed_flux
    cps, diags = [], []

    def record(i):
        g = ConcentrationGrid(c.copy(), shed, grid.reachable)
        if i in marks:
            cps.append((marks[i], g))
        diags.append((time_of(i * h), g.mass, shed, g.arms))

    record(0)
    for i in range(steps):
        u = i * h
        if method == "euler":
            k1, s1 = field_(u, c)
            c = c + h * k1
            shed += h * s1
        else:
            k1, s1 = field_(u, c)
            k2, s2 = field_(u + h / 2, c + h / 2 * k1)
            k3, s3 = field_(u + h / 2, c + h / 2 * k2)
            k4, s4 = field_(u + h, c + h * k3)
            c = c + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            shed += h / 6 * (s1 + 2 * s2 + 2 * s3 + s4)
        if not np.isfinite(c).all():
            raise BlowUp(f"non-finite concentration at t={time_of(u + h):.6g}")
        low = c.min()
        if low < -CLAMP:
            raise NegativeConcentration(f"c = {low:.3g} at t={time_of(u + h):.6g}")
        np.maximum(c, 0.0, out=c)
        if i + 1 in marks or (i + 1) % max(1, steps // 64) == 0:
            record(i + 1)
    final = ConcentrationGrid(c, shed, grid.reachable)
    return Integration(final, cps, diags, initial)


@dataclass(frozen=True)
class SteadyRow:
    k: int
    c0k: float
    target: float
    abs_error: float


def steady_state_targets(mu: DegreeLaw, k_report: int) -> dict[int, float]:
    """``nu^{*k}(k-2) / (k (k-1))`` for ``2 <= k <= k_report``."""
    nu = offspring_law(mu)
    return {k: float(convolution_power(nu, k, cap=k - 2)(k - 2)) / (k * (k - 1)) for k in range(2, k_report + 1)}


def steady_state_error(final: ConcentrationGrid, mu: DegreeLaw, k_report: int) -> list[SteadyRow]:
    if k_report > final.K_max:
        raise TruncationTooSmall(f"k_report={k_report} exceeds K_max={final.K_max}")
    targets = steady_state_targets(mu, k_report)
    return [SteadyRow(k, final(0, k), t, abs(final(0, k) - t)) for k, t in targets.items()]
