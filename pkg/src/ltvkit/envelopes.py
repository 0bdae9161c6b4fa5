"""Exponential envelopes for transition-matrix norms.

Every kind bounds ||Phi(t, s)|| by pref * exp(rate * g1(t,s) + nu * g2(t,s)):

    kind           g1          g2     pairs
    UBG            |t - s|     0      all
    NUBG           |t - s|     |s|    all
    NUKalman       |t - s|     s      all      (signed anchor)
    NuesForward    -(t - s)    |s|    t >= s   (rate is the decay beta)
    NuesBackward   t - s       |s|    t <= s

For fixed (rate, nu) the smallest log-prefactor is a max over samples, so
the fit is an exhaustive scan over the (rate, nu) grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .common import NU_GRID, RATE_GRID, TIE_TOL, Caps, Status
from .linalg import log_spectral_norm
from .system import ExprMatrix, TransitionEvaluator


class EnvelopeKind(str, Enum):
    UBG = "UBG"
    NUBG = "NUBG"
    NU_KALMAN = "NUKalman"
    NUES_FORWARD = "NuesForward"
    NUES_BACKWARD = "NuesBackward"

    @property
    def decays(self) -> bool:
        return self in (EnvelopeKind.NUES_FORWARD, EnvelopeKind.NUES_BACKWARD)


def _templates(kind: EnvelopeKind, t: np.ndarray, s: np.ndarray):
    if kind is EnvelopeKind.UBG:
        return np.abs(t - s), np.zeros_like(s)
    if kind is EnvelopeKind.NUBG:
        return np.abs(t - s), np.abs(s)
    if kind is EnvelopeKind.NU_KALMAN:
        return np.abs(t - s), s.copy()
    if kind is EnvelopeKind.NUES_FORWARD:
        return -(t - s), np.abs(s)
    return t - s, np.abs(s)


def _admissible(kind: EnvelopeKind, t: float, s: float) -> bool:
    if kind is EnvelopeKind.NUES_FORWARD:
        return t >= s
    if kind is EnvelopeKind.NUES_BACKWARD:
        return t <= s
    return True


def _exponent(rate, nu, g1, g2):
    # shared by fit and check so that fitted slack is exactly zero
    return rate * g1 + nu * g2


@dataclass(frozen=True)
class PairGrid:
    """Product grid of (t, s) pairs; each kind keeps only its admissible pairs."""

    ts: tuple[float, ...]
    ss: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ts", tuple(float(x) for x in self.ts))
        object.__setattr__(self, "ss", tuple(float(x) for x in self.ss))

    @classmethod
    def square(cls, lo: float, hi: float, count: int) -> "PairGrid":
        nodes = tuple(np.linspace(lo, hi, count).tolist())
        return cls(nodes, nodes)

    def reflected(self) -> "PairGrid":
        return PairGrid(tuple(-x for x in self.ts), tuple(-x for x in self.ss))

    def swapped(self) -> "PairGrid":
        return PairGrid(self.ss, self.ts)

    def describe(self) -> dict:
        return {"t": list(self.ts), "s": list(self.ss)}


@dataclass(frozen=True)
class Samples:
    t: np.ndarray
    s: np.ndarray
    log_norm: np.ndarray


def collect_samples(ev: TransitionEvaluator, kind: EnvelopeKind, grid: PairGrid) -> Samples:
    ts, ss = grid.ts, grid.ss
    if not ts or not ss:
        raise ValueError("empty grid")
    phis = ev.transition_grid(ts, ss)
    rows = []
    for i, t in enumerate(ts):
        for j, s in enumerate(ss):
            if _admissible(kind, t, s):
                rows.append((t, s, log_spectral_norm(phis[i, j])))
    if not rows:
        raise ValueError(f"grid has no pairs admissible for {kind.value}")
    arr = np.array(rows, dtype=float)
    keep = np.isfinite(arr[:, 2])
    if not keep.any():
        raise ValueError("all samples are non-finite")
    arr = arr[keep]
    return Samples(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass(frozen=True)
class Envelope:
    kind: EnvelopeKind
    log_prefactor: float
    rate: float
    nu: float
    fit_window: dict = field(default_factory=dict, compare=False)
    slack: float = 0.0

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)

    def scaled(self, factor: float) -> "Envelope":
        return replace(self, log_prefactor=self.log_prefactor + math.log(factor))

    def log_bound(self, t, s):
        g1, g2 = _templates(self.kind, np.atleast_1d(np.asarray(t, float)),
                            np.atleast_1d(np.asarray(s, float)))
        return self.log_prefactor + _exponent(self.rate, self.nu, g1, g2)

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "prefactor": self.prefactor,
                "log_prefactor": self.log_prefactor, "rate": self.rate,
                "nu_exponent": self.nu, "slack": self.slack, "fit_window": self.fit_window}


def _fit_table(samples: Samples, kind: EnvelopeKind, rates: np.ndarray, nus: np.ndarray) -> np.ndarray:
    g1, g2 = _templates(kind, samples.t, samples.s)
    x = samples.log_norm[None, None, :] - _exponent(
        rates[:, None, None], nus[None, :, None], g1[None, None, :], g2[None, None, :])
    return x.max(axis=2)


def fit_from_samples(samples: Samples, kind: EnvelopeKind,
                     rate_grid: Sequence[float] = RATE_GRID,
                     nu_grid: Sequence[float] = NU_GRID,
                     window: dict | None = None,
                     tie_tol: float = TIE_TOL) -> Envelope:
    kind = EnvelopeKind(kind)
    rates = np.asarray(sorted(set(float(r) for r in rate_grid)))
    nus = np.asarray(sorted(set(float(v) for v in nu_grid)))
    if kind is EnvelopeKind.UBG:
        nus = np.zeros(1)
    if rates.size == 0 or nus.size == 0:
        raise ValueError("empty search grid")
    # every template vanishes at t = s = 0, where Phi = I, so log-prefactors
    # below zero are artifacts of grids that miss that pair
    table = np.maximum(_fit_table(samples, kind, rates, nus), 0.0)
    best = table.min()
    # among near-ties: most uniform first, then the strongest rate
    cand = [(nus[j], -rates[i] if kind.decays else rates[i], i, j)
            for i, j in zip(*np.nonzero(table <= best + tie_tol))]
    _, _, i, j = min(cand)
    lp = float(table[i, j])
    env = Envelope(kind, lp, float(rates[i]), float(nus[j]), window or {}, 0.0)
    return replace(env, slack=slack_from_samples(env, samples)[0])


def fit_envelope(ev: TransitionEvaluator, kind: EnvelopeKind | str, grid: PairGrid,
                 rate_grid: Sequence[float] = RATE_GRID,
                 nu_grid: Sequence[float] = NU_GRID) -> Envelope:
    kind = EnvelopeKind(kind)
    samples = collect_samples(ev, kind, grid)
    return fit_from_samples(samples, kind, rate_grid, nu_grid, window=grid.describe())


def refine_envelope(ev: TransitionEvaluator, env: Envelope, grid: PairGrid, step: float = 0.05,
                    levels: int = 1, caps: Caps = Caps()) -> Envelope:
    """Re-scan a 10x finer (rate, nu) grid around a fitted pair, ``levels`` times.

    The coarse optimum stays in the candidate set, so the prefactor never grows.
    """
    samples = collect_samples(ev, env.kind, grid)
    for _ in range(levels):
        fine = step / 10.0
        offsets = np.arange(-10, 11) * fine
        rates = np.round(np.clip(env.rate + offsets, 0.0, caps.rate), 12)
        nus = np.round(np.clip(env.nu + offsets, 0.0, caps.nu), 12)
        better = fit_from_samples(samples, env.kind, rates, nus, window=grid.describe())
        if better.log_prefactor <= env.log_prefactor:
            env = better
        step = fine
    return env


def slack_from_samples(env: Envelope, samples: Samples) -> tuple[float, tuple[float, float]]:
    g1, g2 = _templates(env.kind, samples.t, samples.s)
    x = samples.log_norm - _exponent(env.rate, env.nu, g1, g2)
    slack = env.log_prefactor - x
    k = int(np.argmin(slack))
    return float(slack[k]), (float(samples.t[k]), float(samples.s[k]))


@dataclass(frozen=True)
class SlackReport:
    min_slack: float
    witness: tuple[float, float]
    count: int

    def as_dict(self) -> dict:
        return {"min_slack": self.min_slack, "witness": list(self.witness), "count": self.count}


def check_envelope(ev: TransitionEvaluator, env: Envelope, grid: PairGrid) -> SlackReport:
    samples = collect_samples(ev, env.kind, grid)
    slack, where = slack_from_samples(env, samples)
    return SlackReport(slack, where, len(samples.t))


def nues_status(env: Envelope, caps: Caps = Caps(), tie_tol: float = TIE_TOL) -> Status:
    """Read a NUES fit as a verdict.

    A positive decay rate within the prefactor cap certifies. A fit that
    prefers zero decay because the samples grow (prefactor above one, or a
    non-uniform exponent soaking up the growth) is falsified; zero decay with
    unit prefactor and no exponent (neutral dynamics) is the inconclusive
    boundary.
    """
    if not env.kind.decays:
        raise ValueError("not a NUES envelope")
    if env.rate > 0.0:
        return Status.CERTIFIED if env.prefactor <= caps.pref else Status.FALSIFIED
    grows = env.log_prefactor > tie_tol or env.nu > 0.0
    return Status.FALSIFIED if grows else Status.INCONCLUSIVE


@dataclass(frozen=True)
class UniformFalsification:
    width: float
    cap: float
    values: tuple[tuple[float, float], ...]  # (anchor t, ||Phi(t, t - width)||)
    status: Status
    witness: tuple[float, float] | None

    def as_dict(self) -> dict:
        return {"width": self.width, "cap": self.cap,
                "values": [list(v) for v in self.values], "status": self.status.value,
                "witness": None if self.witness is None else list(self.witness)}


def falsify_uniform(ev: TransitionEvaluator, window_width: float, anchors: Sequence[float],
                    cap: float = Caps().pref) -> UniformFalsification:
    """Norms along windows of constant width; any value above ``cap`` rules out
    every bound alpha(|t - s|) with alpha(width) <= cap."""
    width = float(window_width)
    values = []
    for t in anchors:
        t = float(t)
        phi = ev.transition(t, t - width)
        values.append((t, math.exp(log_spectral_norm(phi))))
    witness = next(((t, v) for t, v in values if v > cap), None)
    status = Status.FALSIFIED if witness is not None else Status.INCONCLUSIVE
    return UniformFalsification(width, float(cap), tuple(values), status, witness)


@dataclass(frozen=True)
class GainBound:
    """||G(t)|| <= prefactor * exp(-rate |t|) (decay) or exp(+rate |t|) (growth)."""

    prefactor: float
    rate: float
    decay: bool
    slack: float

    def as_dict(self) -> dict:
        return {"prefactor": self.prefactor, "rate": self.rate,
                "decay": self.decay, "slack": self.slack}


def fit_gain_bound(G: ExprMatrix, ts: Sequence[float], decay: bool,
                   rate_grid: Sequence[float] = RATE_GRID, tie_tol: float = TIE_TOL) -> GainBound:
    """Smallest prefactor over the rate grid; ties go to the strongest rate
    (fastest decay, or slowest growth)."""
    ts = sorted({float(t) for t in ts})
    if ts and ts[0] <= 0.0 <= ts[-1]:
        # the bound is tightest to probe at the origin
        ts = sorted(set(ts) | {0.0})
    ts = np.asarray(ts)
    norms = np.array([math.exp(log_spectral_norm(G(t))) if np.any(G(t)) else 0.0 for t in ts])
    rates = np.asarray(sorted(set(float(r) for r in rate_grid)))
    live = norms > 0.0
    if not live.any():
        # the zero gain obeys every bound
        rate = rates[-1] if decay else rates[0]
        return GainBound(0.0, float(rate), decay, math.inf)
    logs = np.log(norms[live])
    sign = 1.0 if decay else -1.0
    table = (logs[None, :] + sign * rates[:, None] * np.abs(ts[live])[None, :]).max(axis=1)
    best = table.min()
    idx = np.nonzero(table <= best + tie_tol)[0]
    i = idx[-1] if decay else idx[0]
    lp = float(table[i])
    slack = float(np.min(lp - (logs + sign * rates[i] * np.abs(ts[live]))))
    return GainBound(math.exp(lp), float(rates[i]), decay, slack)
