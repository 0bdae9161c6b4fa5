"""Shipped test systems with closed-form oracles and expected outcomes.

S0..S2 are plain systems; S3..S7 carry the gains of a constructed scenario.
Each expectation names an operation, its target and the expected status,
and must reproduce under the entry's own grid and the default settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classify import Property, classify
from .common import Caps, GridSpec, Status
from .envelopes import EnvelopeKind, PairGrid, fit_envelope
from .system import ExprMatrix, LtvSystem, TransitionEvaluator
from .transforms import FeedbackGain, GainRole
from .verify import ReportStatus, run_theorem

PI = math.pi


@dataclass(frozen=True)
class Expectation:
    op: str  # "classify", "verify" or "envelope"
    target: str
    status: str
    witness_t: float | None = None

    def label(self) -> str:
        return f"{self.op} {self.target}"


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    system: LtvSystem
    grid: GridSpec
    oracle: Callable[[float, float], np.ndarray] | None = None
    gains: dict = field(default_factory=dict)
    expected: tuple[Expectation, ...] = ()


def _m(rows) -> ExprMatrix:
    return ExprMatrix.parse(rows)


def _scalar(f):
    return lambda t, s: np.array([[f(t, s)]])


def _s1_primitive(t):
    return t * math.cos(t) - math.sin(t)


def load_catalog() -> list[CatalogEntry]:
    eye2 = [["1", "0"], ["0", "1"]]
    zero2 = [["0", "0"], ["0", "0"]]
    identity2 = lambda t, s: np.eye(2)
    s0 = LtvSystem("S0", _m(zero2), B=_m(eye2), C=_m(eye2), domain=(-10.0, 10.0))
    s2 = LtvSystem("S2", _m([["-1"]]), B=_m([["1"]]), C=_m([["1"]]), domain=(-10.0, 10.0))
    observer = FeedbackGain(GainRole.OBSERVER, _m([["50*exp(-3*abs(t))"]]))
    feedback = FeedbackGain(GainRole.STATE_FEEDBACK, _m([["50*exp(-3*abs(t))"]]))
    short = GridSpec(-0.25, 0.25, 5, (0.25, 0.5, 0.75))
    C, V, E = "classify", "verify", "envelope"
    ok, bad = Status.CERTIFIED.value, Status.FALSIFIED.value
    passed = ReportStatus.PASS.value
    return [
        CatalogEntry(
            "S0", "A = 0, B = C = I (n = 2)", s0, GridSpec(-2, 2, 5, (0.5, 1, 2)), identity2,
            expected=(Expectation(C, "UCC", ok), Expectation(C, "UCO", ok),
                      Expectation(V, "GRAMIAN-DUALITY", passed),
                      Expectation(V, "TWO-OF-THREE-UNIFORM-CTRL", passed))),
        CatalogEntry(
            "S1", "a(t) = -t sin t, B = C = 1",
            LtvSystem("S1", _m([["-t*sin(t)"]]), B=_m([["1"]]), C=_m([["1"]]), domain=(-20.0, 20.0)),
            GridSpec(-4 * PI, 4 * PI, 9, (PI / 2, PI)),
            _scalar(lambda t, s: math.exp(_s1_primitive(t) - _s1_primitive(s))),
            expected=(Expectation(E, "NUBG", "nonuniform"),
                      Expectation(C, "UCO", bad, witness_t=-3 * PI),
                      Expectation(C, "NUCO", ok),
                      Expectation(V, "TWO-OF-THREE-OBS", passed))),
        CatalogEntry(
            "S2", "A = -1, B = C = 1", s2, GridSpec(-2, 2, 5, (0.5, 1, 2)),
            _scalar(lambda t, s: math.exp(-(t - s))),
            expected=tuple(Expectation(C, p, ok) for p in ("CO", "UCO", "NUCO", "CC", "UCC", "NUCC"))
            + (Expectation(V, "GRAMIAN-DUALITY", passed),
               Expectation(V, "TWO-OF-THREE-UNIFORM-OBS", passed))),
        CatalogEntry(
            "S3", "A = +2, C = 1, observer L = 50 e^{-3|t|}",
            LtvSystem("S3", _m([["2"]]), C=_m([["1"]]), domain=(-3.0, 3.0)), short,
            _scalar(lambda t, s: math.exp(2 * (t - s))),
            gains={GainRole.OBSERVER: observer},
            expected=(Expectation(V, "DETECT-IMPLIES-NUCO", passed), Expectation(C, "NUCO", ok))),
        CatalogEntry(
            "S4", "A = +2, B = 1, state feedback F = 50 e^{-3|t|}",
            LtvSystem("S4", _m([["2"]]), B=_m([["1"]]), domain=(-3.0, 3.0)), short,
            _scalar(lambda t, s: math.exp(2 * (t - s))),
            gains={GainRole.STATE_FEEDBACK: feedback},
            expected=(Expectation(V, "STAB-IMPLIES-NUCC", passed), Expectation(C, "NUCC", ok))),
        CatalogEntry(
            "S5", "S2 with output injection K = 0.1 e^{-3|t|}",
            LtvSystem("S5", s2.A, B=s2.B, C=s2.C, domain=(-6.0, 6.0)), GridSpec(-3, 3, 7, (1, 2)),
            _scalar(lambda t, s: math.exp(-(t - s))),
            gains={GainRole.OUTPUT_INJECTION:
                   FeedbackGain(GainRole.OUTPUT_INJECTION, _m([["0.1*exp(-3*abs(t))"]]))},
            expected=(Expectation(V, "FEEDBACK-OBS", passed),)),
        CatalogEntry(
            "S6", "S0 with perturbation P = 0.5 e^{-|t|} I",
            LtvSystem("S6", s0.A, B=s0.B, C=s0.C, domain=(-6.0, 6.0)), GridSpec(-5, 5, 20, (1,)),
            identity2,
            gains={GainRole.PERTURBATION: FeedbackGain(GainRole.PERTURBATION, _m(
                [["0.5*exp(-abs(t))", "0"], ["0", "0.5*exp(-abs(t))"]]))},
            expected=(Expectation(V, "PERTURB-LEMMA", passed),)),
        CatalogEntry(
            "S7", "A = 0, B = 1, state feedback F = 0.2 e^{-|t|}",
            LtvSystem("S7", _m([["0"]]), B=_m([["1"]]), domain=(-6.0, 6.0)), GridSpec(-3, 3, 7, (1, 2)),
            _scalar(lambda t, s: 1.0),
            gains={GainRole.STATE_FEEDBACK:
                   FeedbackGain(GainRole.STATE_FEEDBACK, _m([["0.2*exp(-abs(t))"]]))},
            expected=(Expectation(V, "FEEDBACK-CTRL", passed), Expectation(C, "NUCC", ok))),
    ]


def get_entry(entry_id: str) -> CatalogEntry:
    for e in load_catalog():
        if e.id == entry_id:
            return e
    raise KeyError(f"no catalog entry {entry_id!r}")


@dataclass(frozen=True)
class Outcome:
    expectation: Expectation
    observed: str
    witness_t: float | None
    details: dict

    @property
    def reproduced(self) -> bool:
        e = self.expectation
        if self.observed != e.status:
            return False
        return e.witness_t is None or (self.witness_t is not None
                                       and abs(self.witness_t - e.witness_t) <= 1e-9)

    def as_dict(self) -> dict:
        e = self.expectation
        return {"op": e.op, "target": e.target, "expected": e.status, "observed": self.observed,
                "expected_witness_t": e.witness_t, "witness_t": self.witness_t,
                "reproduced": self.reproduced, "details": self.details}


def evaluate(entry: CatalogEntry, exp: Expectation, ev: TransitionEvaluator, caps: Caps = Caps(),
             eig_tol: float | None = None, slack_tol: float | None = None) -> Outcome:
    g = entry.grid
    kw = {k: v for k, v in (("eig_tol", eig_tol),) if v is not None}
    if exp.op == "classify":
        v = classify(ev, Property(exp.target), g.ts, g.sigmas, caps, **kw)
        wt = None
        if v.witness is not None:
            kal = v.witness.get("kalman")
            wt = kal["witness"][0] if kal else v.witness.get("t")
        return Outcome(exp, v.status.value, wt, v.as_dict())
    if exp.op == "verify":
        if slack_tol is not None:
            kw["slack_tol"] = slack_tol
        r = run_theorem(ev, exp.target, g.ts, g.sigmas, entry.gains, caps=caps, **kw)
        return Outcome(exp, r.status.value, None, r.as_dict())
    if exp.op == "envelope":
        nodes = sorted(set(g.ts) | {t + s for t in g.ts for s in g.sigmas})
        env = fit_envelope(ev, EnvelopeKind(exp.target), PairGrid(nodes, nodes))
        within = env.prefactor <= caps.pref
        observed = ("nonuniform" if env.nu > 0 else "uniform") if within else "exceeds-cap"
        return Outcome(exp, observed, None, env.as_dict())
    raise ValueError(f"unknown operation {exp.op!r}")


def run_entry(entry: CatalogEntry, ev: TransitionEvaluator | None = None, caps: Caps = Caps(),
              eig_tol: float | None = None, slack_tol: float | None = None) -> list[Outcome]:
    ev = ev or TransitionEvaluator(entry.system)
    return [evaluate(entry, e, ev, caps, eig_tol, slack_tol) for e in entry.expected]
