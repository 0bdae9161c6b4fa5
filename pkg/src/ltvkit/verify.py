"""Numerical checks of the duality, perturbation, feedback and detectability results.

Each check fits its hypothesis constants on the verification window (or
envelope-checks constants pinned by the caller), gates on strictly positive
margins, and only then evaluates the conclusion on the grid. Every row keeps
enough of its inputs that :func:`recheck` can recompute the slack from the
stored constants.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Sequence

import numpy as np

from .classify import Property, classify, eigen_table, two_of_three, PreconditionError
from .common import EIG_TOL, NU_GRID, RATE_GRID, SLACK_TOL, Caps, Status
from .envelopes import (Envelope, EnvelopeKind, PairGrid, collect_samples, fit_from_samples,
                        fit_gain_bound, nues_status, slack_from_samples)
from .gramians import gramian
from .linalg import log_spectral_norm, spectral_norm
from .system import ExprMatrix, LtvSystem, TransitionEvaluator
from .transforms import (FeedbackGain, GainRole, adjoint, dual, observer_error_system,
                         output_injection, perturb, plant_adjoint, plant_dual, state_feedback)


class Theorem(str, Enum):
    GRAMIAN_DUALITY = "GRAMIAN-DUALITY"
    PERTURB_LEMMA = "PERTURB-LEMMA"
    FEEDBACK_OBS = "FEEDBACK-OBS"
    DETECT_IMPLIES_NUCO = "DETECT-IMPLIES-NUCO"
    FEEDBACK_CTRL = "FEEDBACK-CTRL"
    STAB_EQUIV = "STAB-EQUIV"
    STAB_IMPLIES_NUCC = "STAB-IMPLIES-NUCC"
    TWO_OF_THREE_OBS = "TWO-OF-THREE-OBS"
    TWO_OF_THREE_CTRL = "TWO-OF-THREE-CTRL"
    TWO_OF_THREE_UNIFORM_OBS = "TWO-OF-THREE-UNIFORM-OBS"
    TWO_OF_THREE_UNIFORM_CTRL = "TWO-OF-THREE-UNIFORM-CTRL"


class ReportStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    HYPOTHESIS_VIOLATED = "HYPOTHESIS-VIOLATED"


DUALITY_TOL = 1e-6


@dataclass(frozen=True)
class HypothesisSet:
    """Constants a caller may pin instead of having them fitted.

    Names: NUBG (K0, a, eps); perturbation bound (P, p); output gain decay
    (Kg, delta); output growth (Cg, gamma); observer decay (Lg, ell);
    plant NUES-backward (K, alpha, mu); error NUES-forward (Ke, alpha_e,
    mu_e); state feedback (Lc, ell_c) and input growth (Bc, beta_c).
    """

    K0: float | None = None
    a: float | None = None
    eps: float | None = None
    P: float | None = None
    p: float | None = None
    Kg: float | None = None
    delta: float | None = None
    Cg: float | None = None
    gamma: float | None = None
    Lg: float | None = None
    ell: float | None = None
    K: float | None = None
    alpha: float | None = None
    mu: float | None = None
    Ke: float | None = None
    alpha_e: float | None = None
    mu_e: float | None = None
    Lc: float | None = None
    ell_c: float | None = None
    Bc: float | None = None
    beta_c: float | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "HypothesisSet":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown hypothesis constants: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class TheoremReport:
    theorem: Theorem
    status: ReportStatus = ReportStatus.PASS
    margins: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    failed_stage: str | None = None
    notes: list = field(default_factory=list)
    slack_tol: float = SLACK_TOL

    @property
    def min_slack(self) -> float:
        return min((r["slack"] for r in self.rows), default=math.inf)

    def as_dict(self) -> dict:
        return {"theorem": self.theorem.value, "status": self.status.value,
                "margins": self.margins, "constants": self.constants, "rows": self.rows,
                "checks": self.checks, "failed_stage": self.failed_stage,
                "notes": self.notes, "min_slack": self.min_slack, "slack_tol": self.slack_tol}


class _Gate(Exception):
    pass


class _Run:
    """Accumulates constants and margins; raises at the first failing gate."""

    def __init__(self, theorem: Theorem, caps: Caps, slack_tol: float, pinned: HypothesisSet | None):
        self.report = TheoremReport(theorem, slack_tol=slack_tol)
        self.caps = caps
        self.slack_tol = slack_tol
        self.pinned = pinned or HypothesisSet()

    @property
    def c(self) -> dict:
        return self.report.constants

    def margin(self, name: str, value: float, stage: str | None = None) -> None:
        self.report.margins[name] = float(value)
        if not value > 0.0:
            self.report.status = ReportStatus.HYPOTHESIS_VIOLATED
            self.report.failed_stage = stage or name
            raise _Gate(name)

    def _rates(self):
        return [r for r in RATE_GRID if r <= self.caps.rate]

    def _nus(self):
        return [v for v in NU_GRID if v <= self.caps.nu]

    def _pinned_envelope(self, kind, names, samples):
        vals = [getattr(self.pinned, n) for n in names]
        if all(v is None for v in vals):
            return None
        if any(v is None for v in vals):
            raise ValueError(f"pin all of {names} or none")
        pref, rate, nu = vals
        if pref <= 0:
            raise ValueError(f"pinned prefactor {names[0]} must be positive")
        env = Envelope(kind, math.log(pref), rate, nu)
        return Envelope(kind, env.log_prefactor, rate, nu, {}, slack_from_samples(env, samples)[0])

    def envelope(self, ev, kind: EnvelopeKind, grid: PairGrid, names: tuple[str, str, str],
                 tag: str = "") -> Envelope:
        """Fit (or check pinned) constants; record them under ``names`` + tag."""
        samples = collect_samples(ev, kind, grid)
        env = self._pinned_envelope(kind, names, samples)
        if env is None:
            env = fit_from_samples(samples, kind, self._rates(), self._nus(), grid.describe())
        elif env.slack < -self.slack_tol:
            self.margin(f"pinned {kind.value}{tag} slack", env.slack)
        for n, v in zip(names, (env.prefactor, env.rate, env.nu)):
            self.c[n + tag] = v
        return env

    def headroom(self, name: str, env: Envelope, stage: str | None = None) -> None:
        self.margin(name, math.log(self.caps.pref) - env.log_prefactor, stage)

    def nues(self, name: str, env: Envelope, stage: str | None = None) -> None:
        status = nues_status(env, self.caps)
        value = env.rate if status is Status.CERTIFIED else min(0.0, math.log(self.caps.pref) - env.log_prefactor)
        self.margin(name, value, stage)

    def gain(self, G: ExprMatrix, ts, decay: bool, names: tuple[str, str], tag: str = ""):
        pref, rate = (getattr(self.pinned, n) for n in names)
        if pref is None and rate is None:
            gb = fit_gain_bound(G, ts, decay, self._rates())
            pref, rate = gb.prefactor, gb.rate
        else:
            if pref is None or rate is None:
                raise ValueError(f"pin both of {names} or neither")
            sign = -1.0 if decay else 1.0
            worst = min((math.log(pref) + sign * rate * abs(t) - log_spectral_norm(G(t))
                         for t in ts if np.any(G(t))), default=math.inf)
            if worst < -self.slack_tol:
                self.margin(f"pinned {names[0]}{tag} slack", worst)
        self.c[names[0] + tag] = pref
        self.c[names[1] + tag] = rate
        return pref, rate

    def cap_headroom(self, name: str, pref: float, stage: str | None = None) -> None:
        value = math.inf if pref == 0.0 else math.log(self.caps.pref) - math.log(pref)
        self.margin(name, value, stage)

    def finish(self) -> TheoremReport:
        rep = self.report
        if rep.status is ReportStatus.PASS:
            if rep.min_slack < -self.slack_tol or not all(rep.checks.values()):
                rep.status = ReportStatus.FAIL
        return rep


def _nodes(t_grid, sigma_grid) -> list[float]:
    return sorted({float(t) for t in t_grid} | {float(t) + float(s) for t in t_grid for s in sigma_grid})


def _log_row(point: dict, log_value: float, log_bound: float) -> dict:
    return dict(point, log_value=log_value, log_bound=log_bound, slack=log_bound - log_value)


# gramian duality

def verify_gramian_duality(ev: TransitionEvaluator, t_grid: Sequence[float],
                           sigma_grid: Sequence[float], tol: float = DUALITY_TOL,
                           slack_tol: float = SLACK_TOL) -> TheoremReport:
    """M = W^a = K^d(-t-s, -t) and N = K^a = W^d(-t-s, -t), each Gramian integrated separately."""
    sys = ev.system
    run = _Run(Theorem.GRAMIAN_DUALITY, Caps(), slack_tol, None)
    run.c["tolerance"] = tol
    ev_a = ev.with_system(adjoint(sys))
    ev_d = ev.with_system(dual(sys))
    for t in t_grid:
        for s in sigma_grid:
            t, s = float(t), float(s)
            M = gramian(ev, "M", t, t + s).value
            N = gramian(ev, "N", t, t + s).value
            pairs = {
                "M=Wa": (M, gramian(ev_a, "W", t, t + s).value),
                "M=Kd": (M, gramian(ev_d, "K", -t - s, -t).value),
                "N=Ka": (N, gramian(ev_a, "K", t, t + s).value),
                "N=Wd": (N, gramian(ev_d, "W", -t - s, -t).value),
            }
            for name, (X, Y) in pairs.items():
                scale = max(spectral_norm(X), spectral_norm(Y))
                res = spectral_norm(X - Y) / scale if scale > 0 else 0.0
                run.report.rows.append({"t": t, "sigma": s, "identity": name,
                                        "residual": res, "slack": tol - res})
    return run.finish()


# perturbation lemma

def verify_perturbation_lemma(ev: TransitionEvaluator, P: ExprMatrix, grid: PairGrid,
                              hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                              slack_tol: float = SLACK_TOL) -> TheoremReport:
    """Plant NUBG (K0, a, eps) and ||P|| <= P e^{-p|t|} with p > eps give
    NUBG (K0, a + K0 P, eps) for A + P, checked in both time orders."""
    run = _Run(Theorem.PERTURB_LEMMA, caps, slack_tol, hyp)
    sys = ev.system
    try:
        env = run.envelope(ev, EnvelopeKind.NUBG, grid, ("K0", "a", "eps"))
        run.headroom("NUBG headroom", env)
        nodes = sorted(set(grid.ts) | set(grid.ss))
        run.gain(P, nodes, True, ("P", "p"))
        run.cap_headroom("perturbation bound headroom", run.c["P"])
        run.margin("p - eps", run.c["p"] - run.c["eps"])
    except _Gate:
        return run.report
    c = run.c
    c["a_perturbed"] = c["a"] + c["K0"] * c["P"]
    pev = ev.with_system(perturb(sys, FeedbackGain(GainRole.PERTURBATION, P)))
    phis = pev.transition_grid(grid.ts, grid.ss)
    for i, t2 in enumerate(grid.ts):
        for j, t1 in enumerate(grid.ss):
            lb = _perturb_bound(c, t2, t1)
            run.report.rows.append(_log_row({"t": t2, "s": t1}, log_spectral_norm(phis[i, j]), lb))
    return run.finish()


def _perturb_bound(c: dict, t2: float, t1: float) -> float:
    return math.log(c["K0"]) + c["a_perturbed"] * abs(t2 - t1) + c["eps"] * abs(t1)


# output feedback preserves NUCO

def phi_value(sigma, K0, Kg, Cg, a, delta, eps) -> float:
    x = a + delta - eps
    return K0 * Kg * Cg ** 2 * math.exp(2.0 * x * sigma) / (4.0 * x ** 2)


def psi_value(sigma, theta1, K0, Kg, Cg, a, delta, eps) -> float:
    x = a + K0 * Kg * Cg + delta - eps
    return theta1 * K0 * Kg * Cg ** 2 * math.exp(2.0 * x * sigma) / (4.0 * x ** 2)


def corridor(t, sigma, c: dict, tag: str = "") -> tuple[float, float, str]:
    """(lower, upper, case) for lambda(M of the closed loop) at (t, sigma)."""
    g = lambda k: c[k + tag]
    th0 = c["theta0" + tag][str(sigma)]
    th1 = c["theta1" + tag][str(sigma)]
    phi = phi_value(sigma, g("K0"), g("Kg"), g("Cg"), g("a"), g("delta"), g("eps"))
    psi = psi_value(sigma, th1, g("K0"), g("Kg"), g("Cg"), g("a"), g("delta"), g("eps"))
    nu0, nu1 = g("nu0"), g("nu1")
    decay = math.exp(-(4.0 * nu0 + 2.0 * nu1) * abs(t))
    if phi <= 1.0:
        lower, case = th0 ** 2 / (4.0 * th1) * decay, "phi<=1"
    else:
        lower, case = th0 ** 2 * decay / (4.0 * max(th1, (phi - 1.0) * th0)), "phi>1"
    upper = 4.0 * (th1 + psi) * math.exp(2.0 * nu1 * abs(t))
    return lower, upper, case


def _feedback_direction(run: _Run, ev: TransitionEvaluator, K: ExprMatrix, t_grid, sigma_grid,
                        tag: str, eig_tol: float, lower_scale: float):
    """Certify hypotheses for (ev.system, K) and check the closed-loop corridor."""
    sys = ev.system
    C = sys.require_C()
    nodes = _nodes(t_grid, sigma_grid)
    stage = f"hypotheses{tag}"
    env = run.envelope(ev, EnvelopeKind.NUBG, PairGrid(nodes, nodes), ("K0", "a", "eps"), tag)
    run.headroom(f"NUBG headroom{tag}", env, stage)
    run.gain(K, nodes, True, ("Kg", "delta"), tag)
    run.cap_headroom(f"gain bound headroom{tag}", run.c["Kg" + tag], stage)
    run.gain(C, nodes, False, ("Cg", "gamma"), tag)
    run.cap_headroom(f"output growth headroom{tag}", run.c["Cg" + tag], stage)
    run.margin(f"delta - (gamma + eps){tag}",
               run.c["delta" + tag] - run.c["gamma" + tag] - run.c["eps" + tag], stage)
    verdict = classify(ev, Property.NUCO, t_grid, sigma_grid, run.caps, eig_tol)
    run.report.checks[f"open-loop NUCO{tag}"] = verdict.status is Status.CERTIFIED
    if verdict.status is not Status.CERTIFIED:
        run.report.status = ReportStatus.HYPOTHESIS_VIOLATED
        run.report.failed_stage = f"open-loop NUCO fit{tag}"
        run.report.notes.append(f"open-loop system is not NUCO on the window{tag}")
        raise _Gate("open-loop NUCO")
    side = verdict.fit.sides["M"]
    c = run.c
    c["nu0" + tag], c["nu1" + tag] = side.nu_lower, side.nu_upper
    c["theta0" + tag] = {str(s): v for s, v in side.floors.items()}
    c["theta1" + tag] = {str(s): v for s, v in side.ceilings.items()}
    c["sigma0" + tag] = {str(t): s for t, s in verdict.fit.sigma0.items()}
    c["lower_scale" + tag] = lower_scale
    closed = output_injection(sys, FeedbackGain(GainRole.OUTPUT_INJECTION, K))
    tab = eigen_table(ev.with_system(closed), "MN", t_grid, sigma_grid)
    cases = {}
    for i, t in enumerate(tab.ts):
        for j, s in enumerate(tab.sigmas):
            if s < verdict.fit.sigma0[t]:
                continue
            row = _corridor_row(c, tag, t, s, float(tab.lam_min["M"][i, j]), float(tab.lam_max["M"][i, j]))
            cases[str(s)] = row["case"]
            run.report.rows.append(row)
    c["phi_case" + tag] = cases


def _corridor_row(c, tag, t, s, lmin, lmax) -> dict:
    lower, upper, case = corridor(t, s, c, tag)
    lower *= c["lower_scale" + tag]
    sl = (lmin - lower) / lower
    su = (upper - lmax) / upper
    return {"direction": tag.lstrip("_") or "forward", "t": t, "sigma": s, "lambda_min": lmin,
            "lambda_max": lmax, "lower": lower, "upper": upper, "case": case,
            "slack_lower": sl, "slack_upper": su, "slack": min(sl, su)}


def verify_feedback_observability(ev: TransitionEvaluator, gain: FeedbackGain | ExprMatrix,
                                  t_grid: Sequence[float], sigma_grid: Sequence[float],
                                  hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                                  eig_tol: float = EIG_TOL, slack_tol: float = SLACK_TOL,
                                  both_directions: bool = True,
                                  lower_scale: float = 1.0) -> TheoremReport:
    """Closed-loop observability Gramian stays in the corridor built from the
    open-loop NUCO fit. The reverse direction swaps (A, K) for (A - KC, -K)
    and re-certifies every hypothesis for that pair."""
    K = _injection_gain(ev.system, gain)
    run = _Run(Theorem.FEEDBACK_OBS, caps, slack_tol, hyp)
    try:
        _feedback_direction(run, ev, K, t_grid, sigma_grid, "", eig_tol, lower_scale)
        if both_directions:
            closed = output_injection(ev.system, FeedbackGain(GainRole.OUTPUT_INJECTION, K))
            run.pinned = HypothesisSet()
            _feedback_direction(run, ev.with_system(closed), -K, t_grid, sigma_grid,
                                "_reverse", eig_tol, lower_scale)
    except _Gate:
        return run.report
    return run.finish()


def _injection_gain(sys: LtvSystem, gain) -> ExprMatrix:
    if isinstance(gain, ExprMatrix):
        gain = FeedbackGain(GainRole.OUTPUT_INJECTION, gain)
    if gain.role is GainRole.OUTPUT_FEEDBACK:
        gain.check(sys)
        return sys.require_B() @ gain.entries
    if gain.role not in (GainRole.OUTPUT_INJECTION, GainRole.OBSERVER):
        raise ValueError(f"expected an output gain, got {gain.role.value}")
    gain.check(sys)
    return gain.entries


# detectability implies NUCO

def w_value(alpha, ell, mu) -> float:
    return 1.0 / math.sqrt(2.0 * (alpha + ell - mu)) + 1.0 / math.sqrt(2.0 * abs(alpha - ell + mu))


def theta0_value(K, Lg, w) -> float:
    return 1.0 / (9.0 * (K * Lg * w) ** 2)


def a_threshold(t, K, Ke, alpha, mu, alpha_e, mu_e) -> float:
    d = alpha - mu + alpha_e
    return math.log(3.0 * K * Ke) / d + (mu + mu_e) / d * abs(t)


def verify_detectability_implies_nuco(ev: TransitionEvaluator, L: FeedbackGain | ExprMatrix,
                                      t_grid: Sequence[float], sigma_grid: Sequence[float],
                                      hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                                      eig_tol: float = EIG_TOL,
                                      slack_tol: float = SLACK_TOL) -> TheoremReport:
    run = _Run(Theorem.DETECT_IMPLIES_NUCO, caps, slack_tol, hyp)
    try:
        _detect(run, ev, L, t_grid, sigma_grid, eig_tol)
    except _Gate:
        return run.report
    return run.finish()


def _detect(run: _Run, ev, L, t_grid, sigma_grid, eig_tol, stage_prefix: str = ""):
    sys = ev.system
    L = _injection_gain(sys, L if isinstance(L, FeedbackGain) else FeedbackGain(GainRole.OBSERVER, L))
    C = sys.require_C()
    nodes = _nodes(t_grid, sigma_grid)
    grid = PairGrid(nodes, nodes)
    st = stage_prefix + "hypotheses"
    env = run.envelope(ev, EnvelopeKind.NUBG, grid, ("K0", "a", "eps"))
    run.headroom("NUBG headroom", env, st)
    back = run.envelope(ev, EnvelopeKind.NUES_BACKWARD, grid, ("K", "alpha", "mu"))
    run.nues("plant NUES-backward", back, st)
    run.margin("alpha - mu", run.c["alpha"] - run.c["mu"], st)
    err = observer_error_system(sys, FeedbackGain(GainRole.OBSERVER, L))
    ev_e = ev.with_system(err)
    fwd = run.envelope(ev_e, EnvelopeKind.NUES_FORWARD, grid, ("Ke", "alpha_e", "mu_e"))
    run.nues("alpha_e (error NUES-forward)", fwd, st)
    run.gain(C, nodes, False, ("Cg", "gamma"))
    run.cap_headroom("output growth headroom", run.c["Cg"], st)
    run.gain(L, nodes, True, ("Lg", "ell"))
    run.margin("ell - (alpha + mu)", run.c["ell"] - run.c["alpha"] - run.c["mu"], st)
    run.margin("ell - (gamma + eps)", run.c["ell"] - run.c["gamma"] - run.c["eps"], st)
    c = run.c
    c["w"] = w_value(c["alpha"], c["ell"], c["mu"])
    c["theta0"] = theta0_value(c["K"], c["Lg"], c["w"])
    verdict = classify(ev, Property.NUCO, t_grid, sigma_grid, run.caps, eig_tol)
    run.report.checks["NUCO certified"] = verdict.status is Status.CERTIFIED
    tab = eigen_table(ev_e, "MN", t_grid, sigma_grid)
    thresholds = {}
    for i, t in enumerate(tab.ts):
        thr = a_threshold(t, c["K"], c["Ke"], c["alpha"], c["mu"], c["alpha_e"], c["mu_e"])
        thresholds[str(t)] = thr
        for j, s in enumerate(tab.sigmas):
            # the proof's case split needs t + sigma > 0
            if s < thr or t + s <= 0.0:
                continue
            run.report.rows.append(_floor_row(c, t, s, float(tab.lam_min["M"][i, j])))
    c["A_threshold"] = thresholds
    run.report.checks["floor pairs checked"] = bool(run.report.rows)
    if not run.report.rows:
        run.report.notes.append("no grid pair satisfies the window-length condition; floor check vacuous")
    return verdict


def _floor_row(c, t, s, lmin) -> dict:
    floor = c["theta0"] * math.exp(-2.0 * c["alpha"] * abs(t))
    return {"t": t, "sigma": s, "lambda_min": lmin, "floor": floor,
            "slack": (lmin - floor) / floor}


# state feedback preserves NUCC

def verify_feedback_controllability(ev: TransitionEvaluator, F: FeedbackGain | ExprMatrix,
                                    t_grid: Sequence[float], sigma_grid: Sequence[float],
                                    hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                                    eig_tol: float = EIG_TOL,
                                    slack_tol: float = SLACK_TOL) -> TheoremReport:
    sys = ev.system
    F = F if isinstance(F, FeedbackGain) else FeedbackGain(GainRole.STATE_FEEDBACK, F)
    B = sys.require_B()
    run = _Run(Theorem.FEEDBACK_CTRL, caps, slack_tol, hyp)
    nodes = _nodes(t_grid, sigma_grid)
    try:
        env = run.envelope(ev, EnvelopeKind.NUBG, PairGrid(nodes, nodes), ("K0", "a", "eps"))
        run.headroom("NUBG headroom", env)
        run.gain(F.entries.T, nodes, True, ("Lc", "ell_c"))
        run.cap_headroom("feedback bound headroom", run.c["Lc"])
        run.gain(B.T, nodes, False, ("Bc", "beta_c"))
        run.cap_headroom("input growth headroom", run.c["Bc"])
        run.margin("ell_c - (beta_c + eps)", run.c["ell_c"] - run.c["beta_c"] - run.c["eps"])
    except _Gate:
        return run.report
    closed = state_feedback(sys, F)
    v_open = classify(ev, Property.NUCC, t_grid, sigma_grid, caps, eig_tol)
    v_closed = classify(ev.with_system(closed), Property.NUCC, t_grid, sigma_grid, caps, eig_tol)
    run.c["open_loop"] = v_open.as_dict()
    run.c["closed_loop"] = v_closed.as_dict()
    run.report.checks["same NUCC status"] = v_open.status is v_closed.status
    return run.finish()


# stability equivalence

def verify_stability_equivalence(ev: TransitionEvaluator, grid: PairGrid, caps: Caps = Caps(),
                                 slack_tol: float = SLACK_TOL) -> TheoremReport:
    """NUES-forward of V, NUES-backward of -V^T and NUES-forward of V^T(-t) agree."""
    run = _Run(Theorem.STAB_EQUIV, caps, slack_tol, None)
    sys = ev.system
    legs = {
        "forward(V)": (ev, EnvelopeKind.NUES_FORWARD, grid),
        "backward(adjoint)": (ev.with_system(plant_adjoint(sys)), EnvelopeKind.NUES_BACKWARD, grid),
        "forward(dual)": (ev.with_system(plant_dual(sys)), EnvelopeKind.NUES_FORWARD, grid.reflected()),
    }
    statuses = {}
    for name, (e, kind, g) in legs.items():
        env = fit_from_samples(collect_samples(e, kind, g), kind, run._rates(), run._nus(), g.describe())
        statuses[name] = nues_status(env, caps)
        run.c[name] = dict(env.as_dict(), status=statuses[name].value)
        run.report.rows.append({"leg": name, "slack": env.slack})
    run.report.checks["three fits agree"] = len(set(statuses.values())) == 1
    run.c["all_certified"] = set(statuses.values()) == {Status.CERTIFIED}
    if set(statuses.values()) == {Status.INCONCLUSIVE}:
        run.report.notes.append("zero decay rate on every leg: the definition needs a positive rate")
    return run.finish()


# stabilizability implies NUCC

def verify_stabilizability_implies_nucc(ev: TransitionEvaluator, F: FeedbackGain | ExprMatrix,
                                        t_grid: Sequence[float], sigma_grid: Sequence[float],
                                        hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                                        eig_tol: float = EIG_TOL,
                                        slack_tol: float = SLACK_TOL) -> TheoremReport:
    """Stage 0 hypotheses, 1 dual plant NUES-backward, 2 detectability of the
    dual pair with observer F^T(-t), 3 NUCC of the original system."""
    sys = ev.system
    F = F if isinstance(F, FeedbackGain) else FeedbackGain(GainRole.STATE_FEEDBACK, F)
    F.check(sys)
    B = sys.require_B()
    run = _Run(Theorem.STAB_IMPLIES_NUCC, caps, slack_tol, hyp)
    nodes = _nodes(t_grid, sigma_grid)
    grid = PairGrid(nodes, nodes)
    s0 = "0: hypotheses"
    try:
        env = run.envelope(ev, EnvelopeKind.NUBG, grid, ("K0", "a", "eps"))
        run.headroom("NUBG headroom", env, s0)
        back = run.envelope(ev, EnvelopeKind.NUES_BACKWARD, grid, ("K", "alpha", "mu"))
        run.nues("plant NUES-backward", back, s0)
        run.margin("alpha - mu", run.c["alpha"] - run.c["mu"], s0)
        closed = state_feedback(sys, F)
        fwd = run.envelope(ev.with_system(closed), EnvelopeKind.NUES_FORWARD, grid,
                           ("Ke", "alpha_e", "mu_e"))
        run.nues("closed-loop NUES-forward", fwd, "0: closed-loop NUES-forward")
        run.gain(F.entries.T, nodes, True, ("Lc", "ell_c"))
        run.gain(B.T, nodes, False, ("Bc", "beta_c"))
        run.cap_headroom("input growth headroom", run.c["Bc"], s0)
        run.margin("ell_c - (alpha + mu)", run.c["ell_c"] - run.c["alpha"] - run.c["mu"], s0)
        run.margin("ell_c - (beta_c + eps)", run.c["ell_c"] - run.c["beta_c"] - run.c["eps"], s0)
    except _Gate:
        return run.report

    rep = run.report
    # stage 1
    d_plant = ev.with_system(plant_dual(sys))
    rgrid = grid.reflected()
    denv = fit_from_samples(collect_samples(d_plant, EnvelopeKind.NUES_BACKWARD, rgrid),
                            EnvelopeKind.NUES_BACKWARD, run._rates(), run._nus(), rgrid.describe())
    ok1 = nues_status(denv, caps) is Status.CERTIFIED
    rep.checks["1: dual plant NUES-backward"] = ok1
    rep.constants["stage1"] = denv.as_dict()
    # stage 2: the dual pair (A^T(-t), B^T(-t)) read as an observed system
    lo, hi = sys.domain
    dual_pair = LtvSystem(f"dualpair({sys.name})", sys.A.T.reflect(), C=B.T.reflect(),
                          domain=(-hi, -lo))
    # symmetric grids map onto themselves under t -> -t
    ts_r = sorted(-float(t) for t in t_grid)
    sub = _Run(Theorem.DETECT_IMPLIES_NUCO, caps, slack_tol, None)
    try:
        _detect(sub, ev.with_system(dual_pair), FeedbackGain(GainRole.OBSERVER, F.entries.T.reflect()),
                ts_r, sigma_grid, eig_tol)
        sub.finish()
    except _Gate:
        pass
    ok2 = sub.report.status is ReportStatus.PASS
    rep.checks["2: detectability of dual pair"] = ok2
    rep.constants["stage2"] = sub.report.as_dict()
    # stage 3
    v = classify(ev, Property.NUCC, t_grid, sigma_grid, caps, eig_tol)
    ok3 = v.status is Status.CERTIFIED
    rep.checks["3: NUCC certified"] = ok3
    rep.constants["stage3"] = v.as_dict()
    rep.rows.extend(dict(r, stage=2) for r in sub.report.rows)
    for name, ok in rep.checks.items():
        if not ok:
            rep.failed_stage = name
            break
    return run.finish()


# two of three

_TWO_OF_THREE = {
    Theorem.TWO_OF_THREE_OBS: (("M", "growth"), False),
    Theorem.TWO_OF_THREE_CTRL: (("W", "growth"), False),
    Theorem.TWO_OF_THREE_UNIFORM_OBS: (("M", "growth"), True),
    Theorem.TWO_OF_THREE_UNIFORM_CTRL: (("W", "growth"), True),
}


def verify_two_of_three(ev: TransitionEvaluator, theorem: Theorem | str, t_grid, sigma_grid,
                        which_two: tuple[str, str] | None = None, caps: Caps = Caps(),
                        eig_tol: float = EIG_TOL, slack_tol: float = SLACK_TOL) -> TheoremReport:
    theorem = Theorem(theorem)
    default, uniform = _TWO_OF_THREE[theorem]
    run = _Run(theorem, caps, slack_tol, None)
    try:
        res = two_of_three(ev, which_two or default, t_grid, sigma_grid, uniform, caps, eig_tol)
    except PreconditionError as exc:
        run.report.status = ReportStatus.HYPOTHESIS_VIOLATED
        run.report.failed_stage = "given properties"
        run.report.notes.append(str(exc))
        return run.report
    run.c.update(res.as_dict())
    run.report.checks[f"{res.derived} certified"] = res.passed
    return run.finish()


# recheck

def recheck(report: TheoremReport) -> float:
    """Largest difference between stored slacks and slacks recomputed from the
    stored constants and row inputs."""
    c = report.constants
    worst = 0.0
    for row in report.rows:
        th = report.theorem
        if th is Theorem.PERTURB_LEMMA:
            fresh = _perturb_bound(c, row["t"], row["s"]) - row["log_value"]
        elif th is Theorem.FEEDBACK_OBS:
            tag = "" if row["direction"] == "forward" else "_" + row["direction"]
            fresh = _corridor_row(c, tag, row["t"], row["sigma"], row["lambda_min"], row["lambda_max"])["slack"]
        elif th is Theorem.DETECT_IMPLIES_NUCO:
            fresh = _floor_row(c, row["t"], row["sigma"], row["lambda_min"])["slack"]
        elif th is Theorem.STAB_IMPLIES_NUCC:
            fresh = _floor_row(c["stage2"]["constants"], row["t"], row["sigma"], row["lambda_min"])["slack"]
        elif th is Theorem.GRAMIAN_DUALITY:
            fresh = c["tolerance"] - row["residual"]
        else:
            fresh = row["slack"]
        worst = max(worst, abs(fresh - row["slack"]))
    return worst


# dispatch by id

def _need(gains: dict, *roles: GainRole) -> FeedbackGain:
    for role in roles:
        if role in gains:
            return gains[role]
    names = " or ".join(r.value for r in roles)
    raise ValueError(f"this check needs a {names} gain")


def run_theorem(ev: TransitionEvaluator, theorem: Theorem | str, t_grid: Sequence[float],
                sigma_grid: Sequence[float], gains: dict | None = None,
                hyp: HypothesisSet | None = None, caps: Caps = Caps(),
                eig_tol: float = EIG_TOL, slack_tol: float = SLACK_TOL) -> TheoremReport:
    """Run one check by its stable id; ``gains`` maps GainRole to FeedbackGain."""
    th = Theorem(theorem)
    gains = gains or {}
    square = PairGrid(t_grid, t_grid)
    if th is Theorem.GRAMIAN_DUALITY:
        return verify_gramian_duality(ev, t_grid, sigma_grid, slack_tol=slack_tol)
    if th is Theorem.PERTURB_LEMMA:
        P = _need(gains, GainRole.PERTURBATION)
        return verify_perturbation_lemma(ev, P.entries, square, hyp, caps, slack_tol)
    if th is Theorem.FEEDBACK_OBS:
        K = _need(gains, GainRole.OUTPUT_INJECTION, GainRole.OUTPUT_FEEDBACK)
        return verify_feedback_observability(ev, K, t_grid, sigma_grid, hyp, caps, eig_tol, slack_tol)
    if th is Theorem.DETECT_IMPLIES_NUCO:
        L = _need(gains, GainRole.OBSERVER)
        return verify_detectability_implies_nuco(ev, L, t_grid, sigma_grid, hyp, caps, eig_tol, slack_tol)
    if th is Theorem.FEEDBACK_CTRL:
        F = _need(gains, GainRole.STATE_FEEDBACK)
        return verify_feedback_controllability(ev, F, t_grid, sigma_grid, hyp, caps, eig_tol, slack_tol)
    if th is Theorem.STAB_EQUIV:
        return verify_stability_equivalence(ev, square, caps, slack_tol)
    if th is Theorem.STAB_IMPLIES_NUCC:
        F = _need(gains, GainRole.STATE_FEEDBACK)
        return verify_stabilizability_implies_nucc(ev, F, t_grid, sigma_grid, hyp, caps, eig_tol, slack_tol)
    return verify_two_of_three(ev, th, t_grid, sigma_grid, caps=caps, eig_tol=eig_tol,
                               slack_tol=slack_tol)
