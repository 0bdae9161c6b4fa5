"""Tri-valued observability / controllability verdicts on finite (t, sigma) grids.

Finite-window reading used throughout. The constants of a non-uniform
definition are functions of sigma, and the |t|-dependence must be carried by
the exponents. A pair of exponents is feasible when the resulting floor and
ceiling at each sigma stay within a factor ``caps.pref`` of the Gramian
observed at the grid time closest to the origin. Without such a cap every
finite window would be trivially uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .common import EIG_TOL, NU_GRID, RATE_GRID, Caps, Status
from .envelopes import EnvelopeKind, PairGrid, falsify_uniform, fit_envelope
from .gramians import gramian_table
from .system import TransitionEvaluator


class Property(str, Enum):
    CO = "CO"
    UCO = "UCO"
    NUCO = "NUCO"
    CC = "CC"
    UCC = "UCC"
    NUCC = "NUCC"

    @property
    def pair(self) -> str:
        return "MN" if self in (Property.CO, Property.UCO, Property.NUCO) else "WK"


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class EigenTable:
    """Extreme eigenvalues of one Gramian family over a (t, sigma) grid."""

    pair: str
    ts: tuple[float, ...]
    sigmas: tuple[float, ...]
    lam_min: dict  # kind -> array (len(ts), len(sigmas))
    lam_max: dict


def eigen_table(ev: TransitionEvaluator, pair: str, ts: Sequence[float],
                sigmas: Sequence[float]) -> EigenTable:
    ts = tuple(float(t) for t in ts)
    sigmas = tuple(float(s) for s in sigmas)
    if not ts or not sigmas:
        raise ValueError("empty grid")
    if min(sigmas) <= 0:
        raise ValueError("window lengths must be positive")
    lo, hi = ev.system.domain
    if min(ts) < lo or max(ts) + max(sigmas) > hi:
        raise ValueError(f"grid [{min(ts)}, {max(ts) + max(sigmas)}] exceeds domain [{lo}, {hi}]")
    rows = gramian_table(ev, pair, ts, sigmas)
    lam_min, lam_max = {}, {}
    for kind in pair:
        lam_min[kind] = np.array([[g.lambda_min for g in row[kind]] for row in rows])
        lam_max[kind] = np.array([[g.lambda_max for g in row[kind]] for row in rows])
    return EigenTable(pair, ts, sigmas, lam_min, lam_max)


@dataclass(frozen=True)
class SideFit:
    """Two-sided exponential corridor for one Gramian."""

    kind: str
    nu_lower: float
    nu_upper: float
    floors: dict  # sigma -> floor constant
    ceilings: dict  # sigma -> ceiling constant

    def as_dict(self) -> dict:
        return {"kind": self.kind, "nu_lower": self.nu_lower, "nu_upper": self.nu_upper,
                "floors": _keyed(self.floors), "ceilings": _keyed(self.ceilings)}


@dataclass(frozen=True)
class GramianEnvelopeFit:
    sides: dict  # kind -> SideFit
    sigma0: dict  # t -> sigma0(t)
    signed_time: bool = False

    def weight(self, t: float) -> float:
        return t if self.signed_time else abs(t)

    def lower(self, kind: str, t: float, sigma: float) -> float:
        side = self.sides[kind]
        return side.floors[sigma] * math.exp(-2.0 * side.nu_lower * self.weight(t))

    def upper(self, kind: str, t: float, sigma: float) -> float:
        side = self.sides[kind]
        return side.ceilings[sigma] * math.exp(2.0 * side.nu_upper * self.weight(t))

    def as_dict(self) -> dict:
        return {"sides": {k: v.as_dict() for k, v in sorted(self.sides.items())},
                "sigma0": _keyed(self.sigma0), "signed_time": self.signed_time}


def _keyed(table: dict) -> list:
    return [[k, v] for k, v in sorted(table.items())]


@dataclass(frozen=True)
class Verdict:
    property: Property
    status: Status
    fit: GramianEnvelopeFit | None = None
    witness: dict | None = None
    window: dict = field(default_factory=dict)
    caps: Caps = Caps()
    notes: tuple[str, ...] = ()
    table: EigenTable | None = field(default=None, compare=False, repr=False)

    def as_dict(self) -> dict:
        return {"property": self.property.value, "status": self.status.value,
                "fit": None if self.fit is None else self.fit.as_dict(),
                "witness": self.witness, "window": self.window,
                "caps": self.caps.as_dict(), "notes": list(self.notes)}

    def surface_rows(self, kind: str) -> list[tuple]:
        """(t, sigma, lambda_min, lambda_max, bound_lower, bound_upper) rows."""
        tab = self.table
        rows = []
        for i, t in enumerate(tab.ts):
            for j, s in enumerate(tab.sigmas):
                lo = up = math.nan
                if self.fit is not None and kind in self.fit.sides and s >= self.fit.sigma0.get(t, math.inf):
                    lo = self.fit.lower(kind, t, s)
                    up = self.fit.upper(kind, t, s)
                rows.append((t, s, float(tab.lam_min[kind][i, j]), float(tab.lam_max[kind][i, j]), lo, up))
        return rows


def _sigma0(tab: EigenTable, kinds: Sequence[str], eig_tol: float) -> dict:
    """Smallest grid sigma from which every larger grid sigma is positive definite."""
    out = {}
    for i, t in enumerate(tab.ts):
        ok = np.all([tab.lam_min[k][i] > eig_tol for k in kinds], axis=0)
        s0 = None
        for j in range(len(tab.sigmas) - 1, -1, -1):
            if not ok[j]:
                break
            s0 = tab.sigmas[j]
        out[t] = s0
    return out


def _reference_index(ts: Sequence[float]) -> int:
    return min(range(len(ts)), key=lambda i: (abs(ts[i]), ts[i]))


def _side_search(tab: EigenTable, kind: str, admissible: np.ndarray, weights: np.ndarray,
                 nus: np.ndarray, caps: Caps):
    """Smallest feasible lower and upper exponents for one Gramian.

    Returns (nu_lower, floors, nu_upper, ceilings, worst) with None for an
    infeasible side; ``worst`` locates the tightest violation at the largest
    exponent tried.
    """
    lmin, lmax = tab.lam_min[kind], tab.lam_max[kind]
    ref = _reference_index(tab.ts)
    cols = [j for j in range(len(tab.sigmas)) if admissible[:, j].any()]

    def floors_for(nu):
        scaled = np.where(admissible, lmin * np.exp(2.0 * nu * weights)[:, None], np.inf)
        return scaled.min(axis=0), scaled

    def ceilings_for(nu):
        scaled = np.where(admissible, lmax * np.exp(-2.0 * nu * weights)[:, None], -np.inf)
        return scaled.max(axis=0), scaled

    def lower_ok(floor):
        return all(floor[j] >= lmin[ref, j] / caps.pref for j in cols if admissible[ref, j])

    def upper_ok(ceil):
        return all(ceil[j] <= lmax[ref, j] * caps.pref for j in cols if admissible[ref, j])

    nu_lo = nu_up = None
    floors = ceilings = None
    for nu in nus:
        fl, _ = floors_for(nu)
        if lower_ok(fl):
            nu_lo, floors = float(nu), {tab.sigmas[j]: float(fl[j]) for j in cols}
            break
    for nu in nus:
        ce, _ = ceilings_for(nu)
        if upper_ok(ce):
            nu_up, ceilings = float(nu), {tab.sigmas[j]: float(ce[j]) for j in cols}
            break

    worst = None
    if nu_lo is None:
        _, scaled = floors_for(nus[-1])
        ratio = np.where(admissible, scaled / lmin[ref][None, :], np.inf)
        i, j = np.unravel_index(np.argmin(ratio), ratio.shape)
        worst = {"gramian": kind, "side": "lower", "t": tab.ts[i], "sigma": tab.sigmas[j],
                 "eigenvalue": float(lmin[i, j]), "exponent": float(nus[-1])}
    elif nu_up is None:
        _, scaled = ceilings_for(nus[-1])
        ratio = np.where(admissible, scaled / lmax[ref][None, :], -np.inf)
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        worst = {"gramian": kind, "side": "upper", "t": tab.ts[i], "sigma": tab.sigmas[j],
                 "eigenvalue": float(lmax[i, j]), "exponent": float(nus[-1])}
    return nu_lo, floors, nu_up, ceilings, worst


def _kalman_check(ev: TransitionEvaluator, ts, sigmas, caps: Caps):
    width = min(sigmas)
    lo, hi = ev.system.domain
    anchors = [t for t in ts if lo <= t - width and t <= hi]
    if not anchors:
        return None
    return falsify_uniform(ev, width, anchors, caps.pref)


def classify(ev: TransitionEvaluator, prop: Property | str, t_grid: Sequence[float],
             sigma_grid: Sequence[float], caps: Caps = Caps(), eig_tol: float = EIG_TOL,
             nu_grid: Sequence[float] = NU_GRID, signed_time: bool | None = None,
             table: EigenTable | None = None) -> Verdict:
    """Verdict for one property on the window spanned by the grids.

    ``signed_time`` applies to NUCC only; by default its anchor factor uses
    the signed time as in the controllability definition, not |t|.
    """
    prop = Property(prop)
    pair = prop.pair
    kinds = tuple(pair)
    if pair == "MN":
        ev.system.require_C()
    else:
        ev.system.require_B()
    tab = table or eigen_table(ev, pair, t_grid, sigma_grid)
    window = {"t": list(tab.ts), "sigma": list(tab.sigmas)}
    nus = np.asarray([v for v in sorted(set(float(x) for x in nu_grid)) if v <= caps.nu])
    if nus.size == 0:
        nus = np.zeros(1)
    notes: list[str] = []

    if prop in (Property.CO, Property.CC):
        kind = kinds[0]
        lmin = tab.lam_min[kind]
        for i, t in enumerate(tab.ts):
            if not (lmin[i] > eig_tol).any():
                j = int(np.argmax(lmin[i]))
                witness = {"gramian": kind, "side": "lower", "t": t, "sigma": tab.sigmas[j],
                           "eigenvalue": float(lmin[i, j])}
                return Verdict(prop, Status.FALSIFIED, witness=witness, window=window,
                               caps=caps, notes=("no window length in the grid is positive definite",),
                               table=tab)
        s0 = {}
        for i, t in enumerate(tab.ts):
            s0[t] = next(s for j, s in enumerate(tab.sigmas) if lmin[i, j] > eig_tol)
        sides = {kind: SideFit(kind, math.nan, math.nan,
                               {s: float(lmin[:, j].min()) for j, s in enumerate(tab.sigmas)},
                               {s: float(tab.lam_max[kind][:, j].max()) for j, s in enumerate(tab.sigmas)})}
        return Verdict(prop, Status.CERTIFIED, GramianEnvelopeFit(sides, s0), window=window,
                       caps=caps, table=tab)

    uniform = prop in (Property.UCO, Property.UCC)
    signed = prop is Property.NUCC and (True if signed_time is None else signed_time)
    ts = np.asarray(tab.ts)
    weights = ts if signed else np.abs(ts)
    if signed and (ts < 0).any():
        notes.append("controllability anchor factor uses signed t as printed; "
                     "for t < 0 it differs from the |t| form used for observability")

    sigma0 = _sigma0(tab, kinds, eig_tol)
    missing = [t for t, s in sigma0.items() if s is None]
    if missing:
        t = missing[0]
        i = tab.ts.index(t)
        k = min(kinds, key=lambda k: tab.lam_min[k][i, -1])
        witness = {"gramian": k, "side": "lower", "t": t, "sigma": tab.sigmas[-1],
                   "eigenvalue": float(tab.lam_min[k][i, -1])}
        return Verdict(prop, Status.FALSIFIED, witness=witness, window=window, caps=caps,
                       notes=tuple(notes + ["Gramian singular up to the largest grid window"]),
                       table=tab)

    if uniform:
        kal = _kalman_check(ev, tab.ts, tab.sigmas, caps)
        if kal is not None and kal.status is Status.FALSIFIED:
            witness = {"kalman": kal.as_dict()}
            return Verdict(prop, Status.FALSIFIED, witness=witness, window=window, caps=caps,
                           notes=tuple(notes + ["transition growth along constant-width windows exceeds the cap"]),
                           table=tab)
        s_star = max(sigma0.values())
        sigma0 = {t: s_star for t in tab.ts}
        nus = np.zeros(1)

    admissible = np.array([[s >= sigma0[t] for s in tab.sigmas] for t in tab.ts])
    sides = {}
    for kind in kinds:
        nu_lo, floors, nu_up, ceilings, worst = _side_search(tab, kind, admissible, weights, nus, caps)
        if worst is not None:
            return Verdict(prop, Status.FALSIFIED, witness=worst, window=window, caps=caps,
                           notes=tuple(notes), table=tab)
        sides[kind] = SideFit(kind, nu_lo, nu_up, floors, ceilings)
    fit = GramianEnvelopeFit(sides, sigma0, signed)
    return Verdict(prop, Status.CERTIFIED, fit, window=window, caps=caps, notes=tuple(notes),
                   table=tab)


# two of three

@dataclass(frozen=True)
class TwoOfThreeReport:
    uniform: bool
    given: tuple[str, str]
    derived: str
    statuses: dict  # property -> Status
    details: dict

    @property
    def passed(self) -> bool:
        return self.statuses[self.derived] is Status.CERTIFIED

    def as_dict(self) -> dict:
        return {"uniform": self.uniform, "given": list(self.given), "derived": self.derived,
                "statuses": {k: v.value for k, v in sorted(self.statuses.items())},
                "details": self.details, "passed": self.passed}


def _growth_certificate(ev, ts, sigmas, uniform: bool, caps: Caps):
    nodes = sorted(set(ts) | {t + s for t in ts for s in sigmas})
    kind = EnvelopeKind.UBG if uniform else EnvelopeKind.NU_KALMAN
    rates = [r for r in RATE_GRID if r <= caps.rate]
    nus = [v for v in NU_GRID if v <= caps.nu]
    env = fit_envelope(ev, kind, PairGrid(nodes, nodes), rates, nus)
    status = Status.CERTIFIED if env.prefactor <= caps.pref else Status.FALSIFIED
    return status, env.as_dict()


def two_of_three(ev: TransitionEvaluator, which_two: tuple[str, str], t_grid: Sequence[float],
                 sigma_grid: Sequence[float], uniform: bool = False, caps: Caps = Caps(),
                 eig_tol: float = EIG_TOL) -> TwoOfThreeReport:
    """Given two of {first Gramian bound, second Gramian bound, growth}, check the third.

    Properties are named by Gramian letter ("M", "N" or "W", "K") and "growth"
    (uniform or non-uniform Kalman-type bound on the transition matrix).
    """
    given = tuple(which_two)
    letters = [w for w in given if w != "growth"]
    pair = "MN" if set(letters) <= {"M", "N"} else "WK"
    if not set(letters) <= set(pair) or len(set(given)) != 2:
        raise ValueError(f"cannot combine {given}")
    universe = (pair[0], pair[1], "growth")
    derived = next(p for p in universe if p not in given)

    tab = eigen_table(ev, pair, t_grid, sigma_grid)
    statuses, details = {}, {}
    prop = {("MN", True): "UCO", ("MN", False): "NUCO",
            ("WK", True): "UCC", ("WK", False): "NUCC"}[(pair, uniform)]
    nus = np.zeros(1) if uniform else np.asarray([v for v in NU_GRID if v <= caps.nu])
    ts = np.asarray(tab.ts)
    signed = prop == "NUCC"
    weights = ts if signed else np.abs(ts)
    for kind in pair:
        s0 = _sigma0(tab, kind, eig_tol)
        if any(v is None for v in s0.values()):
            statuses[kind] = Status.FALSIFIED
            details[kind] = {"reason": "singular Gramian on the window"}
            continue
        if uniform:
            s_star = max(s0.values())
            s0 = {t: s_star for t in tab.ts}
        adm = np.array([[s >= s0[t] for s in tab.sigmas] for t in tab.ts])
        nu_lo, floors, nu_up, ceilings, worst = _side_search(tab, kind, adm, weights, nus, caps)
        if worst is None:
            statuses[kind] = Status.CERTIFIED
            details[kind] = SideFit(kind, nu_lo, nu_up, floors, ceilings).as_dict()
        else:
            statuses[kind] = Status.FALSIFIED
            details[kind] = {"witness": worst}
    status, env = _growth_certificate(ev, list(tab.ts), list(tab.sigmas), uniform, caps)
    statuses["growth"] = status
    details["growth"] = env
    for g in given:
        if statuses[g] is not Status.CERTIFIED:
            raise PreconditionError(f"given property {g!r} is not certified on the window")
    return TwoOfThreeReport(uniform, given, derived, statuses, details)
