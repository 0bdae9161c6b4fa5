"""System-definition files (``*.system.json``)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .common import Caps, GridSpec
from .expr import ExprError
from .system import ExprMatrix, LtvSystem
from .transforms import FeedbackGain, GainRole


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


Entries = list[list[Union[str, float]]]


class GainFile(_Strict):
    role: GainRole
    entries: Entries


class TGridFile(_Strict):
    lo: float
    hi: float
    count: int = Field(ge=1)


class GridsFile(_Strict):
    t: Optional[TGridFile] = None
    sigma: Optional[list[float]] = None


class CapsFile(_Strict):
    rate: float = Field(default=Caps.rate, ge=0)
    nu: float = Field(default=Caps.nu, ge=0)
    pref: float = Field(default=Caps.pref, gt=0)


class TolerancesFile(_Strict):
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)
    eig_tol: Optional[float] = Field(default=None, gt=0)
    slack_tol: Optional[float] = Field(default=None, ge=0)


class SystemFile(_Strict):
    name: str
    n: int = Field(ge=1)
    p: int = Field(default=0, ge=0)
    m: int = Field(default=0, ge=0)
    domain: tuple[float, float]
    A: Entries
    B: Optional[Entries] = None
    C: Optional[Entries] = None
    gains: Optional[Union[GainFile, list[GainFile]]] = None
    grids: Optional[GridsFile] = None
    caps: Optional[CapsFile] = None
    tolerances: Optional[TolerancesFile] = None
    hypotheses: Optional[dict[str, float]] = None

    @field_validator("domain")
    @classmethod
    def _domain(cls, v):
        lo, hi = v
        if not lo < hi:
            raise ValueError("domain must satisfy lo < hi")
        return v

    def gain_list(self) -> list[GainFile]:
        if self.gains is None:
            return []
        return self.gains if isinstance(self.gains, list) else [self.gains]


class SystemFileError(ValueError):
    pass


def _shape(rows, name: str, want: tuple[int, int]) -> None:
    got = (len(rows), len(rows[0]) if rows else 0)
    if got != want or any(len(r) != want[1] for r in rows):
        raise SystemFileError(f"{name} must be {want[0]}x{want[1]}")


def parse_system_file(data: dict) -> SystemFile:
    try:
        sf = SystemFile.model_validate(data)
    except ValidationError as exc:
        raise SystemFileError(str(exc)) from None
    _shape(sf.A, "A", (sf.n, sf.n))
    if sf.B is not None:
        _shape(sf.B, "B", (sf.n, sf.p))
    elif sf.p:
        raise SystemFileError("p > 0 but B is missing")
    if sf.C is not None:
        _shape(sf.C, "C", (sf.m, sf.n))
    elif sf.m:
        raise SystemFileError("m > 0 but C is missing")
    return sf


def load_system_file(path: str | Path) -> SystemFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_system_file(data)


def _matrix(name: str, rows) -> ExprMatrix:
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            try:
                ExprMatrix.parse([[x]])
            except ExprError as exc:
                raise SystemFileError(f"{name}[{i}][{j}] {x!r}: {exc}") from None
    return ExprMatrix.parse(rows)


def build_system(sf: SystemFile) -> LtvSystem:
    return LtvSystem(sf.name, _matrix("A", sf.A),
                     B=None if sf.B is None else _matrix("B", sf.B),
                     C=None if sf.C is None else _matrix("C", sf.C),
                     domain=tuple(sf.domain))


def build_gains(sf: SystemFile, sys: LtvSystem) -> dict[GainRole, FeedbackGain]:
    gains = {}
    for g in sf.gain_list():
        if g.role in gains:
            raise SystemFileError(f"duplicate {g.role.value} gain")
        gain = FeedbackGain(g.role, _matrix(g.role.value, g.entries))
        gain.check(sys)
        gains[g.role] = gain
    return gains


def default_grid(domain: tuple[float, float]) -> GridSpec:
    """Nine start times and window lengths 1, 2 fitted inside the domain."""
    lo, hi = domain
    lo = max(lo, -5.0)
    hi = min(hi - 2.0, 5.0)
    if hi < lo:
        span = domain[1] - domain[0]
        return GridSpec(domain[0], domain[0], 1, (span / 2, span))
    return GridSpec(lo, hi, 9, (1.0, 2.0))


def file_grid(sf: SystemFile) -> GridSpec:
    base = default_grid(sf.domain)
    g = sf.grids
    if g is None:
        return base
    t = g.t
    return GridSpec(t.lo if t else base.t_lo, t.hi if t else base.t_hi,
                    t.count if t else base.t_count, tuple(g.sigma) if g.sigma else base.sigmas)


def file_caps(sf: SystemFile) -> Caps:
    c = sf.caps
    return Caps() if c is None else Caps(c.rate, c.nu, c.pref)


def system_to_dict(sys: LtvSystem, gains: dict | None = None, grid: GridSpec | None = None,
                   caps: Caps | None = None) -> dict:
    out = {"name": sys.name, "n": sys.n, "p": sys.p, "m": sys.m,
           "domain": [sys.domain[0], sys.domain[1]], "A": sys.A.to_strings()}
    if sys.B is not None:
        out["B"] = sys.B.to_strings()
    if sys.C is not None:
        out["C"] = sys.C.to_strings()
    if gains:
        out["gains"] = [{"role": g.role.value, "entries": g.entries.to_strings()}
                        for g in gains.values()]
    if grid is not None:
        out["grids"] = grid.as_dict()
    if caps is not None and caps != Caps():
        out["caps"] = caps.as_dict()
    if any(math.isinf(x) for x in sys.domain):
        raise ValueError("system files need a finite domain")
    return out
