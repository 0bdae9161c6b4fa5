"""Verdict vocabulary, caps and default search grids shared across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(str, Enum):
    CERTIFIED = "CertifiedOnWindow"
    FALSIFIED = "FalsifiedUnderCaps"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Caps:
    """Upper limits on fitted rates, non-uniform exponents and prefactors."""

    rate: float = 5.0
    nu: float = 3.0
    pref: float = math.exp(10.0)

    @classmethod
    def parse(cls, text: str) -> "Caps":
        try:
            rate, nu, pref = (float(x) for x in text.split(":"))
        except ValueError:
            raise ValueError(f"caps must look like rate:nu:pref, got {text!r}") from None
        if min(rate, nu) < 0 or pref <= 0:
            raise ValueError("caps must be nonnegative with a positive prefactor cap")
        return cls(rate, nu, pref)

    def as_dict(self) -> dict:
        return {"rate": self.rate, "nu": self.nu, "pref": self.pref}


def step_grid(stop: float, step: float = 0.05) -> np.ndarray:
    """0, step, ..., stop with each node rounded to its nearest short decimal."""
    count = int(round(stop / step))
    return np.round(np.arange(count + 1) * step, 10)


RATE_GRID = step_grid(5.0)
NU_GRID = step_grid(3.0)

EIG_TOL = 1e-10
SLACK_TOL = 1e-7
# fitted log-prefactors closer than this count as tied
TIE_TOL = 1e-7


@dataclass(frozen=True)
class GridSpec:
    """t grid as lo:hi:count plus an explicit list of window lengths."""

    t_lo: float
    t_hi: float
    t_count: int
    sigmas: tuple[float, ...] = field(default=(1.0,))

    def __post_init__(self):
        if self.t_count < 1 or (self.t_count > 1 and self.t_hi < self.t_lo):
            raise ValueError("t grid needs count >= 1 and lo <= hi")
        if not self.sigmas or min(self.sigmas) <= 0:
            raise ValueError("window lengths must be positive")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))

    @classmethod
    def parse(cls, t_text: str | None, sigma_text: str | None, base: "GridSpec") -> "GridSpec":
        lo, hi, count = base.t_lo, base.t_hi, base.t_count
        if t_text:
            try:
                a, b, c = t_text.split(":")
                lo, hi, count = float(a), float(b), int(c)
            except ValueError:
                raise ValueError(f"t grid must look like lo:hi:count, got {t_text!r}") from None
        sigmas = base.sigmas
        if sigma_text:
            try:
                sigmas = tuple(float(x) for x in sigma_text.split(","))
            except ValueError:
                raise ValueError(f"sigma grid must be comma-separated numbers, got {sigma_text!r}") from None
        return cls(lo, hi, count, sigmas)

    @property
    def ts(self) -> list[float]:
        if self.t_count == 1:
            return [float(self.t_lo)]
        return np.linspace(self.t_lo, self.t_hi, self.t_count).tolist()

    def as_dict(self) -> dict:
        return {"t": {"lo": self.t_lo, "hi": self.t_hi, "count": self.t_count},
                "sigma": list(self.sigmas)}
