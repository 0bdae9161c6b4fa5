"""Adjoint, dual and closed-loop constructions."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .linalg import spectral_norm
from .system import ExprMatrix, LtvSystem, TransitionEvaluator


class GainRole(str, Enum):
    OUTPUT_FEEDBACK = "output_feedback"    # F, p x m, u = -F y
    OUTPUT_INJECTION = "output_injection"  # K, n x m
    OBSERVER = "observer"                  # L, n x m
    STATE_FEEDBACK = "state_feedback"      # F, p x n, u = -F x + v
    PERTURBATION = "perturbation"          # P, n x n, plant A + P


@dataclass(frozen=True)
class FeedbackGain:
    role: GainRole
    entries: ExprMatrix

    def __post_init__(self):
        object.__setattr__(self, "role", GainRole(self.role))

    def expected_shape(self, sys: LtvSystem) -> tuple[int, int]:
        return {
            GainRole.OUTPUT_FEEDBACK: (sys.p, sys.m),
            GainRole.OUTPUT_INJECTION: (sys.n, sys.m),
            GainRole.OBSERVER: (sys.n, sys.m),
            GainRole.STATE_FEEDBACK: (sys.p, sys.n),
            GainRole.PERTURBATION: (sys.n, sys.n),
        }[self.role]

    def check(self, sys: LtvSystem) -> None:
        want = self.expected_shape(sys)
        if self.entries.shape != want:
            raise ValueError(
                f"{self.role.value} gain must be {want[0]}x{want[1]} for system "
                f"{sys.name!r}, got {self.entries.shape[0]}x{self.entries.shape[1]}")

    def __neg__(self) -> "FeedbackGain":
        return FeedbackGain(self.role, -self.entries)


def adjoint(sys: LtvSystem) -> LtvSystem:
    """Plant -A^T(t) with input matrix -C^T(t), same domain."""
    C = sys.require_C()
    return LtvSystem(f"adjoint({sys.name})", -sys.A.T, B=-C.T, domain=sys.domain)


def dual(sys: LtvSystem) -> LtvSystem:
    """Plant A^T(-t) with input matrix C^T(-t) on the reflected domain."""
    C = sys.require_C()
    lo, hi = sys.domain
    return LtvSystem(f"dual({sys.name})", sys.A.T.reflect(), B=C.T.reflect(),
                     domain=(-hi, -lo))


def plant_adjoint(sys: LtvSystem) -> LtvSystem:
    """Plant -A^T(t) alone."""
    return LtvSystem(f"adjoint({sys.name})", -sys.A.T, domain=sys.domain)


def plant_dual(sys: LtvSystem) -> LtvSystem:
    """Plant A^T(-t) alone, on the reflected domain."""
    lo, hi = sys.domain
    return LtvSystem(f"dual({sys.name})", sys.A.T.reflect(), domain=(-hi, -lo))


def output_injection(sys: LtvSystem, gain: FeedbackGain) -> LtvSystem:
    """Closed loop A - K C, same C, no B. An output-feedback gain F gives K = B F."""
    C = sys.require_C()
    if gain.role is GainRole.OUTPUT_FEEDBACK:
        gain.check(sys)
        K = sys.require_B() @ gain.entries
    elif gain.role in (GainRole.OUTPUT_INJECTION, GainRole.OBSERVER):
        gain.check(sys)
        K = gain.entries
    else:
        raise ValueError(f"output injection needs an output gain, got {gain.role.value}")
    return LtvSystem(f"{sys.name} - KC", sys.A - K @ C, C=C, domain=sys.domain)


def observer_error_system(sys: LtvSystem, gain: FeedbackGain) -> LtvSystem:
    """Error dynamics A - L C of a Luenberger observer."""
    if gain.role is not GainRole.OBSERVER:
        gain = FeedbackGain(GainRole.OBSERVER, gain.entries)
    closed = output_injection(sys, gain)
    return LtvSystem(f"{sys.name} - LC", closed.A, C=closed.C, domain=sys.domain)


def state_feedback(sys: LtvSystem, gain: FeedbackGain) -> LtvSystem:
    """Plant A - B F, keeping B for the new input and C if present."""
    B = sys.require_B()
    if gain.role is not GainRole.STATE_FEEDBACK:
        raise ValueError(f"state feedback needs a state_feedback gain, got {gain.role.value}")
    gain.check(sys)
    return LtvSystem(f"{sys.name} - BF", sys.A - B @ gain.entries, B=B, C=sys.C,
                     domain=sys.domain)


def perturb(sys: LtvSystem, gain: FeedbackGain) -> LtvSystem:
    """Plant A + P."""
    gain.check(sys)
    return LtvSystem(f"{sys.name} + P", sys.A + gain.entries, B=sys.B, C=sys.C,
                     domain=sys.domain)


@dataclass(frozen=True)
class TransitionIdentityResiduals:
    adjoint: float
    dual: float


def verify_adjoint_dual_transitions(ev: TransitionEvaluator,
                                    grid: Sequence[tuple[float, float]]) -> TransitionIdentityResiduals:
    """max ||Psi_a(t,tau) - Phi(tau,t)^T|| and max ||Psi_d(t,tau) - Phi(-tau,-t)^T||.

    Absolute spectral-norm residuals scaled by max(1, ||Phi||), each side
    from its own integration.
    """
    sys = ev.system
    ev_a = ev.with_system(plant_adjoint(sys))
    ev_d = ev.with_system(plant_dual(sys))
    worst_a = worst_d = 0.0
    for t, tau in grid:
        ref = ev.transition(tau, t).T
        psi = ev_a.transition(t, tau)
        worst_a = max(worst_a, spectral_norm(psi - ref) / max(1.0, spectral_norm(ref)))
        ref = ev.transition(-tau, -t).T
        psi = ev_d.transition(t, tau)
        worst_d = max(worst_d, spectral_norm(psi - ref) / max(1.0, spectral_norm(ref)))
    return TransitionIdentityResiduals(worst_a, worst_d)
