"""Controllability (W, K) and observability (M, N) Gramians.

    W(a,b) = int_a^b Phi(a,s) B B^T Phi(a,s)^T ds      anchored left
    K(a,b) = int_a^b Phi(b,s) B B^T Phi(b,s)^T ds      anchored right
    M(a,b) = int_a^b Phi(s,a)^T C^T C Phi(s,a) ds      anchored left
    N(a,b) = int_a^b Phi(s,b)^T C^T C Phi(s,b) ds      anchored right

Each integral rides along with the transition ODE as an augmented state.
The factor Phi(anchor, s) is integrated directly as Y' = -Y A, Y(anchor) = I,
so no transition matrix is ever inverted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .integrate import solve
from .linalg import extreme_eigs, jacobi_eigvalsh, spectral_norm
from .system import TransitionEvaluator, parallel_map


class GramianKind(str, Enum):
    W = "W"
    K = "K"
    M = "M"
    N = "N"


CONTROL_KINDS = (GramianKind.W, GramianKind.K)
OBSERVE_KINDS = (GramianKind.M, GramianKind.N)

_ASYMMETRY_WARN = 1e-8


@dataclass(frozen=True)
class GramianSample:
    kind: GramianKind
    interval: tuple[float, float]
    value: np.ndarray
    lambda_min: float
    lambda_max: float


def _symmetrize(G: np.ndarray, kind, a, b) -> np.ndarray:
    asym = float(np.max(np.abs(G - G.T))) if G.size > 1 else 0.0
    if asym > _ASYMMETRY_WARN * max(1.0, float(np.max(np.abs(G)))):
        warnings.warn(f"{kind} Gramian on [{a}, {b}] asymmetric by {asym:.3g}", RuntimeWarning)
    return 0.5 * (G + G.T)


def _sample(kind, a, b, G) -> GramianSample:
    G = _symmetrize(G, kind, a, b)
    lo, hi = extreme_eigs(G)
    return GramianSample(GramianKind(kind), (float(a), float(b)), G, lo, hi)


def _weight(ev: TransitionEvaluator, kind: GramianKind):
    sys = ev.system
    if kind in CONTROL_KINDS:
        B = sys.require_B()
        return lambda s: (lambda b: b @ b.T)(B(s))
    C = sys.require_C()
    return lambda s: (lambda c: c.T @ c)(C(s))


def _augmented_rhs(ev: TransitionEvaluator, kind: GramianKind):
    """Right-hand side for (X, G) with G' the kind's integrand.

    For M, N: X(s) = Phi(s, anchor), X' = A X, G' = X^T C^T C X.
    For W, K: X(s) = Phi(anchor, s), X' = -X A, G' = X B B^T X^T.
    """
    n = ev.n
    A = ev.system.A
    Q = _weight(ev, kind)
    nn = n * n
    if kind in OBSERVE_KINDS:
        def f(s, y):
            X = y[:nn].reshape(n, n)
            dX = A(s) @ X
            dG = X.T @ Q(s) @ X
            return np.concatenate((dX.ravel(), dG.ravel()))
    else:
        def f(s, y):
            X = y[:nn].reshape(n, n)
            dX = -X @ A(s)
            dG = X @ Q(s) @ X.T
            return np.concatenate((dX.ravel(), dG.ravel()))
    return f


def _degrees(*codes: int, n: int) -> np.ndarray:
    return np.concatenate([np.full(n * n, c) for c in codes])


def gramian(ev: TransitionEvaluator, kind: GramianKind | str, a: float, b: float) -> GramianSample:
    """One Gramian on [a, b], integrated from its own anchor."""
    kind = GramianKind(kind)
    a, b = float(a), float(b)
    if a > b:
        raise ValueError(f"interval must satisfy a <= b, got [{a}, {b}]")
    ev.system.check_times(a, b)
    n = ev.n
    _weight(ev, kind)  # raises early if B or C is missing
    if a == b:
        return _sample(kind, a, b, np.zeros((n, n)))
    f = _augmented_rhs(ev, kind)
    y0 = np.concatenate((np.eye(n).ravel(), np.zeros(n * n)))
    left = kind in (GramianKind.W, GramianKind.M)
    start, stop = (a, b) if left else (b, a)
    y = solve(f, start, y0, [stop], ev.rtol, ev.atol, ev.max_step, degrees=_degrees(1, 2, n=n))[0]
    G = y[n * n:].reshape(n, n)
    # right-anchored kinds integrate from b down to a, which flips the sign
    return _sample(kind, a, b, G if left else -G)


def min_eig(g: GramianSample | np.ndarray) -> float:
    value = g.value if isinstance(g, GramianSample) else np.asarray(g, dtype=float)
    return float(jacobi_eigvalsh(value)[0])


def _relative(X: np.ndarray, Y: np.ndarray) -> float:
    scale = max(spectral_norm(X), spectral_norm(Y))
    if scale == 0.0:
        return 0.0
    return spectral_norm(X - Y) / scale


@dataclass(frozen=True)
class RelationResiduals:
    """Relative residuals of the four anchor-change identities (None if not applicable)."""

    K_from_W: float | None
    W_from_K: float | None
    N_from_M: float | None
    M_from_N: float | None

    def max(self) -> float:
        vals = [v for v in (self.K_from_W, self.W_from_K, self.N_from_M, self.M_from_N)
                if v is not None]
        return max(vals) if vals else 0.0


def check_gramian_relations(ev: TransitionEvaluator, a: float, b: float) -> RelationResiduals:
    """K = Phi(b,a) W Phi(b,a)^T, W = Phi(a,b) K Phi(a,b)^T, and the M/N analogues.

    All four Gramians and both transitions come from separate integrations.
    """
    sys = ev.system
    fwd = ev.transition(b, a)
    bwd = ev.transition(a, b)
    res = dict(K_from_W=None, W_from_K=None, N_from_M=None, M_from_N=None)
    if sys.B is not None:
        W = gramian(ev, "W", a, b).value
        K = gramian(ev, "K", a, b).value
        res["K_from_W"] = _relative(K, fwd @ W @ fwd.T)
        res["W_from_K"] = _relative(W, bwd @ K @ bwd.T)
    if sys.C is not None:
        M = gramian(ev, "M", a, b).value
        N = gramian(ev, "N", a, b).value
        res["N_from_M"] = _relative(N, bwd.T @ M @ bwd)
        res["M_from_N"] = _relative(M, fwd.T @ N @ fwd)
    return RelationResiduals(**res)


def gramian_sweep(ev: TransitionEvaluator, pair: str, t: float,
                  sigmas: Sequence[float]) -> dict[str, list[GramianSample]]:
    """All Gramians of one family on [t, t + sigma] for every sigma, in one pass.

    ``pair`` is "MN" or "WK". The left-anchored Gramian is integrated; the
    right-anchored one is mapped through the anchor-change identity using
    both Phi(s, t) and Phi(t, s), which are carried along the same pass.
    """
    n = ev.n
    nn = n * n
    A = ev.system.A
    observe = pair == "MN"
    if pair not in ("MN", "WK"):
        raise ValueError("pair must be 'MN' or 'WK'")
    Q = _weight(ev, GramianKind.M if observe else GramianKind.W)
    sigmas = [float(s) for s in sigmas]
    order = sorted(range(len(sigmas)), key=lambda i: sigmas[i])
    if sigmas and sigmas[order[0]] < 0:
        raise ValueError("window lengths must be nonnegative")
    ends = [t + sigmas[i] for i in order]
    ev.system.check_times(t, *ends)

    def f(s, y):
        X = y[:nn].reshape(n, n)        # Phi(s, t)
        Y = y[nn:2 * nn].reshape(n, n)  # Phi(t, s)
        At = A(s)
        q = Q(s)
        dG = X.T @ q @ X if observe else Y @ q @ Y.T
        return np.concatenate(((At @ X).ravel(), (-Y @ At).ravel(), dG.ravel()))

    eye = np.eye(n).ravel()
    y0 = np.concatenate((eye, eye, np.zeros(nn)))
    positive = [e for e in ends if e > t]
    # G is quadratic in whichever factor drives it; the other factor scales alone
    codes = (1, 3, 2) if observe else (3, 1, 2)
    ys = solve(f, t, y0, positive, ev.rtol, ev.atol, ev.max_step, degrees=_degrees(*codes, n=n))
    states = [y0] * (len(ends) - len(positive)) + ys

    left_kind, right_kind = ("M", "N") if observe else ("W", "K")
    out = {left_kind: [None] * len(sigmas), right_kind: [None] * len(sigmas)}
    for i, y in zip(order, states):
        X = y[:nn].reshape(n, n)
        Y = y[nn:2 * nn].reshape(n, n)
        G = y[2 * nn:].reshape(n, n)
        b = t + sigmas[i]
        right = Y.T @ G @ Y if observe else X @ G @ X.T
        out[left_kind][i] = _sample(left_kind, t, b, G)
        out[right_kind][i] = _sample(right_kind, t, b, right)
    return out


def _sweep_job(args):
    ev, pair, t, sigmas = args
    return gramian_sweep(ev, pair, t, sigmas)


def gramian_table(ev: TransitionEvaluator, pair: str, ts: Sequence[float],
                  sigmas: Sequence[float]) -> list[dict[str, list[GramianSample]]]:
    """gramian_sweep for every start time; rows may run in worker processes."""
    return parallel_map(_sweep_job, [(ev, pair, float(t), list(sigmas)) for t in ts], ev.workers)
