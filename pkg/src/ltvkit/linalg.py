"""Small dense symmetric eigenvalue routines."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigvalsh(S, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol`` times the Frobenius norm of the whole matrix.
    """
    a = np.array(S, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 1:
        return a.reshape(1)
    a = 0.5 * (a + a.T)
    total = math.sqrt(float(np.sum(a * a)))
    if total == 0.0:
        return np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(a[mask] ** 2)))  # direct; total - diag cancels
        if off <= tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (float(a[q, q]) - float(a[p, p])) / (2.0 * float(apq))
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # first-order rotation; theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows and columns p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def extreme_eigs(S) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric matrix."""
    S = np.asarray(S, dtype=float)
    if S.shape == (1, 1):
        v = float(S[0, 0])
        return v, v
    ev = jacobi_eigvalsh(S)
    return float(ev[0]), float(ev[-1])


def spectral_norm(M) -> float:
    """Operator 2-norm, from the largest eigenvalue of M^T M."""
    M = np.asarray(M, dtype=float)
    if M.size == 1:
        return abs(float(M.flat[0]))
    if not np.any(M):
        return 0.0
    # scale first so that M^T M cannot overflow for large transitions
    scale = float(np.max(np.abs(M)))
    Ms = M / scale
    lam = jacobi_eigvalsh(Ms.T @ Ms)[-1]
    return scale * math.sqrt(max(float(lam), 0.0))


def log_spectral_norm(M) -> float:
    nrm = spectral_norm(M)
    return math.log(nrm) if nrm > 0.0 else -math.inf
