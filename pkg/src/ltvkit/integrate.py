"""Adaptive Dormand-Prince 5(4) integrator with exact stops at requested times.

Integration may run backward (t_end < t0); the step is then negative,
which is the same as integrating forward in the reversed variable.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

# Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))
_A_ROWS = tuple(np.array(row) for row in _A)
_B5_ARR = np.array(_B5)
_E_ARR = np.array(_E)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 2_000_000


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t!r}")
        self.t = t


def _initial_step(f, t0, y0, f0, direction, rtol, atol, max_step):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def solve(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    stops: Sequence[float],
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float = math.inf,
    degrees: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Integrate y' = f(t, y) from t0 and return y at each stop.

    ``stops`` must be monotone in the direction of integration (all on the
    same side of t0). A stop equal to t0 returns y0 unchanged.

    ``degrees`` declares f homogeneous: f(t, D(c) y) = D(c) f(t, y) with
    D(c) scaling components marked 1 by c and those marked 2 by c**2.
    Components marked 3 form a second linear block with its own scale.
    The state is then kept near unit size and the scales carried
    separately, so that the tolerances act relatively even when the
    solution spans many decades.
    """
    y = np.array(y0, dtype=float)
    groups = []
    if degrees is not None:
        degrees = np.asarray(degrees)
        groups.append([degrees == 1, degrees == 2, 0.0])
        if np.any(degrees == 3):
            groups.append([degrees == 3, np.zeros(len(degrees), bool), 0.0])
    out: list[np.ndarray] = []
    if len(stops) == 0:
        return out
    t_end = stops[-1]
    direction = 1.0 if t_end >= t0 else -1.0
    prev = t0
    for s in stops:
        if (s - prev) * direction < 0:
            raise ValueError("stops must be monotone in the integration direction")
        prev = s

    t = float(t0)
    k1 = f(t, y)
    h = None
    steps = 0
    for stop in stops:
        stop = float(stop)
        while (stop - t) * direction > 0:
            if h is None:
                h = _initial_step(f, t, y, k1, direction, rtol, atol, max_step)
            remaining = abs(stop - t)
            last = h >= remaining
            step = remaining if last else h
            t_min = 1e-14 * max(1.0, abs(t))
            if step < t_min and not last:
                raise IntegrationError("step size underflow", t)
            hs = direction * step

            ks = np.empty((7, y.size))
            ks[0] = k1
            for i in range(1, 7):
                ks[i] = f(t + _C[i] * hs, y + hs * (_A_ROWS[i] @ ks[:i]))
            y_new = y + hs * (_B5_ARR @ ks)
            err = hs * (_E_ARR @ ks)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if not math.isfinite(err_norm):
                if step <= t_min:
                    raise IntegrationError("non-finite state", t)
                h = step * _MIN_FACTOR
                continue

            if err_norm <= 1.0:
                t = stop if last else t + hs
                y = y_new
                k1 = ks[6].copy()  # first-same-as-last
                for g in groups:
                    lead, quad = g[0], g[1]
                    size = float(np.max(np.abs(y[lead])))
                    if size > 0.0 and not 1e-2 <= size <= 1e2:
                        y[lead] /= size
                        y[quad] /= size * size
                        k1 = k1.copy()
                        k1[lead] /= size
                        k1[quad] /= size * size
                        g[2] += math.log(size)
                factor = _MAX_FACTOR if err_norm == 0.0 else min(
                    _MAX_FACTOR, _SAFETY * err_norm ** -0.2)
                # a clipped final step says little about the next one
                if not (last and step < h):
                    h = min(step * factor, max_step)
            else:
                h = step * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            steps += 1
            if steps > _MAX_STEPS:
                raise IntegrationError("too many steps", t)
        z = y.copy()
        for lead, quad, log_scale in groups:
            if log_scale != 0.0:
                c = math.exp(log_scale)
                z[lead] *= c
                z[quad] *= c * c
        out.append(z)
    return out
