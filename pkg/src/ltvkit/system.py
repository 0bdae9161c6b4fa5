"""LTV systems, transition matrices and forced solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .expr import TimeExpr, const, parse_expr
from .integrate import solve


class DomainViolation(ValueError):
    pass


class ExprMatrix:
    """A dense matrix of TimeExpr entries; calling it evaluates at t."""

    __slots__ = ("rows", "shape", "_const")

    def __init__(self, rows: Sequence[Sequence[TimeExpr]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("matrix must have at least one entry")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
        self.rows = rows
        self.shape = (len(rows), width)
        self._const = None
        if all(e.is_constant for r in rows for e in r):
            m = np.array([[e(0.0) for e in r] for r in rows], dtype=float)
            m.setflags(write=False)
            self._const = m

    @classmethod
    def parse(cls, rows: Sequence[Sequence[str | float]]) -> "ExprMatrix":
        return cls([[parse_expr(x) if isinstance(x, str) else const(x) for x in r]
                    for r in rows])

    @classmethod
    def constant(cls, values) -> "ExprMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls([[const(v) for v in r] for r in values])

    @classmethod
    def zeros(cls, n: int, m: int) -> "ExprMatrix":
        return cls.constant(np.zeros((n, m)))

    def __call__(self, t: float) -> np.ndarray:
        if self._const is not None:
            return self._const
        return np.array([[e(t) for e in r] for r in self.rows], dtype=float)

    def __getstate__(self):
        return self.rows

    def __setstate__(self, rows):
        self.__init__(rows)

    def __repr__(self) -> str:
        return f"ExprMatrix({self.to_strings()!r})"

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in r] for r in self.rows]

    @property
    def T(self) -> "ExprMatrix":
        return ExprMatrix(list(zip(*self.rows)))

    def __neg__(self) -> "ExprMatrix":
        return ExprMatrix([[-e for e in r] for r in self.rows])

    def __add__(self, other: "ExprMatrix") -> "ExprMatrix":
        self._same_shape(other)
        return ExprMatrix([[a + b for a, b in zip(r, q)] for r, q in zip(self.rows, other.rows)])

    def __sub__(self, other: "ExprMatrix") -> "ExprMatrix":
        self._same_shape(other)
        return ExprMatrix([[a - b for a, b in zip(r, q)] for r, q in zip(self.rows, other.rows)])

    def __matmul__(self, other: "ExprMatrix") -> "ExprMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        cols = other.T.rows
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = r[0] * c[0]
                for a, b in zip(r[1:], c[1:]):
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return ExprMatrix(out)

    def reflect(self) -> "ExprMatrix":
        """Substitute t -> -t in every entry."""
        return ExprMatrix([[e.reflect() for e in r] for r in self.rows])

    def _same_shape(self, other: "ExprMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")


@dataclass(frozen=True)
class LtvSystem:
    """x' = A(t) x + B(t) u,  y = C(t) x  on the closed interval ``domain``."""

    name: str
    A: ExprMatrix
    B: ExprMatrix | None = None
    C: ExprMatrix | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        n, m = self.A.shape
        if n != m:
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B is not None and self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {self.B.shape}")
        if self.C is not None and self.C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {self.C.shape}")
        lo, hi = self.domain
        if not lo <= hi:
            raise ValueError(f"empty domain {self.domain}")
        object.__setattr__(self, "domain", (float(lo), float(hi)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return 0 if self.B is None else self.B.shape[1]

    @property
    def m(self) -> int:
        return 0 if self.C is None else self.C.shape[0]

    def check_times(self, *ts: float) -> None:
        lo, hi = self.domain
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        for t in ts:
            if not (math.isfinite(t) and lo - slack <= t <= hi + slack):
                raise DomainViolation(f"time {t!r} outside domain [{lo}, {hi}]")

    def require_B(self) -> ExprMatrix:
        if self.B is None:
            raise ValueError(f"system {self.name!r} has no input matrix B")
        return self.B

    def require_C(self) -> ExprMatrix:
        if self.C is None:
            raise ValueError(f"system {self.name!r} has no output matrix C")
        return self.C


def _matrix_rhs(A: ExprMatrix, n: int):
    if n == 1:
        def f(t, y):
            return A(t)[0, 0] * y
    else:
        def f(t, y):
            return (A(t) @ y.reshape(n, n)).ravel()
    return f


@dataclass
class TransitionEvaluator:
    """Numerical transition matrix of a system, with a node cache."""

    system: LtvSystem
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = math.inf
    workers: int = 1
    _nodes: set = field(default_factory=set, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._rhs = _matrix_rhs(self.system.A, self.system.n)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_rhs", None)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._rhs = _matrix_rhs(self.system.A, self.system.n)

    @property
    def n(self) -> int:
        return self.system.n

    def with_system(self, system: LtvSystem) -> "TransitionEvaluator":
        """Same integrator settings, different system."""
        return TransitionEvaluator(system, self.rtol, self.atol, self.max_step, self.workers)

    def publish_nodes(self, nodes: Iterable[float]) -> None:
        """Declare grid nodes whose transitions may be cached."""
        self._nodes.update(float(x) for x in nodes)

    def _cached(self, t: float, s: float) -> bool:
        return t in self._nodes and s in self._nodes

    def integrate_from(self, s: float, ts: Sequence[float]) -> list[np.ndarray]:
        """Phi(t, s) for each t in ``ts`` (any order, either side of s)."""
        self.system.check_times(s, *ts)
        n = self.n
        eye = np.eye(n)
        out: dict[int, np.ndarray] = {}
        fwd = sorted((i for i, t in enumerate(ts) if t > s), key=lambda i: ts[i])
        bwd = sorted((i for i, t in enumerate(ts) if t < s), key=lambda i: -ts[i])
        for idx in (fwd, bwd):
            if not idx:
                continue
            ys = solve(self._rhs, s, eye.ravel(), [ts[i] for i in idx],
                       self.rtol, self.atol, self.max_step, degrees=np.ones(n * n))
            for i, y in zip(idx, ys):
                out[i] = y.reshape(n, n)
        return [out.get(i, eye.copy()) for i in range(len(ts))]

    def transition(self, t: float, s: float) -> np.ndarray:
        t, s = float(t), float(s)
        if t == s:
            self.system.check_times(t)
            return np.eye(self.n)
        key = (t, s)
        if self._cached(t, s):
            hit = self._cache.get(key)
            if hit is not None:
                return hit.copy()
        phi = self.integrate_from(s, [t])[0]
        if self._cached(t, s):
            self._cache[key] = phi.copy()
        return phi

    def transition_grid(self, ts: Sequence[float], ss: Sequence[float]) -> np.ndarray:
        """Phi(t_i, s_j) as an array of shape (len(ts), len(ss), n, n).

        One integration per column s_j, stopping at every t_i; columns are
        independent and may be spread over worker processes.
        """
        ts = [float(t) for t in ts]
        ss = [float(s) for s in ss]
        self.publish_nodes(ts)
        self.publish_nodes(ss)
        todo = [j for j, s in enumerate(ss)
                if not all((t, s) in self._cache or t == s for t in ts)]
        cols = parallel_map(_column, [(self, ts, ss[j]) for j in todo], self.workers)
        for j, col in zip(todo, cols):
            for t, phi in zip(ts, col):
                if t != ss[j]:
                    self._cache.setdefault((t, ss[j]), phi)
        n = self.n
        out = np.empty((len(ts), len(ss), n, n))
        for j, s in enumerate(ss):
            for i, t in enumerate(ts):
                out[i, j] = np.eye(n) if t == s else self._cache[(t, s)]
        return out


def _column(args):
    ev, ts, s = args
    return ev.integrate_from(s, ts)


def parallel_map(fn, items: list, workers: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def transition(ev: TransitionEvaluator, t: float, s: float) -> np.ndarray:
    return ev.transition(t, s)


def propagate(sys: LtvSystem, t0: float, x0, u: ExprMatrix, t: float,
              rtol: float = 1e-9, atol: float = 1e-12) -> np.ndarray:
    """State at t of x' = A x + B u from x(t0) = x0, integrated directly."""
    B = sys.require_B()
    sys.check_times(t0, t)
    if u.shape != (sys.p, 1):
        raise ValueError(f"input must be a {sys.p}x1 column, got {u.shape}")
    A = sys.A

    def f(s, x):
        return A(s) @ x + (B(s) @ u(s)).ravel()

    x0 = np.asarray(x0, dtype=float).reshape(sys.n)
    if t == t0:
        return x0.copy()
    return solve(f, t0, x0, [t], rtol, atol)[0]


def output(sys: LtvSystem, t: float, x) -> np.ndarray:
    C = sys.require_C()
    sys.check_times(t)
    return C(t) @ np.asarray(x, dtype=float).reshape(sys.n)
