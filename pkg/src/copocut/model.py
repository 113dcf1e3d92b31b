"""Mixed-binary quadratic programs and their copositive dual.

The problem is

    min  x^T Q x + 2 c^T x   s.t.  A x = b,  x >= 0,  x_j in {0, 1} for j in B.

Its copositive dual maximises ``gamma + sum_i mu_lin_i b_i + mu_quad_i b_i^2``
subject to ``M(mu_lin, mu_quad, lam, gamma)`` being copositive, where ``M``
is the objective block minus a weighted sum of constraint blocks.  Every
block is stored as a symmetric ``(n + 1) x (n + 1)`` array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

DEFAULT_FEAS_TOL = 1e-8


class ModelError(ValueError):
    """Raised when a problem or dual point is malformed."""


class DimensionMismatch(ModelError):
    pass


class BinaryIndexError(ModelError, IndexError):
    pass


def as_sym_matrix(entries, name="matrix") -> np.ndarray:
    """Return a read-only, exactly symmetric float copy of ``entries``."""
    a = np.array(entries, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"{name}: expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name}: entries must be finite")
    a = 0.5 * (a + a.T)
    a.setflags(write=False)
    return a


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mbqp:
    """Problem data. Arrays are copied and made read-only.

    Construction does not check consistency; call :func:`validate`.
    """

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    binary: tuple[int, ...] = ()

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.float64)
        if Q.ndim == 2 and Q.shape[0] == Q.shape[1]:
            Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", _frozen(self.c))
        A = np.array(self.A, dtype=np.float64)
        if A.size == 0:
            A = np.zeros((0, Q.shape[0] if Q.ndim == 2 else 0))
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "binary", tuple(sorted(int(j) for j in self.binary)))

    @property
    def n(self) -> int:
        return int(self.Q.shape[0])

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @property
    def dual_dim(self) -> int:
        """Number of copositive-dual variables, ``2m + |B| + 1``."""
        return 2 * self.m + len(self.binary) + 1

    @cached_property
    def objective_block(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = self.Q
        out[:n, n] = self.c
        out[n, :n] = self.c
        out.setflags(write=False)
        return out

    @cached_property
    def dual_blocks(self) -> np.ndarray:
        """Constraint blocks stacked in dual-coordinate order.

        Shape ``(dual_dim, n + 1, n + 1)``; ``M(d) = objective_block -
        tensordot(d, dual_blocks)``.
        """
        n, m = self.n, self.m
        blocks = np.zeros((self.dual_dim, n + 1, n + 1))
        for i in range(m):
            row = self.A[i]
            blocks[i, :n, n] = 0.5 * row
            blocks[i, n, :n] = 0.5 * row
            blocks[m + i, :n, :n] = np.outer(row, row)
        for t, j in enumerate(self.binary):
            blk = blocks[2 * m + t]
            blk[j, j] = -1.0
            blk[j, n] = 0.5
            blk[n, j] = 0.5
        blocks[-1, n, n] = 1.0
        blocks.setflags(write=False)
        return blocks

    @cached_property
    def homogeneous_blocks(self) -> np.ndarray:
        """``[[A_i^T A_i, -b_i A_i^T], [-b_i A_i, b_i^2]]`` per row, then binary and corner blocks."""
        n, m = self.n, self.m
        nb = len(self.binary)
        blocks = np.zeros((m + nb + 1, n + 1, n + 1))
        for i in range(m):
            v = np.append(self.A[i], -self.b[i])
            blocks[i] = np.outer(v, v)
        blocks[m:] = self.dual_blocks[2 * m:]
        blocks.setflags(write=False)
        return blocks

    @cached_property
    def dual_gradient(self) -> np.ndarray:
        """Coefficients of the dual objective in dual-coordinate order."""
        g = np.zeros(self.dual_dim)
        g[: self.m] = self.b
        g[self.m: 2 * self.m] = self.b ** 2
        g[-1] = 1.0
        g.setflags(write=False)
        return g

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "Q": self.Q.tolist(),
            "c": self.c.tolist(),
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "binary": list(self.binary),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mbqp":
        try:
            n = int(data["n"])
            m = int(data.get("m", len(data.get("b", []))))
            A = data.get("A") or np.zeros((0, n))
            problem = cls(
                Q=data["Q"],
                c=data.get("c", [0.0] * n),
                A=A,
                b=data.get("b", []),
                binary=data.get("binary", []),
            )
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed MBQP document: {exc}") from exc
        if problem.n != n:
            raise DimensionMismatch(f"Q: declared n={n} but Q is {problem.Q.shape}")
        if problem.m != m:
            raise DimensionMismatch(f"A: declared m={m} but A has {problem.m} rows")
        validate(problem)
        return problem

    @classmethod
    def load(cls, path) -> "Mbqp":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


def validate(problem: Mbqp) -> None:
    """Raise if the problem's dimensions or binary index set are inconsistent."""
    Q, c, A, b = problem.Q, problem.c, problem.A, problem.b
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
        raise DimensionMismatch(f"Q: expected a non-empty square matrix, got shape {Q.shape}")
    n = Q.shape[0]
    if c.shape != (n,):
        raise DimensionMismatch(f"c: expected length {n}, got shape {c.shape}")
    if A.ndim != 2 or A.shape[1] != n:
        raise DimensionMismatch(f"A: expected shape (m, {n}), got {A.shape}")
    if b.shape != (A.shape[0],):
        raise DimensionMismatch(f"b: expected length {A.shape[0]}, got shape {b.shape}")
    for name, arr in (("Q", Q), ("c", c), ("A", A), ("b", b)):
        if not np.all(np.isfinite(arr)):
            raise ModelError(f"{name}: entries must be finite")
    bad = [j for j in problem.binary if not 0 <= j < n]
    if bad:
        raise BinaryIndexError(f"binary: indices {bad} outside [0, {n})")
    if len(set(problem.binary)) != len(problem.binary):
        raise BinaryIndexError("binary: duplicate indices")


def evaluate_mbqp(problem: Mbqp, x, tol: float = DEFAULT_FEAS_TOL) -> tuple[float, bool]:
    """Objective value and feasibility of ``x`` (all tolerances absolute)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.n,):
        raise DimensionMismatch(f"x: expected length {problem.n}, got shape {x.shape}")
    objective = float(x @ problem.Q @ x + 2.0 * problem.c @ x)
    feasible = bool(
        np.all(np.abs(problem.A @ x - problem.b) <= tol)
        and np.all(x >= -tol)
        and all(min(abs(x[j]), abs(x[j] - 1.0)) <= tol for j in problem.binary)
    )
    return objective, feasible


def _vec(v, length, name):
    v = np.atleast_1d(np.array(v, dtype=np.float64))
    if v.shape != (length,):
        raise DimensionMismatch(f"{name}: expected length {length}, got shape {v.shape}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class DualPoint:
    """Point of the copositive dual, ordered ``(mu_lin, mu_quad, lam, gamma)``."""

    mu_lin: np.ndarray
    mu_quad: np.ndarray
    lam: np.ndarray
    gamma: float

    def __post_init__(self):
        for name in ("mu_lin", "mu_quad", "lam"):
            v = np.atleast_1d(np.array(getattr(self, name), dtype=np.float64))
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "gamma", float(self.gamma))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.mu_lin, self.mu_quad, self.lam, [self.gamma]])

    @classmethod
    def from_vector(cls, problem: Mbqp, v) -> "DualPoint":
        m, nb = problem.m, len(problem.binary)
        v = _vec(v, problem.dual_dim, "dual vector")
        return cls(v[:m], v[m: 2 * m], v[2 * m: 2 * m + nb], v[-1])

    @classmethod
    def zeros(cls, problem: Mbqp) -> "DualPoint":
        return cls.from_vector(problem, np.zeros(problem.dual_dim))

    def check(self, problem: Mbqp) -> None:
        m, nb = problem.m, len(problem.binary)
        for name, want in (("mu_lin", m), ("mu_quad", m), ("lam", nb)):
            got = getattr(self, name).shape
            if got != (want,):
                raise DimensionMismatch(f"{name}: expected length {want}, got shape {got}")


@dataclass(frozen=True, eq=False)
class HomDualPoint:
    """Point of the homogenised dual: one multiplier per equality row."""

    mu: np.ndarray
    lam: np.ndarray
    gamma: float

    def __post_init__(self):
        for name in ("mu", "lam"):
            v = np.atleast_1d(np.array(getattr(self, name), dtype=np.float64))
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "gamma", float(self.gamma))

    def check(self, problem: Mbqp) -> None:
        for name, want in (("mu", problem.m), ("lam", len(problem.binary))):
            got = getattr(self, name).shape
            if got != (want,):
                raise DimensionMismatch(f"{name}: expected length {want}, got shape {got}")


def _combine(base, blocks, weights):
    out = base - np.tensordot(weights, blocks, axes=1)
    out = 0.5 * (out + out.T)
    out.setflags(write=False)
    return out


def assemble_M(problem: Mbqp, d: DualPoint) -> np.ndarray:
    """The dual slack matrix ``M(d)``, size ``n + 1``."""
    d.check(problem)
    return _combine(problem.objective_block, problem.dual_blocks, d.to_vector())


def assemble_M_hom(problem: Mbqp, h: HomDualPoint) -> np.ndarray:
    """Slack matrix of the homogenised dual."""
    h.check(problem)
    w = np.concatenate([h.mu, h.lam, [h.gamma]])
    return _combine(problem.objective_block, problem.homogeneous_blocks, w)


def dual_objective(problem: Mbqp, d: DualPoint) -> float:
    d.check(problem)
    b = problem.b
    return float(d.gamma + d.mu_lin @ b + d.mu_quad @ (b * b))


def lift_hom_to_inhom(problem: Mbqp, h: HomDualPoint) -> DualPoint:
    """Map a homogenised dual point to one with the same slack matrix and objective."""
    h.check(problem)
    b = problem.b
    return DualPoint(
        mu_lin=-2.0 * b * h.mu,
        mu_quad=h.mu.copy(),
        lam=h.lam.copy(),
        gamma=h.gamma + float(np.sum(b * b * h.mu)),
    )


def random_mbqp(rng: np.random.Generator, n: int, m: int, n_binary: int = 0) -> Mbqp:
    """Random dense instance; used by property tests and benchmarks."""
    Q = rng.normal(size=(n, n))
    binary = rng.choice(n, size=n_binary, replace=False) if n_binary else []
    return Mbqp(Q=Q + Q.T, c=rng.normal(size=n), A=rng.normal(size=(m, n)),
                b=rng.normal(size=m), binary=binary)

