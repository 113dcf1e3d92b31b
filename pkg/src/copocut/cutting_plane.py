"""Ellipsoid / bisection cutting-plane solver for the copositive dual.

The dual maximises a linear objective over the set of points whose slack
matrix is copositive.  Each iteration queries the grid copositivity check at
the current centre:

* a certificate ``z`` yields the halfspace ``a^T d <= rhs`` with
  ``rhs - a^T d == z^T M(d) z``, which every feasible point satisfies;
* a copositive verdict makes the centre a lower bound on the optimum and an
  objective cut discards every point with a smaller dual objective.

One-dimensional duals fall back to interval bisection because the ellipsoid
update divides by ``m**2 - 1``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from copocut.copositivity import Discretization, check_copositivity
from copocut.model import DimensionMismatch, DualPoint, Mbqp, assemble_M, dual_objective, validate
from copocut.qubo import ExactSolver

MAX_MULTI_CUTS = 5


class EllipsoidError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{s : (s - center)^T shape^{-1} (s - center) <= 1}``.

    ``factor`` is any square ``L`` with ``shape == L @ L.T``.  Updates work on
    the factor, which keeps ``shape`` positive definite after many cuts and
    gives log-volumes with half the conditioning of ``shape`` itself.
    """

    center: np.ndarray
    shape: np.ndarray
    factor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        x = np.array(self.center, dtype=np.float64).reshape(-1)
        if self.factor is None:
            P = np.array(self.shape, dtype=np.float64)
            if P.shape != (x.size, x.size):
                raise EllipsoidError(f"shape matrix must be {x.size}x{x.size}, got {P.shape}")
            P = 0.5 * (P + P.T)
            try:
                L = np.linalg.cholesky(P)
            except np.linalg.LinAlgError:
                raise EllipsoidError("shape matrix is not positive definite") from None
        else:
            L = np.array(self.factor, dtype=np.float64)
            if L.shape != (x.size, x.size):
                raise EllipsoidError(f"factor must be {x.size}x{x.size}, got {L.shape}")
            P = L @ L.T
        object.__setattr__(self, "center", x)
        object.__setattr__(self, "shape", P)
        object.__setattr__(self, "factor", L)

    @property
    def dim(self) -> int:
        return self.center.size

    @classmethod
    def ball(cls, center, radius: float) -> "Ellipsoid":
        center = np.asarray(center, dtype=np.float64)
        return cls(center, radius ** 2 * np.eye(center.size))

    def contains(self, points, slack: float = 0.0) -> np.ndarray:
        diff = np.atleast_2d(points) - self.center
        y = np.linalg.solve(self.factor, diff.T)
        return (y * y).sum(axis=0) <= 1.0 + slack

    def support(self, g) -> float:
        """``max g^T s`` over the ellipsoid."""
        g = np.asarray(g, dtype=np.float64)
        return float(g @ self.center + np.linalg.norm(self.factor.T @ g))


def ellipsoid_log_volume(e: Ellipsoid) -> float:
    m = e.dim
    sign, logdet = np.linalg.slogdet(e.factor)
    if sign == 0:
        raise EllipsoidError("ellipsoid is degenerate")
    return 0.5 * m * math.log(math.pi) - gammaln(0.5 * m + 1.0) + logdet


def ellipsoid_volume(e: Ellipsoid) -> float:
    return math.exp(ellipsoid_log_volume(e))


def ellipsoid_update(e: Ellipsoid, a) -> Ellipsoid:
    """Minimum-volume ellipsoid containing ``e ∩ {s : a^T s <= a^T center}``.

    Same result as ``x - P a / ((m + 1) sqrt(a^T P a))`` and
    ``m^2 / (m^2 - 1) (P - 2 P a a^T P / ((m + 1) a^T P a))``, computed
    through the factor.
    """
    m = e.dim
    if m < 2:
        raise EllipsoidError("ellipsoid update needs dimension >= 2; use bisection_update")
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (m,):
        raise DimensionMismatch(f"cut normal must have length {m}")
    u = e.factor.T @ a
    norm = float(np.linalg.norm(u))
    if not np.any(a) or norm == 0.0:
        raise EllipsoidError("cut normal must be nonzero")
    u /= norm
    Lu = e.factor @ u
    x = e.center - Lu / (m + 1)
    # (I - t u u^T)^2 = I - 2/(m+1) u u^T  for  t = 1 - sqrt((m-1)/(m+1))
    t = 1.0 - math.sqrt((m - 1.0) / (m + 1.0))
    L = math.sqrt(m * m / (m * m - 1.0)) * (e.factor - t * np.outer(Lu, u))
    return Ellipsoid(x, None, L)


def volume_ratio(m: int) -> float:
    """Exact ``det(P_new) / det(P)`` of one central-cut update."""
    return (m * m / (m * m - 1.0)) ** m * (m - 1.0) / (m + 1.0)


def bisection_update(interval: tuple[float, float], direction: int, test: float) -> tuple[float, float]:
    """Keep the side of ``test`` that holds the optimum (``direction`` +1: above, -1: below)."""
    lo, hi = interval
    if not lo <= test <= hi:
        raise ValueError(f"test point {test} outside [{lo}, {hi}]")
    if direction > 0:
        return (test, hi)
    if direction < 0:
        return (lo, test)
    raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True, eq=False)
class Cut:
    """Halfspace ``a^T d <= rhs`` in dual-coordinate order."""

    a: np.ndarray
    rhs: float
    kind: str
    value: float = float("nan")

    def violation(self, d) -> float:
        return float(self.a @ np.asarray(d) - self.rhs)


def classify_cut(value: float, tol: float = 1e-9) -> str:
    if value < -tol:
        return "deep"
    if value > tol:
        return "shallow"
    return "neutral"


def certificate_to_cut(z, problem: Mbqp, value: float | None = None, tol: float = 1e-9) -> Cut:
    """Separating halfspace from a nonnegative ``z``.

    ``z^T M(d) z == rhs - a^T d`` for every dual point ``d``; ``value`` is
    that quantity at the queried point and sets the cut's kind.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (problem.n + 1,):
        raise DimensionMismatch(f"certificate must have length {problem.n + 1}, got {z.shape}")
    if np.any(z < 0):
        raise ValueError("certificate entries must be nonnegative")
    rhs = float(z @ problem.objective_block @ z)
    a = np.einsum("i,kij,j->k", z, problem.dual_blocks, z)
    kind = "deep" if value is None else classify_cut(value, tol)
    return Cut(a, rhs, kind, float("nan") if value is None else float(value))


@dataclass(frozen=True)
class Escalation:
    """Re-check policy for copositive verdicts from a stochastic solver."""

    bits_max: int
    reads_max: int


@dataclass(frozen=True)
class OracleConfig:
    solver: object = field(default_factory=ExactSolver)
    bits: int = 4
    escalation: Escalation | None = None


@dataclass(frozen=True)
class SolveConfig:
    initial_radius: float = 10.0
    target_radius: float = 1e-6
    max_iters: int = 1000
    multi_cut: bool = False
    gap_tol: float | None = None
    center: tuple | None = None

    def __post_init__(self):
        if not 0 < self.target_radius < self.initial_radius:
            raise ValueError("need 0 < target_radius < initial_radius")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass
class Iterate:
    iteration: int
    point: np.ndarray
    verdict: str  # feasible | infeasible | boundary
    value: float
    cut_kind: str
    log_volume: float
    lower: float
    upper: float
    oracle_time: float
    certificate: np.ndarray | None = None
    bits: int = 0
    samples: object = field(default=None, repr=False)


@dataclass
class SolveReport:
    status: str
    lower_bound: float
    upper_bound: float
    iterations: int
    oracle_time: float
    other_time: float
    total_time: float
    best_dual: DualPoint | tuple | None = None
    history: list = field(default_factory=list)
    oracle_calls: int = 0
    message: str = ""

    @property
    def width(self) -> float:
        return self.upper_bound - self.lower_bound

    def write_history_csv(self, path) -> None:
        dim = len(self.history[0].point) if self.history else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration"] + [f"x{i}" for i in range(dim)]
                       + ["verdict", "value", "cut", "log_volume", "lower", "upper", "oracle_time_s"])
            for it in self.history:
                w.writerow([it.iteration, *map(repr, map(float, it.point)), it.verdict, repr(it.value),
                            it.cut_kind, repr(it.log_volume), repr(it.lower), repr(it.upper),
                            repr(it.oracle_time)])


class OracleFailure(RuntimeError):
    pass


class _TimedOracle:
    """Grid copositivity check with escalation; accumulates solver time."""

    def __init__(self, config: OracleConfig, keep_samples: bool = False):
        self.config = config
        self.elapsed = 0.0
        self.calls = 0
        self.keep_samples = keep_samples

    def __call__(self, M):
        cfg = self.config
        size = M.shape[0]
        t0 = time.perf_counter()
        try:
            verdict = check_copositivity(M, Discretization(cfg.bits, size), cfg.solver)
            self.calls += 1
            esc = cfg.escalation
            if verdict.copositive and esc is not None and getattr(cfg.solver, "stochastic", False):
                solver, bits = cfg.solver, cfg.bits
                while verdict.copositive and solver.params.reads * 2 <= esc.reads_max:
                    solver = solver.with_reads(solver.params.reads * 2)
                    verdict = check_copositivity(M, Discretization(bits, size), solver)
                    self.calls += 1
                while verdict.copositive and bits < esc.bits_max:
                    bits += 1
                    verdict = check_copositivity(M, Discretization(bits, size), solver)
                    self.calls += 1
        except Exception as exc:
            raise OracleFailure(str(exc)) from exc
        finally:
            self.elapsed += time.perf_counter() - t0
        return verdict


FLAT_RTOL = 1e-10


def _is_flat(ell: Ellipsoid, a) -> bool:
    """True when the ellipsoid's half-width along ``a`` is lost in rounding."""
    a = np.asarray(a, dtype=np.float64)
    width = np.linalg.norm(ell.factor.T @ a)
    return bool(width <= FLAT_RTOL * np.linalg.norm(a) * np.linalg.norm(ell.factor, 2))


def _report(status, lower, upper, iters, oracle, t_start, best, history, message=""):
    total = time.perf_counter() - t_start
    return SolveReport(status, lower, upper, iters, oracle.elapsed, total - oracle.elapsed, total,
                       best, history, oracle.calls, message)


def solve_cop(problem: Mbqp, oracle: OracleConfig | None = None, config: SolveConfig | None = None,
              keep_samples: bool = False) -> SolveReport:
    """Maximise the dual objective over grid-copositive slack matrices.

    Bounds refer to the optimal dual value: ``lower_bound`` is the best
    grid-feasible objective seen and ``upper_bound`` the largest objective
    left in the localisation region.  Both assume the initial ball contains
    an optimal point.
    """
    validate(problem)
    oracle = oracle or OracleConfig()
    config = config or SolveConfig()
    if problem.dual_dim == 1:
        return _solve_cop_1d(problem, oracle, config, keep_samples)

    t_start = time.perf_counter()
    check = _TimedOracle(oracle, keep_samples)
    g = problem.dual_gradient
    m = problem.dual_dim
    center = np.zeros(m) if config.center is None else np.asarray(config.center, dtype=np.float64)
    ell = Ellipsoid.ball(center, config.initial_radius)
    target = ellipsoid_log_volume(Ellipsoid.ball(np.zeros(m), config.target_radius))
    lower, upper = -math.inf, ell.support(g)
    best = None
    history = []
    status = "max_iters"

    for it in range(config.max_iters):
        x = ell.center
        log_vol = ellipsoid_log_volume(ell)
        if log_vol < target:
            status = "converged"
            break
        if config.gap_tol is not None and upper - lower <= config.gap_tol:
            status = "converged"
            break
        d = DualPoint.from_vector(problem, x)
        try:
            verdict = check(assemble_M(problem, d))
        except OracleFailure as exc:
            return _report("oracle_failed", lower, upper, it, check, t_start, best, history, str(exc))

        boundary_cut = None
        if verdict.copositive and verdict.boundary is not None:
            boundary_cut = certificate_to_cut(verdict.boundary, problem, 0.0)
            if not np.any(boundary_cut.a):
                # z^T M(d) z == 0 for every d: this point says nothing about the centre
                boundary_cut = None
        if verdict.copositive and boundary_cut is None:
            obj = float(g @ x)
            if obj > lower:
                lower, best = obj, d
            normal, extras = -g, []
            rec = Iterate(it, x.copy(), "feasible", verdict.value, "objective", log_vol, lower, upper,
                          check.elapsed, bits=verdict.bits)
        else:
            if verdict.copositive:
                z, value, tag = verdict.boundary, 0.0, "boundary"
                cut = boundary_cut
            else:
                z, value, tag = verdict.certificate, verdict.value, "infeasible"
                cut = certificate_to_cut(z, problem, value)
            rec = Iterate(it, x.copy(), tag, value, cut.kind, log_vol, lower, upper, check.elapsed,
                          z, verdict.bits)
            if not np.any(cut.a):
                # z^T M z < 0 for every dual point: the dual is infeasible
                history.append(rec)
                return _report("dual_infeasible", lower, upper, it + 1, check, t_start, best, history)
            normal = cut.a
            extras = verdict.certificates[1:MAX_MULTI_CUTS] if config.multi_cut and not verdict.copositive else []
        if keep_samples:
            rec.samples = verdict.samples
        if _is_flat(ell, normal):
            history.append(rec)
            return _report("stalled", lower, upper, it + 1, check, t_start, best, history,
                           "localisation ellipsoid is numerically flat along the cut normal")
        ell = ellipsoid_update(ell, normal)
        for z2, v2 in extras:
            extra = certificate_to_cut(z2, problem, v2)
            if np.any(extra.a) and extra.violation(ell.center) > 0 and not _is_flat(ell, extra.a):
                ell = ellipsoid_update(ell, extra.a)
        upper = min(upper, ell.support(g))
        rec.upper = upper
        history.append(rec)
    else:
        if config.gap_tol is not None and upper - lower <= config.gap_tol:
            status = "converged"

    # lower <= upper holds exactly; max() only absorbs rounding in support()
    return _report(status, lower, max(upper, lower), len(history), check, t_start, best, history)


def _solve_cop_1d(problem, oracle, config, keep_samples):
    """Only ``gamma`` is free: bisection on ``[-R, R]``."""
    t_start = time.perf_counter()
    check = _TimedOracle(oracle, keep_samples)
    R = config.initial_radius
    lo, hi = -R, R
    lower, best = -math.inf, None
    gap = config.gap_tol if config.gap_tol is not None else 1e-6
    history = []
    status = "max_iters"
    for it in range(config.max_iters):
        if hi - lo <= gap:
            status = "converged"
            break
        t = 0.5 * (lo + hi)
        d = DualPoint.from_vector(problem, [t])
        try:
            verdict = check(assemble_M(problem, d))
        except OracleFailure as exc:
            return _report("oracle_failed", lower, hi, it, check, t_start, best, history, str(exc))
        flat = (verdict.copositive and verdict.boundary is not None
                and certificate_to_cut(verdict.boundary, problem, 0.0).a[0] == 0.0)
        if verdict.copositive and (verdict.boundary is None or flat):
            lower, best = t, d
            lo, hi = bisection_update((lo, hi), +1, t)
            tag, value, z = "feasible", verdict.value, None
        else:
            z = verdict.boundary if verdict.copositive else verdict.certificate
            value = 0.0 if verdict.copositive else verdict.value
            tag = "boundary" if verdict.copositive else "infeasible"
            cut = certificate_to_cut(z, problem, value)
            if cut.a[0] == 0.0:
                history.append(Iterate(it, np.array([t]), tag, value, cut.kind, math.log(hi - lo),
                                       lower, hi, check.elapsed, z, verdict.bits))
                return _report("dual_infeasible", lower, hi, it + 1, check, t_start, best, history)
            lo, hi = bisection_update((lo, hi), -1, t)
        history.append(Iterate(it, np.array([t]), tag, value, "objective" if tag == "feasible" else cut.kind,
                               math.log(2 * max(hi - lo, 1e-300)), lower, hi, check.elapsed, z, verdict.bits,
                               verdict.samples if keep_samples else None))
    else:
        if hi - lo <= gap:
            status = "converged"
    return _report(status, lower, hi, len(history), check, t_start, best, history)
