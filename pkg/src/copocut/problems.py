"""Max-clique instances and formulations, plus the small worked MBQP.

Vertices are 0-based everywhere; DIMACS input is converted on read.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from copocut.copositivity import Discretization
from copocut.cutting_plane import (
    Iterate,
    OracleConfig,
    OracleFailure,
    SolveConfig,
    SolveReport,
    _TimedOracle,
    bisection_update,
)
from copocut.model import Mbqp
from copocut.qubo import ExactSolver, Qubo, SampleSet

CLIQUE_BRUTE_MAX_N = 30
ESTIMATE_TOL = 1e-9


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError("vertex count must be nonnegative")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphFormatError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphFormatError(f"edge ({i}, {j}) outside [0, {self.n})")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(combinations(range(n), 2)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, frozenset())

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def complement_edges(self) -> list[tuple[int, int]]:
        return [e for e in combinations(range(self.n), 2) if e not in self.edges]

    def complement_adjacency(self) -> np.ndarray:
        comp = 1.0 - self.adjacency()
        np.fill_diagonal(comp, 0.0)
        return comp

    def is_clique(self, vertices) -> bool:
        return all((min(i, j), max(i, j)) in self.edges for i, j in combinations(sorted(vertices), 2))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": sorted(map(list, self.edges))})

    def to_dimacs(self) -> str:
        lines = [f"p edge {self.n} {len(self.edges)}"]
        lines += [f"e {i + 1} {j + 1}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Graph:
    n, edges = None, set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if len(parts) < 4 or parts[1] not in ("edge", "col"):
                raise GraphFormatError(f"line {lineno}: bad problem line {raw!r}")
            n = int(parts[2])
        elif parts[0] == "e":
            if n is None:
                raise GraphFormatError(f"line {lineno}: edge before 'p edge' header")
            i, j = int(parts[1]) - 1, int(parts[2]) - 1
            if i != j:
                edges.add((min(i, j), max(i, j)))
        else:
            raise GraphFormatError(f"line {lineno}: unknown record {parts[0]!r}")
    if n is None:
        raise GraphFormatError("missing 'p edge' header")
    return Graph(n, frozenset(edges))


def parse_graph_json(text: str) -> Graph:
    try:
        data = json.loads(text)
        return Graph(int(data["n"]), frozenset(tuple(e) for e in data["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"malformed graph JSON: {exc}") from exc


def load_graph(path) -> Graph:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return parse_graph_json(text)
    return parse_dimacs(text)


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Each of the ``n (n - 1) / 2`` pairs is an edge independently with probability ``p``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    pairs = list(combinations(range(n), 2))
    draws = np.random.default_rng(seed).random(len(pairs))
    return Graph(n, frozenset(e for e, u in zip(pairs, draws) if u < p))


def k5_minus_edge() -> Graph:
    """Five vertices, every edge except (3, 4); clique number 4."""
    return Graph(5, frozenset(e for e in combinations(range(5), 2) if e != (3, 4)))


def clique_cop_matrix(g: Graph, lam: float) -> np.ndarray:
    """``lam * (I + complement adjacency) - 11^T``: copositive iff ``lam >= omega(g)``."""
    return lam * (np.eye(g.n) + g.complement_adjacency()) - np.ones((g.n, g.n))


def clique_upper_bound(g: Graph) -> float:
    """Largest ``k`` with ``k (k - 1) / 2 <= |E|``, before flooring."""
    return (1.0 + math.sqrt(1.0 + 8.0 * len(g.edges))) / 2.0


@dataclass
class CliqueSolveOutcome:
    clique_number_estimate: int
    lower_bound_raw: float
    certified: bool
    report: SolveReport


def solve_max_clique(g: Graph, oracle: OracleConfig | None = None, config: SolveConfig | None = None,
                     keep_samples: bool = False) -> CliqueSolveOutcome:
    """Bisection on ``lam`` for the one-variable copositive program.

    A certificate at ``t`` proves ``omega > t`` and raises the lower end; a
    copositive verdict lowers the upper end.  The estimate is the lower
    bound rounded up: a heuristic solver can only err by missing
    certificates, which never raises the lower bound wrongly.
    """
    oracle = oracle or OracleConfig(solver=ExactSolver(), bits=1)
    config = config or SolveConfig(initial_radius=1.0 + 1e-9)
    gap = config.gap_tol if config.gap_tol is not None else 1e-6
    t_start = time.perf_counter()
    check = _TimedOracle(oracle, keep_samples)
    lo, hi = 1.0, max(1.0, clique_upper_bound(g))
    base = np.eye(g.n) + g.complement_adjacency()
    ones = np.ones((g.n, g.n))
    history = []
    status = "max_iters"

    def finish(status, message=""):
        total = time.perf_counter() - t_start
        report = SolveReport(status, lo, hi, len(history), check.elapsed, total - check.elapsed, total,
                             (lo, hi), history, check.calls, message)
        estimate = math.ceil(lo - ESTIMATE_TOL) if g.n else 0
        certified = not getattr(oracle.solver, "stochastic", False) and status == "converged"
        return CliqueSolveOutcome(estimate, lo, certified, report)

    if g.n == 0:
        lo = hi = 0.0
        return finish("converged")

    for it in range(config.max_iters):
        if hi - lo <= gap:
            status = "converged"
            break
        t = 0.5 * (lo + hi)
        try:
            verdict = check(t * base - ones)
        except OracleFailure as exc:
            return finish("oracle_failed", str(exc))
        if verdict.copositive and verdict.boundary is None:
            lo, hi = bisection_update((lo, hi), -1, t)
            tag, z = "feasible", None
        else:
            # a zero-valued nonzero grid point is a neutral cut: lam >= t
            lo, hi = bisection_update((lo, hi), +1, t)
            tag = "infeasible" if not verdict.copositive else "boundary"
            z = verdict.certificate if not verdict.copositive else verdict.boundary
        history.append(Iterate(it, np.array([t]), tag, verdict.value,
                               "objective" if tag == "feasible" else ("deep" if tag == "infeasible" else "neutral"),
                               math.log(max(hi - lo, 1e-300)), lo, hi, check.elapsed, z, verdict.bits,
                               verdict.samples if keep_samples else None))
    else:
        if hi - lo <= gap:
            status = "converged"
    return finish(status)


def brute_force_clique(g: Graph, max_n: int = CLIQUE_BRUTE_MAX_N) -> int:
    """Exact clique number by branch and bound with a greedy-colouring bound."""
    if g.n > max_n:
        raise ValueError(f"brute_force_clique limited to n <= {max_n}, got n={g.n}")
    if g.n == 0:
        return 0
    nbr = [0] * g.n
    for i, j in g.edges:
        nbr[i] |= 1 << j
        nbr[j] |= 1 << i
    best = 1

    def colour_order(cand):
        # greedy sequential colouring; returns vertices with their colour bounds
        order, bounds = [], []
        colour = 0
        uncoloured = cand
        while uncoloured:
            colour += 1
            avail = uncoloured
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~(1 << v) & ~nbr[v]
                uncoloured &= ~(1 << v)
                order.append(v)
                bounds.append(colour)
        return order, bounds

    def expand(size, cand):
        nonlocal best
        order, bounds = colour_order(cand)
        for v, bound in zip(reversed(order), reversed(bounds)):
            if size + bound <= best:
                return
            new = cand & nbr[v]
            if new:
                expand(size + 1, new)
            elif size + 1 > best:
                best = size + 1
            cand &= ~(1 << v)

    expand(0, (1 << g.n) - 1)
    return best


def exhaustive_clique(g: Graph) -> int:
    """Clique number by scanning every vertex subset; for cross-checking only."""
    best = 1 if g.n else 0
    for size in range(2, g.n + 1):
        if any(g.is_clique(s) for s in combinations(range(g.n), size)):
            best = size
        else:
            break
    return best


def penalty_clique_qubo(g: Graph, weight: float) -> Qubo:
    """``-sum x_i + weight * sum_{non-edges} x_i x_j``; ground energy ``-omega`` for ``weight > 1``."""
    if not weight > 0:
        raise ValueError("penalty weight must be positive")
    coeffs = -np.eye(g.n) + 0.5 * weight * g.complement_adjacency()
    return Qubo(coeffs, 0.0)


@dataclass
class CliqueSampleMetrics:
    normalized_size: np.ndarray
    valid: np.ndarray
    ground: np.ndarray

    @property
    def valid_fraction(self) -> float:
        return float(self.valid.mean())

    @property
    def ground_fraction(self) -> float:
        return float(self.ground.mean())

    @property
    def mean_normalized_size(self) -> float:
        return float(self.normalized_size.mean())


def clique_sample_metrics(g: Graph, samples: SampleSet, truth: int) -> CliqueSampleMetrics:
    """Per-read size relative to ``truth`` and clique validity (the empty set counts as valid)."""
    if truth < 1:
        raise ValueError("truth must be >= 1")
    states = np.asarray(samples.states, dtype=bool)
    comp = g.complement_adjacency().astype(bool)
    sizes = states.sum(axis=1)
    conflicts = np.einsum("ri,ij,rj->r", states.astype(np.int64), comp.astype(np.int64),
                          states.astype(np.int64))
    valid = conflicts == 0
    normalized = sizes / truth
    return CliqueSampleMetrics(normalized, valid, valid & (sizes == truth))


def export_milp_text(g: Graph) -> str:
    """LP-format model: maximise ``sum x_i`` with ``x_i + x_j <= 1`` on every non-edge."""
    names = [f"x{i}" for i in range(g.n)]
    lines = [f"\\ maximum clique: {g.n} vertices, {len(g.edges)} edges", "Maximize"]
    lines.append(" obj: " + " + ".join(names) if names else " obj: 0")
    lines.append("Subject To")
    for k, (i, j) in enumerate(g.complement_edges()):
        lines.append(f" c{k}: x{i} + x{j} <= 1")
    lines.append("Binary")
    if names:
        lines.append(" " + " ".join(names))
    lines.append("End")
    return "\n".join(lines) + "\n"


def ex_mbqp_fixture() -> Mbqp:
    """``min x1^2 - 2 x1 x2`` on the simplex ``x1 + x2 = 1``; optimum -1/3 at (1/3, 2/3)."""
    return Mbqp(Q=[[1.0, -1.0], [-1.0, 0.0]], c=[0.0, 0.0], A=[[1.0, 1.0]], b=[1.0], binary=())


__all__ = [
    "Graph", "GraphFormatError", "parse_dimacs", "parse_graph_json", "load_graph", "erdos_renyi",
    "k5_minus_edge", "clique_cop_matrix", "clique_upper_bound", "CliqueSolveOutcome", "solve_max_clique",
    "brute_force_clique", "exhaustive_clique", "penalty_clique_qubo", "CliqueSampleMetrics",
    "clique_sample_metrics", "export_milp_text", "ex_mbqp_fixture", "Discretization",
]
