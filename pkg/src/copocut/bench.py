"""Success metrics, benchmark suites over random graphs, and sweep tuning."""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from copocut.cutting_plane import OracleConfig, OracleFailure, SolveConfig
from copocut.problems import (
    Graph,
    brute_force_clique,
    clique_sample_metrics,
    erdos_renyi,
    penalty_clique_qubo,
    solve_max_clique,
)
from copocut.qubo import AnnealingSolver, AnnealParams, ExactSolver, Qubo, SampleSet, brute_force_solve, simulated_anneal

METHODS = ("copositive-exact", "copositive-sa", "penalty-sa", "brute-force")
GROUND_ATOL = 1e-9


@dataclass(frozen=True)
class TttInputs:
    s: float
    p: float
    anneal_time_per_read: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"confidence s must lie in (0, 1), got {self.s}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"success probability must lie in [0, 1], got {self.p}")
        if not self.anneal_time_per_read >= 0.0:
            raise ValueError("anneal time must be nonnegative")


def time_to_target(i: TttInputs) -> float:
    """Expected annealing time to succeed at least once with confidence ``s``."""
    if i.p >= 1.0:
        return i.anneal_time_per_read
    if i.p <= 0.0:
        return math.inf
    # a ratio above 1 would claim fewer than one read is needed
    return i.anneal_time_per_read * max(1.0, math.log1p(-i.s) / math.log1p(-i.p))


def p_hat_succ(samples: SampleSet, ground: float) -> float:
    """Mean energy over the ground energy, clamped to ``[0, 1]``.

    Only meaningful for a negative ground energy; otherwise use
    :func:`p_succ_exact`.
    """
    if not ground < 0:
        raise ValueError("p_hat_succ needs a negative ground energy; use p_succ_exact instead")
    ratio = float(np.mean(samples.energies)) / ground
    return min(1.0, max(0.0, ratio))


def p_succ_exact(samples: SampleSet, ground: float) -> float:
    energies = np.asarray(samples.energies, dtype=np.float64)
    if energies.size == 0:
        return 0.0
    return float(np.mean(np.abs(energies - ground) <= GROUND_ATOL))


@dataclass
class BenchRecord:
    instance_id: str
    n: int
    density: float
    seed: int
    method: str
    sweeps: int | None
    reads: int | None
    value: int
    truth: int | None
    correct: bool | None
    oracle_time_s: float
    other_time_s: float
    ttt99_s: float | None = None
    ttt999_s: float | None = None

    def __post_init__(self):
        if self.truth is not None:
            self.correct = self.value == self.truth


CSV_COLUMNS = tuple(f.name for f in fields(BenchRecord))
TIMING_COLUMNS = ("oracle_time_s", "other_time_s", "ttt99_s", "ttt999_s")


@dataclass(frozen=True)
class SuiteConfig:
    """A benchmark suite: every (size, density, seed) graph is run with every method.

    ``seeds`` may be a count (``range(seeds)``) or an explicit list.
    """

    sizes: tuple = (8, 10, 12, 14)
    densities: tuple = (0.25, 0.5, 0.75)
    seeds: tuple = tuple(range(25))
    methods: tuple = ("brute-force", "copositive-exact")
    sweeps: int = 100
    reads: int = 1000
    bits: int = 1
    penalty_weight: float = 2.0
    sa_seed: int = 0
    gap_tol: float = 1e-6

    def __post_init__(self):
        seeds = self.seeds
        if isinstance(seeds, int):
            seeds = range(seeds)
        object.__setattr__(self, "seeds", tuple(int(s) for s in seeds))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "densities", tuple(float(p) for p in self.densities))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise ValueError("suite needs at least one method")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {list(METHODS)}")
        if not (self.sizes and self.densities and self.seeds):
            raise ValueError("sizes, densities and seeds must be nonempty")

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown suite keys {sorted(extra)}")
        return cls(**data)

    @property
    def anneal(self) -> AnnealParams:
        return AnnealParams(sweeps=self.sweeps, reads=self.reads, seed=self.sa_seed)


def instance_graph(n: int, density: float, seed: int) -> Graph:
    """The suite graph for ``(n, density, seed)``; stable across runs and platforms."""
    key = np.random.SeedSequence([n, int(round(density * 1_000_000)), seed]).generate_state(1)[0]
    return erdos_renyi(n, density, int(key))


def instance_id(n: int, density: float, seed: int) -> str:
    return f"er-n{n}-p{density:g}-s{seed}"


def bench_instance(g: Graph, method: str, cfg: SuiteConfig, *, truth: int | None = None,
                   density: float = float("nan"), seed: int = 0, iid: str = "") -> BenchRecord:
    """Run one method on one graph; ``oracle + other`` is the wall time of this call."""
    t0 = time.perf_counter()
    sweeps = reads = None
    ttt99 = ttt999 = None
    if method == "brute-force":
        value = brute_force_clique(g)
        oracle = time.perf_counter() - t0
    elif method in ("copositive-exact", "copositive-sa"):
        solver = ExactSolver() if method == "copositive-exact" else AnnealingSolver(cfg.anneal)
        if method == "copositive-sa":
            sweeps, reads = cfg.sweeps, cfg.reads
        out = solve_max_clique(g, OracleConfig(solver=solver, bits=cfg.bits), SolveConfig(gap_tol=cfg.gap_tol))
        if out.report.status == "oracle_failed":
            raise OracleFailure(f"{iid or 'instance'}: oracle failed: {out.report.message}")
        value = out.clique_number_estimate
        oracle = out.report.oracle_time
    elif method == "penalty-sa":
        sweeps, reads = cfg.sweeps, cfg.reads
        q = penalty_clique_qubo(g, cfg.penalty_weight)
        t_anneal = time.perf_counter()
        samples = simulated_anneal(q, cfg.anneal)
        oracle = time.perf_counter() - t_anneal
        metrics = clique_sample_metrics(g, samples, max(truth or 1, 1))
        sizes = np.asarray(samples.states, dtype=np.int64).sum(axis=1)
        value = int(sizes[metrics.valid].max()) if metrics.valid.any() else 0
        if truth is not None:
            p = p_succ_exact(samples, -float(truth))
            ttt99 = time_to_target(TttInputs(0.99, p, samples.anneal_time_per_read))
            ttt999 = time_to_target(TttInputs(0.999, p, samples.anneal_time_per_read))
    else:
        raise ValueError(f"unknown method {method!r}")
    wall = time.perf_counter() - t0
    return BenchRecord(iid, g.n, density, seed, method, sweeps, reads, int(value), truth, None,
                       oracle, max(0.0, wall - oracle), ttt99, ttt999)


def _run_instance(args) -> list[BenchRecord]:
    n, density, seed, cfg = args
    g = instance_graph(n, density, seed)
    iid = instance_id(n, density, seed)
    truth = brute_force_clique(g)
    return [bench_instance(g, m, cfg, truth=truth, density=density, seed=seed, iid=iid) for m in cfg.methods]


def run_benchmark(cfg: SuiteConfig, out=None, workers: int = 1) -> list[BenchRecord]:
    """Run the suite, sorted by (n, density, seed, method); optionally write CSV."""
    jobs = [(n, p, s, cfg) for n in cfg.sizes for p in cfg.densities for s in cfg.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_instance, jobs))
    else:
        batches = [_run_instance(j) for j in jobs]
    records = sorted((r for b in batches for r in b), key=lambda r: (r.n, r.density, r.seed, r.method))
    if out is not None:
        write_records_csv(records, out)
    return records


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def records_to_csv(records, exclude=()) -> str:
    cols = [c for c in CSV_COLUMNS if c not in exclude]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        row = asdict(r)
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def write_records_csv(records, path) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    text = records_to_csv(records)
    try:
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write benchmark CSV to {path}: {exc}") from exc


@dataclass
class SweepResult:
    table: dict = field(default_factory=dict)  # sweeps -> TTT99 seconds
    p_succ: dict = field(default_factory=dict)
    argmin: int = 0


def sweep_grid(q: Qubo, sweeps: list[int], reads: int = 1000, seed: int = 0, ground: float | None = None,
               s: float = 0.99) -> SweepResult:
    """TTT at each sweep count with fixed reads; ties go to the fewest sweeps."""
    if not sweeps:
        raise ValueError("need at least one sweeps candidate")
    if ground is None:
        ground, _ = brute_force_solve(q)
    result = SweepResult()
    for k in sorted(set(int(x) for x in sweeps)):
        samples = simulated_anneal(q, AnnealParams(sweeps=k, reads=reads, seed=seed))
        p = p_succ_exact(samples, ground)
        result.p_succ[k] = p
        result.table[k] = time_to_target(TttInputs(s, p, samples.anneal_time_per_read))
    result.argmin = min(result.table, key=lambda k: (result.table[k], k))
    return result


def oracle_time_fractions(sizes, instances: int = 10, density: float = 0.5, bits: int = 1) -> dict[int, float]:
    """Median share of solve time spent in the oracle, per graph size (exact oracle)."""
    cfg = OracleConfig(solver=ExactSolver(), bits=bits)
    out = {}
    for n in sizes:
        fracs = []
        for seed in range(instances):
            rep = solve_max_clique(instance_graph(n, density, seed), cfg).report
            fracs.append(rep.oracle_time / (rep.oracle_time + rep.other_time))
        out[n] = statistics.median(fracs)
    return out


def penalty_weight_sweep(g: Graph, weights, params: AnnealParams, truth: int | None = None) -> list[dict]:
    """Sample-quality metrics of the penalty QUBO at each weight."""
    truth = truth if truth is not None else brute_force_clique(g)
    rows = []
    for w in weights:
        samples = simulated_anneal(penalty_clique_qubo(g, float(w)), params)
        m = clique_sample_metrics(g, samples, truth)
        rows.append({"weight": float(w), "valid_fraction": m.valid_fraction,
                     "mean_normalized_size": m.mean_normalized_size, "ground_fraction": m.ground_fraction})
    return rows
