"""QUBO and Ising models, exact enumeration and simulated annealing.

Quadratic terms are stored as full symmetric matrices and energies are the
full bilinear form, so a coupling between ``i`` and ``j`` contributes
``2 * coeffs[i, j]``.  For binary variables ``x_i**2 == x_i``, so the QUBO
diagonal doubles as the linear term.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from copocut import kernels
from copocut.model import ModelError, as_sym_matrix

BRUTE_FORCE_MAX_N = 24
MAX_SEED = 2 ** 64 - 1


class SizeCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Qubo:
    coeffs: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", as_sym_matrix(self.coeffs, "coeffs"))
        object.__setattr__(self, "offset", float(self.offset))
        if not np.isfinite(self.offset):
            raise ModelError("offset must be finite")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def to_dict(self) -> dict:
        return {"n": self.n, "coeffs": self.coeffs.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, data: dict) -> "Qubo":
        q = cls(data["coeffs"], data.get("offset", 0.0))
        if "n" in data and int(data["n"]) != q.n:
            raise ModelError(f"coeffs: declared n={data['n']} but matrix is {q.coeffs.shape}")
        return q

    @classmethod
    def load(cls, path) -> "Qubo":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class Ising:
    J: np.ndarray
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        J = np.array(as_sym_matrix(self.J, "J"))
        if np.any(np.diag(J) != 0.0):
            raise ModelError("J must have a zero diagonal; fold it into the offset")
        J.setflags(write=False)
        h = np.array(self.h, dtype=np.float64)
        if h.shape != (J.shape[0],):
            raise ModelError(f"h: expected length {J.shape[0]}, got shape {h.shape}")
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.J.shape[0]


def _bits(x, n, name="x") -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1:] != (n,):
        raise ModelError(f"{name}: expected length {n}, got shape {x.shape}")
    return x.astype(np.float64)


def qubo_energy(q: Qubo, x) -> float:
    x = _bits(x, q.n)
    return float(x @ q.coeffs @ x + q.offset)


def qubo_energies(q: Qubo, states) -> np.ndarray:
    """Energies of a batch of assignments, one per row."""
    x = _bits(states, q.n, "states").reshape(-1, q.n)
    return np.einsum("ri,ij,rj->r", x, q.coeffs, x) + q.offset


def qubo_to_ising(q: Qubo) -> Ising:
    """Change of variables ``x = (z + 1) / 2``; energies agree on every assignment."""
    Q = q.coeffs
    J = Q / 4.0
    np.fill_diagonal(J, 0.0)
    h = Q.sum(axis=1) / 2.0
    offset = q.offset + Q.sum() / 4.0 + np.trace(Q) / 4.0
    return Ising(J, h, offset)


def ising_energy(s: Ising, z) -> float:
    z = np.asarray(z)
    if z.shape != (s.n,):
        raise ModelError(f"z: expected length {s.n}, got shape {z.shape}")
    if not np.all((z == 1) | (z == -1)):
        raise ModelError("z: spins must be -1 or +1")
    z = z.astype(np.float64)
    return float(z @ s.J @ z + s.h @ z + s.offset)


def _scale(q: Qubo) -> float:
    return max(1.0, float(np.abs(q.coeffs).sum()))


def brute_force_solve(q: Qubo, max_n: int = BRUTE_FORCE_MAX_N) -> tuple[float, np.ndarray]:
    """Exact minimum and every minimising assignment (rows, lexicographic order)."""
    if q.n > max_n:
        raise SizeCapError(f"brute force limited to n <= {max_n}, got n={q.n}")
    scale = _scale(q)
    codes, _ = kernels.enumerate_min(np.ascontiguousarray(q.coeffs), 1e-9 * scale)
    states = ((codes[:, None] >> np.arange(q.n)) & 1).astype(np.uint8)
    energies = qubo_energies(q, states)
    best = float(energies.min())
    states = states[energies <= best + 1e-12 * scale]
    order = np.lexsort(states.T[::-1])
    return best, states[order]


@dataclass(frozen=True)
class AnnealParams:
    """Metropolis annealing settings; unset betas are derived from the QUBO."""

    sweeps: int = 100
    reads: int = 1000
    beta_min: float | None = None
    beta_max: float | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.sweeps) < 1 or int(self.reads) < 1:
            raise ValueError("sweeps and reads must be >= 1")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for b in (self.beta_min, self.beta_max):
            if b is not None and not b > 0:
                raise ValueError("inverse temperatures must be positive")
        if self.beta_min is not None and self.beta_max is not None and not self.beta_min < self.beta_max:
            raise ValueError("beta_min must be smaller than beta_max")

    def resolved(self, q: Qubo) -> "AnnealParams":
        mags = np.abs(q.coeffs[q.coeffs != 0.0])
        lo = 0.1 / mags.max() if mags.size else 0.1
        hi = 10.0 / mags.min() if mags.size else 10.0
        return replace(
            self,
            beta_min=self.beta_min if self.beta_min is not None else lo,
            beta_max=self.beta_max if self.beta_max is not None else max(hi, 2 * lo),
        )

    def schedule(self) -> np.ndarray:
        return np.geomspace(self.beta_min, self.beta_max, self.sweeps)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Final assignments and energies, one row per read."""

    states: np.ndarray
    energies: np.ndarray
    anneal_time_per_read: float = field(default=0.0)
    params: AnnealParams | None = None

    def __len__(self):
        return len(self.energies)

    def __iter__(self):
        return zip(self.states, self.energies)

    def __eq__(self, other):
        # timing is excluded: it is measured, not computed
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.params == other.params
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.energies, other.energies)
        )

    @property
    def best_energy(self) -> float:
        return float(self.energies.min())

    def lowest(self, count: int | None = None):
        """Distinct assignments sorted by energy (ties broken by read order)."""
        order = np.argsort(self.energies, kind="stable")
        seen, out = set(), []
        for r in order:
            key = self.states[r].tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append((self.states[r], float(self.energies[r])))
            if count is not None and len(out) == count:
                break
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["read_index", "energy", "assignment", "anneal_time_s"])
            for r, (x, e) in enumerate(self):
                w.writerow([r, repr(float(e)), "".join(map(str, x.tolist())), repr(self.anneal_time_per_read)])


def simulated_anneal(q: Qubo, p: AnnealParams) -> SampleSet:
    """Geometric-schedule Metropolis annealing; one sweep visits variables in index order."""
    params = p.resolved(q)
    betas = params.schedule()
    t0 = time.perf_counter()
    states = kernels.anneal(np.ascontiguousarray(q.coeffs), betas, int(params.seed), int(params.reads))
    elapsed = time.perf_counter() - t0
    return SampleSet(states, qubo_energies(q, states), elapsed / params.reads, params)


class ExactSolver:
    """Enumerates every assignment; returns the full set of minimisers."""

    stochastic = False
    name = "exact"

    def __init__(self, max_n: int = BRUTE_FORCE_MAX_N):
        self.max_n = max_n

    def sample(self, q: Qubo) -> SampleSet:
        t0 = time.perf_counter()
        best, states = brute_force_solve(q, self.max_n)
        elapsed = time.perf_counter() - t0
        return SampleSet(states, qubo_energies(q, states), elapsed)

    def __repr__(self):
        return f"ExactSolver(max_n={self.max_n})"


class AnnealingSolver:
    """Simulated annealing sampler with fixed parameters."""

    stochastic = True
    name = "sa"

    def __init__(self, params: AnnealParams | None = None, **kwargs):
        self.params = params if params is not None else AnnealParams(**kwargs)

    def sample(self, q: Qubo) -> SampleSet:
        return simulated_anneal(q, self.params)

    def with_reads(self, reads: int) -> "AnnealingSolver":
        return AnnealingSolver(replace(self.params, reads=reads))

    def __repr__(self):
        return f"AnnealingSolver({self.params!r})"
