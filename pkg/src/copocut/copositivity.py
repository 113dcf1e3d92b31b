"""Grid-based copositivity checks solved as QUBOs.

A symmetric ``M`` is copositive iff ``z^T M z >= 0`` on the nonnegative part
of the unit box.  The box is replaced by the grid ``{0, 1/K, ..., 1}`` with
``K = 2**bits - 1`` and each coordinate is written in binary, which turns
the check into a QUBO over ``bits * size`` variables.

A certificate (``z >= 0`` with ``z^T M z < 0``) is a proof of
non-copositivity.  A "copositive" verdict only means no negative grid point
was found: it is relative to the grid, and with a heuristic solver it is
evidence rather than proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from copocut.model import DimensionMismatch, as_sym_matrix
from copocut.qubo import Qubo, SampleSet


@dataclass(frozen=True)
class Discretization:
    bits: int
    size: int

    def __post_init__(self):
        if self.bits < 1 or self.size < 1:
            raise ValueError("bits and size must be positive")

    @property
    def K(self) -> int:
        return 2 ** self.bits - 1

    @property
    def D(self) -> np.ndarray:
        """``size x bits*size`` expansion matrix, blocks ``(1, 2, ..., 2**(bits-1)) / K``."""
        row = 2.0 ** np.arange(self.bits) / self.K
        return np.kron(np.eye(self.size), row)

    def decode(self, zhat) -> np.ndarray:
        """Grid points ``D @ zhat`` for one bit vector or a batch of rows."""
        zhat = np.asarray(zhat, dtype=np.float64)
        blocks = zhat.reshape(zhat.shape[:-1] + (self.size, self.bits))
        return (blocks @ (2.0 ** np.arange(self.bits))) / self.K


def build_discretization(size: int, bits: int) -> Discretization:
    return Discretization(bits=bits, size=size)


def cop_qubo(M, d: Discretization) -> Qubo:
    M = as_sym_matrix(M, "M")
    if M.shape[0] != d.size:
        raise DimensionMismatch(f"M has size {M.shape[0]}, discretization expects {d.size}")
    D = d.D
    return Qubo(D.T @ M @ D, 0.0)


@dataclass(frozen=True, eq=False)
class CopositivityVerdict:
    """Outcome of one grid check.

    ``value`` is the recomputed ``z^T M z`` of ``certificate`` when one was
    found, otherwise the smallest grid value the solver saw.
    ``certificates`` lists every distinct negative grid point, deepest first.
    ``boundary`` is a nonzero grid point with value exactly zero, if the
    solver returned one while no certificate exists.
    """

    copositive: bool
    value: float
    certificate: np.ndarray | None = None
    certificates: tuple = ()
    boundary: np.ndarray | None = None
    samples: SampleSet | None = field(default=None, repr=False)
    bits: int = 1

    def to_dict(self) -> dict:
        return {
            "copositive": self.copositive,
            "value": self.value,
            "certificate": None if self.certificate is None else self.certificate.tolist(),
        }


class UnsoundCertificate(AssertionError):
    pass


def check_copositivity(M, d: Discretization, solver) -> CopositivityVerdict:
    """One solver call on the grid QUBO of ``M``."""
    M = as_sym_matrix(M, "M")
    samples = solver.sample(cop_qubo(M, d))
    zs = d.decode(samples.states)
    values = np.einsum("ri,ij,rj->r", zs, M, zs)

    certs, seen = [], set()
    for r in np.argsort(values, kind="stable"):
        if not values[r] < 0.0:
            break
        key = zs[r].tobytes()
        if key not in seen:
            seen.add(key)
            certs.append((zs[r].copy(), float(values[r])))
    for z, v in certs:
        # certificates are proofs: recheck every one against M
        if not (np.all(z >= 0) and float(z @ M @ z) < 0.0):
            raise UnsoundCertificate(f"certificate failed recomputation: value {v}")

    if certs:
        z, v = certs[0]
        return CopositivityVerdict(False, v, z, tuple(certs), None, samples, d.bits)

    boundary = None
    nonzero = np.any(zs != 0.0, axis=1) & (values == 0.0)
    if nonzero.any():
        boundary = zs[np.argmax(nonzero)].copy()
    return CopositivityVerdict(True, float(values.min()), None, (), boundary, samples, d.bits)


def grid_norm(M) -> float:
    """Sum of absolute entries: the bound on ``|u^T M v|`` for ``|u|, |v| <= 1`` entrywise."""
    return float(np.abs(np.asarray(M, dtype=np.float64)).sum())


def required_K(delta: float, m_norm: float) -> int:
    """Smallest grid resolution guaranteed to expose a depth-``delta`` violation.

    If some point of the unit box has ``z^T M z <= -delta`` and
    ``K > 1 / (2 (sqrt(delta / m_norm + 1) - 1))``, the nearest grid point is
    already negative.  ``m_norm`` must bound ``|u^T M v|`` over the box, e.g.
    :func:`grid_norm`.
    """
    if not delta > 0 or not m_norm > 0:
        raise ValueError("delta and m_norm must be positive")
    r = delta / m_norm
    root_gap = r / (math.sqrt(r + 1.0) + 1.0)  # sqrt(r + 1) - 1 without cancellation
    threshold = 1.0 / (2.0 * root_gap)
    return int(math.floor(threshold)) + 1


def bits_for(K: int) -> int:
    """Fewest bits whose grid ``2**bits - 1`` is at least ``K``."""
    if K < 1:
        raise ValueError("K must be positive")
    return max(1, math.ceil(math.log2(K + 1)))
