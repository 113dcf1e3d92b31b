"""Acceptance gate: one PASS/FAIL line per criterion.

Lines are printed as the tests run and repeated in the "acceptance gate"
section of the pytest summary.  Run directly (``python3
tests/test_acceptance.py``) to see only the gate.
"""

import itertools
import math
import time

import numpy as np
import pytest

import copocut.cutting_plane as cutting_plane
from copocut.bench import TttInputs, instance_graph, oracle_time_fractions, penalty_weight_sweep, time_to_target
from copocut.copositivity import bits_for, build_discretization, check_copositivity, grid_norm, required_K
from copocut.cutting_plane import Ellipsoid, OracleConfig, SolveConfig, ellipsoid_update, solve_cop
from copocut.model import HomDualPoint, assemble_M, assemble_M_hom, dual_objective, lift_hom_to_inhom, random_mbqp
from copocut.problems import brute_force_clique, erdos_renyi, exhaustive_clique, ex_mbqp_fixture, penalty_clique_qubo, solve_max_clique
from copocut.qubo import AnnealingSolver, AnnealParams, ExactSolver, Qubo, SampleSet, brute_force_solve, ising_energy, qubo_energies, qubo_to_ising

from conftest import GATE_LINES, all_bit_vectors

CLIQUE_SIZES = (8, 10, 12, 15)
DENSITIES = (0.25, 0.5, 0.75)
SEEDS = range(25)


def gate(number: int, ok: bool, what: str, measured: str) -> None:
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {what} [{measured}]"
    GATE_LINES.append(line)
    print(line)
    assert ok, line


class CertificateAudit:
    """Recomputes every certificate that any oracle call emits."""

    def __init__(self):
        self.checked = 0
        self.violations = 0

    def audit(self, M, verdict):
        for z, _ in verdict.certificates:
            self.checked += 1
            if not (np.all(z >= 0) and float(z @ M @ z) < 0.0):
                self.violations += 1

    def wrap(self, fn):
        def checked(M, d, solver):
            verdict = fn(M, d, solver)
            self.audit(np.asarray(M, dtype=np.float64), verdict)
            return verdict
        return checked


AUDIT = CertificateAudit()


@pytest.fixture(autouse=True, scope="module")
def audited_oracle():
    original = cutting_plane.check_copositivity
    cutting_plane.check_copositivity = AUDIT.wrap(original)
    yield
    cutting_plane.check_copositivity = original


def audited_check(M, d, solver):
    return cutting_plane.check_copositivity(M, d, solver)


def test_1_golden_example():
    t0 = time.perf_counter()
    rep = solve_cop(ex_mbqp_fixture(), OracleConfig(solver=ExactSolver(), bits=5),
                    SolveConfig(initial_radius=10.0, target_radius=1e-9, max_iters=2000, gap_tol=1e-3))
    elapsed = time.perf_counter() - t0
    ok = rep.lower_bound <= -1 / 3 <= rep.upper_bound and rep.width <= 1e-2 and elapsed < 10.0
    gate(1, ok, "worked example bound interval contains -1/3, width <= 1e-2, < 10 s",
         f"[{rep.lower_bound:.6f}, {rep.upper_bound:.6f}] width {rep.width:.2e} in {elapsed:.2f} s")


def clique_suite(oracle_for_seed):
    correct = total = 0
    for n, p, seed in itertools.product(CLIQUE_SIZES, DENSITIES, SEEDS):
        g = instance_graph(n, p, seed)
        est = solve_max_clique(g, oracle_for_seed(seed)).clique_number_estimate
        correct += est == brute_force_clique(g)
        total += 1
    return correct, total


def test_2_max_clique_exact():
    t0 = time.perf_counter()
    correct, total = clique_suite(lambda seed: OracleConfig(solver=ExactSolver(), bits=1))
    elapsed = time.perf_counter() - t0
    gate(2, correct == total and elapsed < 300, "exact-oracle clique number matches branch and bound on 100%, < 5 min",
         f"{correct}/{total} in {elapsed:.1f} s")


def test_3_max_clique_annealing():
    def oracle(seed):
        return OracleConfig(solver=AnnealingSolver(AnnealParams(sweeps=100, reads=1000, seed=seed)), bits=1)

    t0 = time.perf_counter()
    correct, total = clique_suite(oracle)
    elapsed = time.perf_counter() - t0
    frac = correct / total
    gate(3, frac >= 0.9, "annealing-oracle clique number correct on >= 90% (100 sweeps, 1000 reads)",
         f"{correct}/{total} = {frac:.1%} in {elapsed:.1f} s")


def test_4_qubo_ising_equivalence():
    rng = np.random.default_rng(4)
    worst, failures = 0.0, 0
    for i in range(100):
        n = 1 + i % 10
        a = rng.normal(size=(n, n))
        q = Qubo(a + a.T, rng.normal())
        s = qubo_to_ising(q)
        xs = all_bit_vectors(n)
        qe = qubo_energies(q, xs)
        ie = np.array([ising_energy(s, 2 * x - 1) for x in xs])
        err = float(np.max(np.abs(qe - ie)))
        worst = max(worst, err)
        failures += err > 1e-9
    gate(4, failures == 0, "QUBO and Ising energies agree on every assignment, 100 random models n <= 10",
         f"{failures} failures, max error {worst:.1e}")


def test_5_ellipsoid_contraction():
    rng = np.random.default_rng(5)
    worst_ratio, outside = 0.0, 0
    for m in range(2, 21):
        L = rng.normal(size=(m, m))
        e = Ellipsoid(rng.normal(size=m), L @ L.T + m * np.eye(m))
        a = rng.normal(size=m)
        new = ellipsoid_update(e, a)
        want = (m * m / (m * m - 1.0)) ** m * (m - 1.0) / (m + 1.0)
        got = math.exp(np.linalg.slogdet(new.shape)[1] - np.linalg.slogdet(e.shape)[1])
        worst_ratio = max(worst_ratio, abs(got / want - 1.0))
        u = rng.normal(size=(10_000, m))
        u *= rng.uniform(size=(10_000, 1)) ** (1 / m) / np.linalg.norm(u, axis=1, keepdims=True)
        pts = e.center + u @ np.linalg.cholesky(e.shape).T
        kept = pts[pts @ a <= a @ e.center]
        outside += int((~new.contains(kept, slack=1e-9)).sum())
    gate(5, worst_ratio <= 1e-10 and outside == 0,
         "determinant ratio exact to 1e-10 for m = 2..20, Monte Carlo containment with 1e-9 slack",
         f"max relative error {worst_ratio:.1e}, {outside} points outside")


def test_6_dual_lift_identity():
    rng = np.random.default_rng(6)
    worst_m = worst_obj = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        p = random_mbqp(rng, n, int(rng.integers(0, 4)), int(rng.integers(0, n + 1)))
        h = HomDualPoint(rng.normal(size=p.m), rng.normal(size=len(p.binary)), rng.normal())
        d = lift_hom_to_inhom(p, h)
        worst_m = max(worst_m, float(np.max(np.abs(assemble_M(p, d) - assemble_M_hom(p, h)))))
        worst_obj = max(worst_obj, abs(dual_objective(p, d) - h.gamma))
    gate(6, worst_m <= 1e-12 and worst_obj <= 1e-12,
         "lifted dual point reproduces the homogenised slack matrix and objective, 1000 random pairs",
         f"max matrix error {worst_m:.1e}, max objective error {worst_obj:.1e}")


def box_minimum(M):
    """Exact minimum of z^T M z over [0, 1]^size via stationary points of every face."""
    size = M.shape[0]
    best = math.inf
    for pattern in itertools.product((0.0, 1.0, None), repeat=size):
        free = [i for i, v in enumerate(pattern) if v is None]
        z = np.array([0.0 if v is None else v for v in pattern])
        if free:
            H = M[np.ix_(free, free)]
            fixed = [i for i in range(size) if i not in free]
            rhs = -M[np.ix_(free, fixed)] @ z[fixed]
            if abs(np.linalg.det(H)) < 1e-12:
                continue  # a singular face attains its minimum on its boundary
            z[free] = np.linalg.solve(H, rhs)
            if np.any(z[free] < 0) or np.any(z[free] > 1):
                continue
        best = min(best, float(z @ M @ z))
    return best


def planted_matrix(rng, size):
    """Random PSD part minus a nonnegative rank-one term: negative somewhere on the box."""
    while True:
        B = rng.normal(size=(size, size))
        u = rng.uniform(0.2, 1.0, size=size)
        M = 0.3 * B @ B.T - rng.uniform(1.0, 3.0) * np.outer(u, u)
        delta = -box_minimum(M)
        if delta > 0 and bits_for(required_K(delta, grid_norm(M))) * size <= 21:
            return M, delta


def test_7_discretization_bound():
    rng = np.random.default_rng(7)
    found = checked = 0
    widths = []
    for i in range(100):
        size = 2 + i % 2
        M, delta = planted_matrix(rng, size)
        # sampled minimum never beats the exact face enumeration
        pts = rng.uniform(size=(4000, size))
        assert np.einsum("ri,ij,rj->r", pts, M, pts).min() >= -delta - 1e-12
        K = required_K(delta, grid_norm(M))
        bits = bits_for(K)
        widths.append(bits)
        verdict = audited_check(M, build_discretization(size, bits), ExactSolver())
        found += not verdict.copositive
        checked += 1
    gate(7, found == checked, "grid at required_K(delta, sum |M_ij|) exposes every planted violation",
         f"{found}/{checked} certificates, bits {min(widths)}..{max(widths)}")


def test_8_time_to_target():
    value = time_to_target(TttInputs(0.99, 0.5, 1.0))
    rng = np.random.default_rng(8)
    bad = 0
    for _ in range(10_000):
        s1, s2 = np.sort(rng.uniform(1e-6, 1 - 1e-6, size=2))
        p1, p2 = np.sort(rng.uniform(0, 1, size=2))
        T = rng.uniform(1e-6, 10)
        bad += time_to_target(TttInputs(s1, p2, T)) > time_to_target(TttInputs(s1, p1, T))
        bad += time_to_target(TttInputs(s1, p1, T)) > time_to_target(TttInputs(s2, p1, T))
    gate(8, abs(value - 6.6439) <= 1e-3 and bad == 0,
         "TTT(p=0.5, s=0.99, T=1) = 6.6439 +- 1e-3 and monotone on 10^4 random inputs",
         f"{value:.4f}, {bad} monotonicity violations")


def test_9_penalty_baseline():
    rng = np.random.default_rng(9)
    matches = 0
    for i in range(50):
        n = int(rng.integers(6, 13))
        g = erdos_renyi(n, float(rng.choice([0.25, 0.5, 0.75])), int(rng.integers(0, 2**31)))
        best, _ = brute_force_solve(penalty_clique_qubo(g, 2.0))
        matches += best == -exhaustive_clique(g)
    weights = [0.5, 1, 2, 4, 8, 16]
    agg = np.zeros((len(weights), 2))
    for seed in range(25):
        rows = penalty_weight_sweep(instance_graph(12, 0.5, seed), weights,
                                    AnnealParams(sweeps=100, reads=1000, seed=seed))
        agg += [[r["valid_fraction"], r["mean_normalized_size"]] for r in rows]
    agg /= 25
    trend = bool(np.all(np.diff(agg[:, 0]) >= 0) and np.all(np.diff(agg[:, 1]) <= 0))
    gate(9, matches == 50 and trend,
         "penalty ground state equals -omega at weight 2 (50 graphs); weight trend over 25 graphs",
         f"{matches}/50; valid {np.round(agg[:, 0], 3).tolist()}, size {np.round(agg[:, 1], 3).tolist()}")


def test_10_profiling_trend():
    fractions = oracle_time_fractions([8, 12, 16, 20], instances=10)
    values = list(fractions.values())
    ok = all(b >= a for a, b in zip(values, values[1:]))
    gate(10, ok, "median oracle-time fraction nondecreasing over n = 8, 12, 16, 20",
         ", ".join(f"n={n}: {f:.3f}" for n, f in fractions.items()))


def test_11_certificate_soundness():
    # adversarial solvers on top of everything the earlier suites emitted
    rng = np.random.default_rng(11)

    class RandomStates:
        stochastic = True

        def sample(self, q):
            states = rng.integers(0, 2, size=(50, q.n)).astype(np.uint8)
            return SampleSet(states, np.full(50, -1.0))

    for i in range(300):
        size = 2 + i % 4
        a = rng.normal(size=(size, size))
        solver = RandomStates() if i % 2 else AnnealingSolver(sweeps=2, reads=20, seed=i)
        audited_check(a + a.T, build_discretization(size, 1 + i % 3), solver)
    gate(11, AUDIT.violations == 0 and AUDIT.checked > 0,
         "every emitted certificate recomputes to z^T M z < 0 with z >= 0",
         f"{AUDIT.checked} certificates audited, {AUDIT.violations} violations")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
