"""Copositive cutting-plane bounds for mixed-binary quadratic programs.

The copositivity oracle is a grid-discretised QUBO, solved either exactly
or by simulated annealing.
"""

from copocut.copositivity import (
    CopositivityVerdict,
    Discretization,
    UnsoundCertificate,
    build_discretization,
    check_copositivity,
    cop_qubo,
    grid_norm,
    required_K,
)
from copocut.cutting_plane import (
    Cut,
    Ellipsoid,
    Escalation,
    OracleConfig,
    SolveConfig,
    SolveReport,
    certificate_to_cut,
    classify_cut,
    ellipsoid_update,
    solve_cop,
)
from copocut.kernels import BACKEND
from copocut.model import (
    DualPoint,
    HomDualPoint,
    Mbqp,
    ModelError,
    assemble_M,
    assemble_M_hom,
    dual_objective,
    evaluate_mbqp,
    lift_hom_to_inhom,
)
from copocut.problems import (
    Graph,
    brute_force_clique,
    clique_cop_matrix,
    erdos_renyi,
    ex_mbqp_fixture,
    export_milp_text,
    penalty_clique_qubo,
    solve_max_clique,
)
from copocut.qubo import (
    AnnealingSolver,
    AnnealParams,
    ExactSolver,
    Ising,
    Qubo,
    SampleSet,
    brute_force_solve,
    ising_energy,
    qubo_energy,
    qubo_to_ising,
    simulated_anneal,
)

__version__ = "0.1.0"
