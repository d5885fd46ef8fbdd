"""Discrete Dirichlet-to-Neumann and Robin semigroups on polygonal domains."""
from .assembly import (
    CoefficientField,
    EllipticityError,
    OperatorBundle,
    SpectralGateViolation,
    assemble,
    coefficients,
    dirichlet_block,
    dirichlet_eigenvalues,
    spectral_gate,
)
from .dtn import (
    DtnOperator,
    NearSingularNeumann,
    RobinOperator,
    build_dtn,
    build_robin,
    conormal_two_routes,
    lift,
    neumann_solve,
)
from .mesh import Mesh, MeshError, boundary_measure, load_mesh, preset_domain, refine
from .scenario import Scenario
from .spectral import (
    SemigroupKernel,
    SpectralDecomposition,
    eigensolve,
    kernel_matrix,
    resolvent_apply,
    semigroup_apply,
)
from .verify import VerificationReport, run_suite

__version__ = "0.1.0"
