"""Mixed finite elements for the 2D vector Laplacian, biharmonic and Stokes problems.

Lagrange P_r for the vorticity ``sigma = rot u`` and Raviart-Thomas RT_r for
``u`` on triangulations of the unit square, with convergence studies
against manufactured solutions.
"""
from .assembly import (
    assemble_curl_coupling,
    assemble_div_pressure,
    assemble_divdiv,
    assemble_load,
    assemble_mass,
    compose_block_system,
)
from .cases import CASES, ManufacturedCase, derive_load, get_case
from .linalg import SingularSystemError, dense_rank_and_nullspace, sparse_direct_solve
from .mesh import Mesh, MeshError, build_uniform_square, classify_boundary, perturb_interior
from .problems import (
    solve_biharmonic_cr,
    solve_stokes_vvp,
    solve_vector_laplacian,
)
from .projections import (
    discrete_hodge_decompose,
    interpolate_rt_canonical,
    project_elliptic_sigma,
    project_l2,
    project_pvh,
)
from .refelem import eval_dg, eval_lagrange, eval_rt, quadrature
from .space import FeFunction, FeSpace, build_space
from .study import ConvergenceReport, emit_table, error_norms, run_study

__version__ = "0.1.0"
