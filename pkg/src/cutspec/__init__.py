from .assembly import (
    DofMap,
    JumpData,
    apply_dirichlet,
    assemble_ghost_penalty,
    assemble_load,
    assemble_mass,
    assemble_operators,
    assemble_stiffness,
    build_extended_forms,
    compute_nitsche_coeffs,
)
from .basis import Basis2D, basis_eval_grid, gauss_legendre, legendre_eval, lgl_points
from .config import StudyConfig
from .geometry import (
    CutMesh,
    ElementClass,
    LevelSet,
    Rectangle,
    Side,
    build_mesh,
    check_interface_assumption,
    classify_elements,
)
from .norms import DiscreteFunction, ExactSolution, broken_h1_error, broken_l2_error, energy_norm
from .problems import list_problems, registry_problem
from .quadrature import MeshQuadrature, cut_volume_rule, interface_rule, ridder_root
from .solvers import condition_estimate, solve_smallest_eigs, solve_source
from .study import emit_csv, run_h_sweep, run_p_sweep, run_single

__version__ = "0.1.0"
