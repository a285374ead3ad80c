"""Multi-body Helmholtz scattering with MFS-based compressed scattering matrices."""
from .densela import PinvOperator, column_id, cond2, gmres
from .errors import ConfigError, DomainError, GeometryError, HelmscatError, SingularityError
from .fields import Monopoles, PlaneWave
from .geometry2d import Contour2D, build_proxy_circle, discretize_panels, discretize_smooth
from .geometry3d import Surface3D, build_proxy_sphere, discretize_surface, rotation_matrix
from .mfs import build_local_system, solve_local_dirichlet
from .multibody import (
    BodySpec,
    GlobalProblem,
    Reference,
    SolveReport,
    apply_global,
    assemble_rhs,
    build_problem,
    compute_errors,
    eval_scattered,
    global_condition_number,
    reconstruct_full,
    solve_multibody,
)
from .scatmat import OperatorCache, ScattererOperator, build_scatterer
from .specfun import Kernel, bessel_j0, bessel_y0, hankel0_first

__version__ = "0.1.0"
