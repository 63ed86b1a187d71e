"""Guaranteed-constant error bounds for P1 finite element solutions of the
nonhomogeneous Neumann problem -Laplace(u) + u = 0, du/dn = f.

The certified chain: solve the P1 problem, equilibrate a Raviart-Thomas
flux, combine the hypercircle functional Y with the explicit projection
and trace constants, and maximize over boundary data via a generalized
symmetric eigenproblem to obtain kappa_h, C1(h), and M_h.
"""

from .constants import ExplicitConstants, bessel_j1_root, c1_of_mesh, trace_constant
from .estimator import (BoundaryFunction, BoundReport, aposteriori_bound,
                        apriori_bounds, full_report, oscillation_norm,
                        project_pi_gamma)
from .kappa import (KappaResult, KappaWorkspace, YParams, boundary_norm,
                    build_forms, compute_kappa, y_value)
from .linalg import (DenseSymMatrix, FactorizationError, NumericalError,
                     ResidualError, SparseSymMatrix, max_generalized_eig,
                     solve_spd, solve_sym_indefinite)
from .mesh import Domain, Mesh, MeshError, boundary_length, element_geometry, generate, refine
from .p1 import P1NeumannSolver, P1Solution, assemble_bilinear, norms, project_pi_h, solve_neumann
from .rt0 import (CompatibilityError, MixedSolution, MixedSolver, RT0Field,
                  assemble_mixed, diff_norm_grad_minus_flux, solve_mixed)
from .verify import (MANUFACTURED, ManufacturedSolution, check_hypercircle_discrete,
                     interpolate, rate_table, true_error)

__version__ = "0.1.0"
