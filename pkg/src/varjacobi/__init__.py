"""Local minimality of k-th order variational problems via Jacobi curves.

Band Lagrangians ``L = 1/2 sum h^(i)T M_ii h^(i) + sum h^(i)T M_i(i+1) h^(i+1)``
with polynomial matrix coefficients are turned into a linear Hamiltonian
system whose vertical solutions locate conjugate points. Around that sit the
Picone identity, the rank and symplectic flag of the Jacobi curve, a scalar
route through the Eswaran identity and a Galerkin oracle.
"""

from .conjugacy import (
    CERTIFIED, FOUND, INCONCLUSIVE, ConjugacyResult, ConjugatePoint, find_conjugate_points,
    jet_normalized_subwronskian, positivity_verdict, subwronskian, subwronskian_samples,
)
from .eswaran import (
    eswaran_integrated_check, eswaran_ratio, scalar_conjugate_points, scalar_vertical_solutions,
)
from .frame import FrameTrajectory, integrate_frame, symplectic_drift
from .grassmann import (
    classify_symplectic, curve_rank, expected_flags, fanning_check, flag_profile, frame_jet,
    vertical_intersection_dim,
)
from .hamiltonian import HamiltonianSystem, legendre_transform, zeroing_transform
from .picone import (
    ConjugatePointError, TestField, discrete_hessian_min_eig, functional_value,
    functional_via_picone, picone_lhs_rhs,
)
from .polynomial import MatrixPolynomial
from .problem import (
    ProblemFormatError, RawCoefficients, ScalarProblem1D, VariationalProblem, diagonalize_1d,
    load_problem, problem_from_dict, reduce_to_band, validate_problem,
)

__version__ = "0.1.0"
