"""Spectral Petrov-Galerkin solvers for fractional initial value problems.

Solves ``0D_t^alpha u + lam u = f`` with ``u(0) = 0`` in the trial space
``t^alpha P_N``, by a direct dense solve or a preconditioned fixed-point
iteration whose matrix-vector products run in quasi-linear time through a
Toeplitz-dot-Hankel factorization of Jacobi connection coefficients. A
time-fractional diffusion extension couples the scheme with central
differences in space.
"""

from .analysis import (ConvergenceTable, rates, regularity_slope, sobolev_norm,
                       standard_l2_error, weighted_error)
from .connection import (ConnectionMatrix, StructuredConnection, build_structured,
                         closed_form_second_param, connection_dense_oracle, transform_to_alpha_alpha)
from .exceptions import (ConfigError, DomainError, FracspecError, NotPSDError, QuadratureError,
                         RankOverflowError, SingularSystemError, ToleranceNotMetError)
from .fast_kernels import LowRankFactors, ToeplitzOperator, pivoted_cholesky, thd_matvec, toeplitz_matvec
from .fractional import (caputo_oracle, frac_deriv_weighted, frac_integral_weighted,
                         right_frac_deriv_weighted)
from .jacobi import (BasisSpec, QuadratureRule, SpectralCoeffs, eval_jacobi, eval_shifted,
                     gauss_jacobi, lambda_ratio, weighted_norm_sq)
from .solver import (FivpProblem, IterationConfig, IterationReport, PgSystem, assemble, evaluate,
                     solve, solve_direct, solve_iterative)
from .sources import Source, abs_sin_shift, parse_source, power_exp, sin_shift
from .tfde import (BlockPreconditioner, BlockSystem, TfdeProblem, assemble_tfde, solve_tfde,
                   solve_tfde_modal, tfde_error)

__version__ = "0.1.0"
