"""Linear fractional differential equations with Caputo-Prabhakar derivatives."""

__version__ = "0.1.0"

from .const_coeff import ConstProblem, mv_kernel, solve_const_homog_ic, solve_const_ivp
from .errors import (
    DimensionMismatch,
    DomainError,
    MaxItersExceeded,
    NonConvergence,
    OutOfRange,
    ParseError,
    PrabError,
    PsiValidation,
    SingularDiagonal,
    ValidationError,
)
from .fracops import (
    GridFn,
    KernelWeights,
    PrabIntParams,
    caputo_prabhakar_derivative,
    caputo_prabhakar_power,
    kernel_moment,
    kernel_weights,
    prabhakar_integral,
    rl_integral,
)
from .ml_functions import MLParams, MvMLParams, ml2, ml3, ml_multivariate, pochhammer
from .oracle import OracleConfig, volterra_direct
from .problemfile import load_problem_file, parse_problem
from .solver import (
    ProblemSpec,
    Solution,
    SolveConfig,
    canonical_solutions,
    compute_rho,
    phi_j,
    picard_solve,
    residual,
    solve_ivp,
)
from .wrt_function import PsiFunction, PsiProblemSpec, psi_inverse, solve_ivp_wrt
