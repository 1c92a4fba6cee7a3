"""Two-step sparse generalized additive models with B-spline bases."""

from .errors import ConfigError, DataError, DegenerateFeature, HDGAMError, SolverDiverged, VersionError
from .exp_family import FamilySpec, deviance, gradient_and_curvature, neg_loglik
from .gmd_solver import (
    CoefBlocks,
    PenaltyConfig,
    SolverConfig,
    fit_penalized,
    group_update,
    kkt_residual,
    lambda_max,
    penalized_objective,
)
from .model_selection import FitPath, a_n, gic, select
from .spline_basis import (
    BasisSpec,
    ExpandedDesign,
    build_basis_spec,
    diff_penalty_matrix,
    evaluate_basis,
    expand_design,
    fit_basis,
    function_norm,
)
from .two_step import PathConfig, TwoStepResult, adaptive_fit, fit_two_step, predict, screen, theoretical_lambda

__version__ = "0.1.0"
