"""Core numerical components.

This package contains the fundamental building blocks:
- Operator: Uniformly elliptic operators F (linear, Bellman, Pucci)
- SpaceTimeGrid / ScalarField: Uniform space-time grids and fields on them
- solve_free_boundary: Backward Euler + policy iteration for H(u) = χ_Ω
- ladder: Polynomial approximation ladder P_k
- thickness, blowup_fit, graph_fit, ...: Free-boundary estimators
"""

from .elliptic_ops import Operator, OperatorKind, SymMatrix, eval_f, eval_h, halfspace_gamma, validate
from .errors import PreconditionError, RegionError, SolverError, StencilError
from .fb_analysis import (
    blowup_fit,
    graph_fit,
    minimal_diameter,
    monotonicity_check,
    nondegeneracy,
    quadratic_growth,
    thickness,
    thickness_report,
    time_decay,
)
from .fb_solver import (
    Mode,
    SolveParams,
    SolveResult,
    solve_dirichlet,
    solve_free_boundary,
    solve_obstacle,
    verify_solution,
)
from .fixtures import FIXTURE_NAMES, exact_result, fixture_field
from .grid_field import ParabolicCylinder, ScalarField, SpaceTimeGrid
from .poly_ladder import ParabolicPolynomial, decompose, density_decay, ladder, lp_bmo, pointwise_bmo

__all__ = [
    "Operator",
    "OperatorKind",
    "SymMatrix",
    "eval_f",
    "eval_h",
    "halfspace_gamma",
    "validate",
    "PreconditionError",
    "RegionError",
    "SolverError",
    "StencilError",
    "blowup_fit",
    "graph_fit",
    "minimal_diameter",
    "monotonicity_check",
    "nondegeneracy",
    "quadratic_growth",
    "thickness",
    "thickness_report",
    "time_decay",
    "Mode",
    "SolveParams",
    "SolveResult",
    "solve_dirichlet",
    "solve_free_boundary",
    "solve_obstacle",
    "verify_solution",
    "FIXTURE_NAMES",
    "exact_result",
    "fixture_field",
    "ParabolicCylinder",
    "ScalarField",
    "SpaceTimeGrid",
    "ParabolicPolynomial",
    "decompose",
    "density_decay",
    "ladder",
    "lp_bmo",
    "pointwise_bmo",
]
