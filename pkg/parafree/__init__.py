"""parafree - free-boundary solver and analysis toolkit.

Numerical companion to the parabolic free-boundary problem
F(D²u) - ∂ₜu = 1 in Ω, |D̃²u| ≤ K outside Ω, with F fully nonlinear and
uniformly elliptic.

Basic usage:
    >>> from parafree import FreeBoundaryStudy, Operator, SpaceTimeGrid
    >>> op = Operator.linear([[1.0]], 1.0, 1.0)
    >>> grid = SpaceTimeGrid.build(1, 1.0, 65, -0.25, 0.0)
    >>> study = FreeBoundaryStudy(op, grid, mode="A", fixture="halfspace")
    >>> result = study.solve()
    >>> report = study.verify(result)

From YAML:
    >>> study = FreeBoundaryStudy.from_yaml("runs/halfspace.yaml")
    >>> outcomes = study.analyze(study.load_result())
"""

__version__ = "0.1.0"

from .api import FreeBoundaryStudy, StatementOutcome, format_summary
from .config import ConfigError, RunConfig
from .core.elliptic_ops import Operator, OperatorKind, eval_f, eval_h, halfspace_gamma, validate
from .core.fb_solver import Mode, SolveParams, SolveResult, solve_free_boundary, verify_solution
from .core.grid_field import ScalarField, SpaceTimeGrid
from .core.poly_ladder import ParabolicPolynomial, ladder

__all__ = [
    "FreeBoundaryStudy",
    "StatementOutcome",
    "format_summary",
    "ConfigError",
    "RunConfig",
    "Operator",
    "OperatorKind",
    "eval_f",
    "eval_h",
    "halfspace_gamma",
    "validate",
    "Mode",
    "SolveParams",
    "SolveResult",
    "solve_free_boundary",
    "verify_solution",
    "ScalarField",
    "SpaceTimeGrid",
    "ParabolicPolynomial",
    "ladder",
]
