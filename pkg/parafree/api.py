"""High-level Python API for parafree.

This module provides the FreeBoundaryStudy class that ties an operator, a grid,
problem data and the analysis settings together.

Example:
    >>> from parafree import FreeBoundaryStudy
    >>> study = FreeBoundaryStudy.from_yaml("runs/halfspace.yaml")
    >>> result = study.solve()
    >>> report = study.verify(result)
    >>> outcomes = study.analyze(result)
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, TypeVar, Union

import numpy as np

from .config import AnalysisConfig, RunConfig, worker_count
from .core.elliptic_ops import Operator
from .core.errors import PreconditionError, RegionError
from .core.fb_analysis import (
    blowup_fit,
    free_boundary_nodes,
    graph_fit,
    map_points,
    monotonicity_check,
    nondegeneracy,
    quadratic_growth,
    thickness_report,
    time_decay,
)
from .core.fb_solver import Mode, ResidualReport, SolveParams, SolveResult, solve_free_boundary, verify_solution
from .core.field_io import export_field_csv, read_field, read_mask, write_csv, write_field, write_mask, write_report
from .core.fixtures import exact_result, fixture_field
from .core.grid_field import ScalarField, SpaceTimeGrid
from .core.poly_ladder import (
    COMPATIBILITY_TOL,
    LadderResult,
    ParabolicPolynomial,
    decompose,
    density_decay,
    ladder,
    lp_bmo,
    pointwise_bmo,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

STATEMENTS = {
    "thickness": "thickness of the coincidence set",
    "nondegeneracy": "non-degeneracy",
    "quadratic_growth": "optimal regularity",
    "time_decay": "time-derivative decay toward the free boundary",
    "monotonicity": "directional monotonicity",
    "blowup": "half-space blow-up classification",
    "graph_fit": "C1 regularity of the free boundary",
    "ladder": "polynomial approximation ladder",
    "pointwise_bmo": "pointwise BMO estimate",
    "lp_bmo": "L^p BMO estimate",
    "density_decay": "complement density decay",
    "decompose": "ABP decomposition",
}

Point = tuple[float, ...]


@dataclass
class StatementOutcome:
    """Status of one estimator run, as listed in the summary report."""
    estimator: str
    status: str  # pass | fail | report | precondition
    detail: str = ""
    csv_path: Optional[Path] = None

    @property
    def statement(self) -> str:
        return STATEMENTS.get(self.estimator, self.estimator)

    def to_string(self, names: Optional[Mapping[str, str]] = None) -> str:
        label = (names or {}).get(self.estimator, self.statement)
        line = f"{label} [{self.estimator}]: {self.status}"
        return f"{line} ({self.detail})" if self.detail else line


def format_summary(outcomes: Sequence[StatementOutcome], header: Sequence[str] = (),
                   names: Optional[Mapping[str, str]] = None) -> str:
    """Format outcomes as `key: value` lines for the summary report.

    Args:
        outcomes: One entry per statement checked
        header: Lines written before the statements
        names: Statement labels by estimator, overriding `STATEMENTS`
    """
    lines = list(header)
    for outcome in outcomes:
        lines.append(outcome.to_string(names))
        if outcome.csv_path is not None:
            lines.append(f"  csv: {outcome.csv_path}")
    return "\n".join(lines)


def _flagged(fn: Callable[[], T]) -> tuple[Optional[T], str]:
    """Run one estimator row; precondition and region violations become a flag."""
    try:
        return fn(), ""
    except (PreconditionError, RegionError) as e:
        return None, f"{type(e).__name__}: {e}"


def _point_label(point: Sequence[float]) -> str:
    return " ".join(repr(float(v)) for v in point)


def _status_from(flags: Sequence[bool], any_rows: bool) -> str:
    if not any_rows:
        return "precondition"
    return "pass" if all(flags) else "fail"


class FreeBoundaryStudy:
    """High-level interface: solve, verify and analyze one free-boundary problem.

    Example (direct):
        >>> op = Operator.linear([[1.0]], 1.0, 1.0)
        >>> grid = SpaceTimeGrid.build(1, 1.0, 65, -0.25, 0.0)
        >>> study = FreeBoundaryStudy(op, grid, mode="A", fixture="halfspace")
        >>> result = study.solve()

    Example (from YAML):
        >>> study = FreeBoundaryStudy.from_yaml("runs/halfspace.yaml")
        >>> result = study.solve()
    """

    def __init__(
        self,
        operator: Operator,
        grid: SpaceTimeGrid,
        mode: Union[Mode, str] = Mode.A,
        fixture: Optional[str] = "halfspace",
        initial_fixture: Optional[str] = None,
        field_file: Optional[str] = None,
        fixture_options: Optional[dict] = None,
        params: Optional[SolveParams] = None,
        analysis: Optional[AnalysisConfig] = None,
        output_dir: str = "parafree-out",
        workers: Optional[int] = None,
    ):
        """Initialize a study.

        Args:
            operator: Operator F
            grid: Space-time grid (replaced by the file's grid when `field_file` is set)
            mode: Mode.A (Ω ⊃ {u ≠ 0}) or Mode.B (Ω ⊃ {∇u ≠ 0})
            fixture: Named exact solution supplying lateral (and initial) data
            initial_fixture: Named fixture overriding the initial datum
            field_file: PARAFREE-FIELD file supplying the data instead of a fixture
            fixture_options: Extra fixture parameters (tilt_deg, sigma, coefficients)
            params: Solver parameters
            analysis: Analysis block (estimators, points, scales, ...)
            output_dir: Directory for fields, CSVs and reports
            workers: Thread cap for per-point estimators (default: PARAFREE_THREADS)
        """
        if fixture is None and field_file is None:
            raise ValueError("A study needs either a fixture or a field file")
        self.operator = operator
        self.mode = Mode(mode)
        self.fixture = fixture
        self.initial_fixture = initial_fixture
        self.field_file = field_file
        self.fixture_options = fixture_options or {}
        self.params = params or SolveParams()
        self.analysis = analysis or AnalysisConfig()
        self.output_dir = Path(output_dir)
        self.workers = workers if workers is not None else worker_count()

        self._file_data: Optional[ScalarField] = None
        if field_file is not None:
            self._file_data = read_field(field_file)
            if self._file_data.grid.n != operator.n:
                raise ValueError(f"Field file {field_file} has n={self._file_data.grid.n}, operator has n={operator.n}")
            if self._file_data.grid != grid:
                logger.info(f"Using the grid of {field_file} ({self._file_data.grid.header()})")
            grid = self._file_data.grid
        self.grid = grid

    @classmethod
    def from_config(cls, config: RunConfig) -> 'FreeBoundaryStudy':
        problem = config.problem
        return cls(
            operator=config.build_operator(),
            grid=config.build_grid(),
            mode=problem.solve_mode,
            fixture=problem.fixture,
            initial_fixture=problem.initial,
            field_file=problem.field_file,
            fixture_options=problem.fixture_options(),
            params=problem.solve_params(),
            analysis=config.analysis,
            output_dir=config.output,
        )

    @classmethod
    def from_yaml(cls, config_path: str) -> 'FreeBoundaryStudy':
        """Create a study from a YAML run configuration.

        Args:
            config_path: Path to YAML config file

        Returns:
            FreeBoundaryStudy instance

        Example:
            >>> study = FreeBoundaryStudy.from_yaml("runs/halfspace.yaml")
        """
        return cls.from_config(RunConfig.from_yaml(config_path))

    # ------------------------------------------------------------------
    # Data and solving
    # ------------------------------------------------------------------

    def _fixture(self, name: str) -> ScalarField:
        options = self.fixture_options if name == self.fixture else {}
        return fixture_field(self.grid, self.operator, name, **options)

    def problem_data(self) -> tuple[ScalarField, ScalarField]:
        """(initial, lateral) data fields on the study grid."""
        lateral = self._file_data if self._file_data is not None else self._fixture(self.fixture)
        initial = self._fixture(self.initial_fixture) if self.initial_fixture else lateral
        return initial, lateral

    def reference(self) -> Optional[SolveResult]:
        """The exact fixture as a result, when the data comes from a fixture."""
        if self.fixture is None or self._file_data is not None:
            return None
        return exact_result(self.grid, self.operator, self.fixture, self.mode, **self.fixture_options)

    def solve(self) -> SolveResult:
        """Run the free-boundary solver on the problem data.

        Returns:
            SolveResult; non-converged levels are flagged in the result

        Raises:
            SolverError: If policy iteration fails on some level
            StencilError: If the operator family gives a non-monotone stencil
        """
        initial, lateral = self.problem_data()
        print(f"🔄 Solving mode {self.mode.value} with {self.operator.describe()} on {self.grid.header()}")
        result = solve_free_boundary(self.operator, self.grid, initial, lateral, self.mode, self.params)
        if result.converged:
            print(f"✓ Converged on all {self.grid.nt - 1} levels "
                  f"(max outer {int(result.outer_iterations.max())}, max residual {float(result.residuals.max()):.3e})")
        else:
            bad = int((~result.converged_levels).sum())
            print(f"⚠️ Ω fixed point did not converge on {bad} of {self.grid.nt - 1} levels")
        return result

    def verify(self, result: SolveResult) -> ResidualReport:
        report = verify_solution(result, self.operator, self.params)
        marker = "✓" if report.passed else "⚠️"
        print(f"{marker} Residual check {'passed' if report.passed else 'failed'}: "
              f"Ω residual {report.omega_residual:.3e} (tol {report.tolerance:.3e}), "
              f"complement bound {report.complement_bound:.3e} (K {report.K:g})")
        return report

    def derive_mask(self, u: ScalarField) -> np.ndarray:
        """Ω of a field read without a mask: {u ≠ 0} in mode A, {|∇u| > θ_g} in mode B."""
        if self.mode == Mode.A:
            return u.values != 0.0
        _, theta_g = self.params.thresholds(u.grid)
        grads = np.gradient(u.values, u.grid.h, axis=tuple(range(1, u.grid.n + 1)))
        if u.grid.n == 1:
            grads = [grads]
        return np.sqrt(sum(g * g for g in grads)) > theta_g

    def load_result(self, field_path: Optional[str] = None, mask_path: Optional[str] = None) -> SolveResult:
        """Result to analyze: a field file (with optional mask file), else the problem data.

        Without any file the exact fixture is analyzed.

        Raises:
            FileNotFoundError: If a given file does not exist
            ValueError: If a file is malformed or does not match the operator
        """
        if field_path is None and mask_path is not None:
            raise ValueError("A mask file needs a field file")
        if field_path is None:
            reference = self.reference()
            if reference is not None:
                return SolveResult.from_field(reference.u, reference.mask, self.mode, self.params)
            u = self._file_data
        else:
            u = read_field(field_path)
            if u.grid.n != self.operator.n:
                raise ValueError(f"Field file {field_path} has n={u.grid.n}, operator has n={self.operator.n}")
        if mask_path is not None:
            mask = read_mask(mask_path)
            if mask.shape != u.grid.shape:
                raise ValueError(f"Mask {mask_path} has shape {mask.shape}, field has {u.grid.shape}")
        else:
            mask = self.derive_mask(u)
        return SolveResult.from_field(u, mask, self.mode, self.params)

    def save_solution(self, result: SolveResult, report: Optional[ResidualReport] = None,
                      export_csv: bool = False) -> dict[str, Path]:
        """Write u, Ω masks, per-level convergence table and the residual report."""
        out = self.output_dir
        paths = {
            "field": write_field(out / "u.field", result.u),
            "mask": write_mask(out / "mask.field", result.grid, result.mask),
        }
        if result.proposed_mask is not None:
            paths["proposed_mask"] = write_mask(out / "proposed_mask.field", result.grid, result.proposed_mask)
        ts = result.grid.ts
        paths["levels"] = write_csv(
            out / "levels.csv",
            ["m", "t", "outer_iterations", "policy_iterations", "residual", "converged"],
            ([m, float(ts[m]), int(result.outer_iterations[m]), int(result.policy_iterations[m]),
              float(result.residuals[m]), bool(result.converged_levels[m])] for m in range(result.grid.nt)),
        )
        if report is not None:
            text = "\n".join([
                f"operator: {self.operator.describe()}",
                f"mode: {result.mode.value}",
                f"converged: {result.converged}",
                f"theta_u: {self.params.thresholds(result.grid)[0]!r}",
                f"theta_g: {self.params.thresholds(result.grid)[1]!r}",
                report.to_text(),
            ])
            paths["report"] = write_report(out / "residual_report.txt", text)
        if export_csv:
            paths["field_csv"] = export_field_csv(out / "u.csv", result.u)
        for name, path in paths.items():
            logger.debug(f"Wrote {name}: {path}")
        return paths

    # ------------------------------------------------------------------
    # Analysis
    # ------------------------------------------------------------------

    def sample_points(self, result: SolveResult, count: int = 4) -> list[Point]:
        """Configured analysis points, else up to `count` ∂Ω nodes on the middle level."""
        if self.analysis.points:
            return [tuple(p) for p in self.analysis.points]
        grid = result.grid
        middle = (grid.nt - 1) // 2
        nodes = free_boundary_nodes(result, [middle])
        if not nodes:
            return []
        picks = np.unique(np.linspace(0, len(nodes) - 1, min(count, len(nodes))).round().astype(int))
        points = []
        for k in picks:
            x, t = grid.node_point(nodes[k])
            points.append(tuple(float(v) for v in x) + (t,))
        return points

    def check_points(self, result: SolveResult, points: Sequence[Point]) -> None:
        """Raises RegionError for a point outside the grid box."""
        grid = result.grid
        for p in points:
            if len(p) != grid.n + 1:
                raise ValueError(f"Analysis point {list(p)} needs {grid.n + 1} coordinates")
            grid.node_index(p[:-1], p[-1])

    def _csv(self, name: str, columns: list[str], rows: list[list]) -> Path:
        return write_csv(self.output_dir / f"{name}.csv", columns, rows)

    def _enabled(self, name: str) -> bool:
        return name in self.analysis.estimators

    def _per_point(self, fn: Callable[[Point], T], points: Sequence[Point]) -> list[T]:
        return map_points(fn, points, self.workers)

    def analyze(self, result: SolveResult) -> list[StatementOutcome]:
        """Run the geometric estimators (thickness, non-degeneracy, growth, time decay, monotonicity)."""
        points = self.sample_points(result)
        self.check_points(result, points)
        outcomes = []
        for name in ("thickness", "nondegeneracy", "quadratic_growth", "time_decay", "monotonicity"):
            if self._enabled(name):
                outcomes.append(getattr(self, f"_run_{name}")(result, points))
        return outcomes

    def run_blowup(self, result: SolveResult) -> list[StatementOutcome]:
        """Blow-up fits and graph slopes at the analysis points."""
        points = self.sample_points(result)
        self.check_points(result, points)
        outcomes = []
        for name in ("blowup", "graph_fit"):
            if self._enabled(name):
                outcomes.append(getattr(self, f"_run_{name}")(result, points))
        return outcomes

    def run_ladder(self, result: SolveResult) -> list[StatementOutcome]:
        """Polynomial ladder at the origin plus the BMO, density and decomposition diagnostics."""
        lad, flag = _flagged(lambda: ladder(result.u, self.operator, self.analysis.rho,
                                            self.analysis.k_max, self.params))
        outcomes = [self._ladder_outcome(lad, flag)]
        if self._enabled("pointwise_bmo"):
            outcomes.append(self._run_pointwise_bmo(result, lad))
        if self._enabled("lp_bmo"):
            outcomes.append(self._run_lp_bmo(result, lad))
        if self._enabled("density_decay"):
            outcomes.append(self._run_density_decay(result, lad))
        if self._enabled("decompose"):
            outcomes.append(self._run_decompose(result, lad))
        return outcomes

    def _run_thickness(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        eps = self.analysis.epsilon
        report = thickness_report(result, points, self.analysis.scales, eps, self.workers, flag_regions=True)
        path = self._csv("thickness", report.csv_columns(), report.csv_rows())
        values = report.admissible
        detail = f"min delta_r={report.minimum!r} vs epsilon={eps!r}" if values else "no admissible rows"
        return StatementOutcome("thickness", _status_from([v > eps for v in values], bool(values)), detail, path)

    def _run_nondegeneracy(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        scales = self.analysis.scales
        lam1 = self.operator.lambda1

        def one(p: Point) -> list[list]:
            rows = []
            for r in scales:
                value, flag = _flagged(lambda: nondegeneracy(result, p[:-1], p[-1], r, lam1))
                if value is None:
                    rows.append([_point_label(p), float(r)] + [math.nan] * 3 + [False, math.nan, math.nan, flag])
                else:
                    rows.append([_point_label(p), float(r), value.lhs, value.rhs, value.margin, value.passed,
                                 value.barrier_boundary_max, value.barrier_sup, ""])
            return rows

        rows = [row for chunk in self._per_point(one, points) for row in chunk]
        path = self._csv("nondegeneracy", ["point", "r", "lhs", "rhs", "margin", "passed",
                                           "barrier_boundary_max", "barrier_sup", "flag"], rows)
        ok = [row[5] for row in rows if not row[8]]
        margins = [row[4] for row in rows if not row[8]]
        detail = f"worst margin {min(margins)!r} (slack -10h^2)" if margins else "no admissible rows"
        return StatementOutcome("nondegeneracy", _status_from(ok, bool(ok)), detail, path)

    def _run_quadratic_growth(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        scales = self.analysis.scales
        K = self.params.K

        def one(p: Point):
            return p, _flagged(lambda: quadratic_growth(result, p[:-1], p[-1], scales, K))

        rows, within, c_bars = [], [], []
        for p, (report, flag) in self._per_point(one, points):
            if report is None:
                rows.append([_point_label(p), math.nan, math.nan, math.nan, flag])
                continue
            within.append(report.d2_sup <= K)
            c_bars.append(report.c_bar)
            rows.extend([_point_label(p), r, s, report.d2_sup, ""] for r, s in report.rows)
        path = self._csv("quadratic_growth", ["point", "r", "S_r", "d2_sup", "flag"], rows)
        detail = f"empirical C_bar={max(c_bars)!r}, K={K!r}" if c_bars else "no admissible rows"
        return StatementOutcome("quadratic_growth", _status_from(within, bool(within)), detail, path)

    def _run_time_decay(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        report = time_decay(result)
        path = self._csv("time_decay", report.csv_columns(), report.csv_rows())
        detail = f"decays={report.decays}" + "".join(f"; {note}" for note in report.notes)
        return StatementOutcome("time_decay", "report", detail, path)

    def _run_monotonicity(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        grid = result.grid
        e = self.analysis.direction(grid.n)
        radius = max(self.analysis.scales)
        C0 = self.analysis.C0
        lam1 = self.operator.lambda1

        def one(p: Point):
            return p, _flagged(lambda: monotonicity_check(result, e, C0, lam1, p[:-1], p[-1], radius))

        rows, implications = [], []
        for p, (value, flag) in self._per_point(one, points):
            if value is None:
                rows.append([_point_label(p), radius, math.nan, math.nan, math.nan, False, False, False, flag])
                continue
            implications.append(value.implication_holds)
            rows.append([_point_label(p), radius, value.m1, value.m2, value.threshold, value.hypothesis_holds,
                         value.conclusion_holds, value.implication_holds, ""])
        path = self._csv("monotonicity", ["point", "R", "m1", "m2", "threshold", "hypothesis", "conclusion",
                                          "implication", "flag"], rows)
        detail = f"C0={C0!r}, e={e}"
        return StatementOutcome("monotonicity", _status_from(implications, bool(implications)), detail, path)

    def _run_blowup(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        radii = sorted(self.analysis.scales, reverse=True)
        h = result.grid.h

        def one(p: Point):
            return p, _flagged(lambda: blowup_fit(result, self.operator, p[:-1], p[-1], radii))

        rows, ok = [], []
        for p, (fit, flag) in self._per_point(one, points):
            if fit is None:
                rows.append([_point_label(p), math.nan, "", math.nan, math.nan, math.nan, math.nan, flag])
                continue
            finest = fit.rows[-1]
            gamma_ok = abs(finest.gamma - fit.gamma_reference) <= 0.1 * fit.gamma_reference
            ok.append(fit.residuals_decreasing and gamma_ok and finest.m_hat <= 10.0 * h)
            rows.extend([_point_label(p)] + row + [""] for row in fit.csv_rows())
        path = self._csv("blowup", ["point", "r", "e", "gamma", "gamma_reference", "residual", "m_hat", "flag"], rows)
        detail = f"{sum(ok)} of {len(ok)} points classified as half-space" if ok else "no admissible points"
        return StatementOutcome("blowup", _status_from(ok, bool(ok)), detail, path)

    def _run_graph_fit(self, result: SolveResult, points: Sequence[Point]) -> StatementOutcome:
        scales = sorted(self.analysis.scales, reverse=True)

        def one(p: Point):
            return p, _flagged(lambda: graph_fit(result, p[:-1], p[-1], scales))

        rows, ok = [], []
        for p, (fit, flag) in self._per_point(one, points):
            if fit is None:
                rows.append([_point_label(p), math.nan, "", math.nan, 0, True, flag])
                continue
            if any(not row.skipped for row in fit.rows):
                ok.append(fit.c1_indicator)
            rows.extend([_point_label(p)] + row + [""] for row in fit.csv_rows())
        path = self._csv("graph_fit", ["point", "r", "e", "slope", "points", "skipped", "flag"], rows)
        detail = f"slopes non-increasing at {sum(ok)} of {len(ok)} points" if ok else "no fitted rows"
        return StatementOutcome("graph_fit", _status_from(ok, bool(ok)), detail, path)

    def _ladder_outcome(self, lad: Optional[LadderResult], flag: str) -> StatementOutcome:
        if lad is None:
            return StatementOutcome("ladder", "precondition", flag)
        path = self._csv("ladder", lad.csv_columns(), lad.csv_rows())
        write_report(self.output_dir / "ladder.txt", lad.to_text())
        compatible = all(abs(row.poly.residual(self.operator)) <= COMPATIBILITY_TOL for row in lad.rows)
        ok = [all(lad.contraction_flags()), compatible]
        detail = f"fitted C={lad.fitted_C!r}, levels={len(lad.rows)}, truncated={lad.truncated}"
        return StatementOutcome("ladder", _status_from(ok, True), detail, path)

    def _run_pointwise_bmo(self, result: SolveResult, lad: Optional[LadderResult]) -> StatementOutcome:
        if lad is None:
            return StatementOutcome("pointwise_bmo", "precondition", "no ladder")
        rows = pointwise_bmo(result.u, self.operator, self.analysis.scales, lad)
        path = self._csv("pointwise_bmo", ["r", "k", "sup", "ratio"],
                         [[row.radius, row.k, row.sup, row.ratio] for row in rows])
        worst = max((row.ratio for row in rows), default=math.nan)
        return StatementOutcome("pointwise_bmo", "report", f"max sup/r^2={worst!r}", path)

    def _run_lp_bmo(self, result: SolveResult, lad: Optional[LadderResult]) -> StatementOutcome:
        if lad is None:
            return StatementOutcome("lp_bmo", "precondition", "no ladder")
        rows = lp_bmo(result.u, lad, self.analysis.p)
        path = self._csv("lp_bmo", ["k", "mean", "nodes", "excluded"],
                         [[row.k, row.mean, row.nodes, row.excluded] for row in rows])
        means = [row.mean for row in rows if np.isfinite(row.mean)]
        detail = f"p={self.analysis.p!r}, max mean={max(means)!r}" if means else "no resolvable levels"
        return StatementOutcome("lp_bmo", "report", detail, path)

    def _run_density_decay(self, result: SolveResult, lad: Optional[LadderResult]) -> StatementOutcome:
        report, flag = _flagged(lambda: density_decay(result, self.analysis.scales, lad))
        if report is None:
            return StatementOutcome("density_decay", "precondition", flag)
        path = self._csv("density_decay", report.csv_columns(), report.csv_rows())
        write_report(self.output_dir / "density_decay.txt", report.to_text())
        worst = max(report.identity_errors, default=0.0)
        detail = f"identity error {worst!r}, branch {report.branch}"
        return StatementOutcome("density_decay", _status_from([report.identity_holds], True), detail, path)

    def _run_decompose(self, result: SolveResult, lad: Optional[LadderResult]) -> StatementOutcome:
        zero = ParabolicPolynomial.zero(result.grid.n)
        rows, ratios = [], []
        for r in self.analysis.scales:
            poly = lad.member(r).poly if lad is not None else zero
            value, flag = _flagged(lambda: decompose(result, poly, self.operator, r, params=self.params))
            if value is None:
                rows.append([float(r), math.nan, math.nan, math.nan, flag])
                continue
            ratios.append(value.abp_ratio)
            rows.append([float(r), value.sup_w, value.complement, value.abp_ratio, ""])
        path = self._csv("decompose", ["r", "sup_w", "A_r", "abp_ratio", "flag"], rows)
        if not rows or all(row[4] for row in rows):
            return StatementOutcome("decompose", "precondition", "no admissible scales", path)
        finite = [v for v in ratios if np.isfinite(v)]
        detail = f"max ABP ratio {max(finite)!r}" if finite else "empty complement at every scale"
        return StatementOutcome("decompose", "report", detail, path)


