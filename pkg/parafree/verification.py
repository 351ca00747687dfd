"""Acceptance suite run by `parafree verify`.

Each criterion builds its own fixtures at desk scale (n=1: nx=257, n=2:
nx=129; `coarse` halves the resolution) and returns one CriterionResult with
the measured value next to the required one. Tolerances are stated in terms of
h so a coarser run is held to proportionally looser bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core.elliptic_ops import (
    Operator,
    eval_f,
    halfspace_gamma,
    pucci_brute_force,
    pucci_minus,
    pucci_plus,
    random_symmetric,
    validate,
)
from .core.fb_analysis import (
    blowup_fit,
    free_boundary_nodes,
    graph_fit,
    monotonicity_check,
    monotonicity_threshold,
    nondegeneracy,
    thickness,
    time_decay,
)
from .core.fb_solver import Mode, SolveParams, SolveResult, rescale_result, solve_free_boundary, verify_solution
from .core.fixtures import caloric_scale, exact_result, fixture_field, halfspace_direction
from .core.grid_field import SpaceTimeGrid, sup_norm
from .core.poly_ladder import ParabolicPolynomial, decompose, density_decay, ladder

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-10
SANDWICH_TOL = 1e-12
LADDER_KAPPA = 4.0


@dataclass
class CriterionResult:
    """One acceptance line: measured value against the requirement."""
    number: int
    name: str
    passed: bool
    measured: str
    required: str

    def to_string(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: measured {self.measured}; required {self.required}"


@dataclass(frozen=True)
class SuiteScale:
    """Grid resolution of the suite."""
    nx1: int = 257
    nx2: int = 129

    @classmethod
    def desk(cls, coarse: bool = False) -> 'SuiteScale':
        return cls(129, 65) if coarse else cls()

    @property
    def h1(self) -> float:
        return 2.0 / (self.nx1 - 1)

    @property
    def h2(self) -> float:
        return 2.0 / (self.nx2 - 1)


def linear_identity(n: int = 1) -> Operator:
    return Operator.linear(np.eye(n), 1.0, 1.0)


def operator_zoo() -> list[Operator]:
    """One operator of every shipped kind."""
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    family = [np.eye(2), np.diag([2.0, 1.0]), np.array([[1.5, 0.25], [0.25, 1.0]])]
    return [
        linear_identity(1),
        Operator.linear(a, 0.5, 2.5),
        Operator.bellman(family, 0.5, 2.5, "max"),
        Operator.bellman(family, 0.5, 2.5, "min"),
        Operator.pucci_plus(1.0, 2.0, 2),
        Operator.pucci_minus(0.5, 1.0, 2),
        Operator.pucci_plus(1.0, 2.0, 1),
    ]


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def check_operator_oracle(scale: SuiteScale) -> CriterionResult:
    rng = np.random.default_rng(0)
    worst = 0.0
    for n in (1, 2):
        mats = random_symmetric(rng, 1000, n)
        plus = pucci_plus(mats, 1.0, 2.0)
        minus = pucci_minus(mats, 1.0, 2.0)
        for m, p, q in zip(mats, plus, minus):
            lo, hi = pucci_brute_force(m, 1.0, 2.0, 50)
            worst = max(worst, abs(hi - p), abs(lo - q))

    margins = []
    for op in operator_zoo():
        report = validate(op, 1000, seed=1)
        margins.append(report.check("H1").margin)
        if not report.check("H0").passed:
            margins.append(-math.inf)
    margin = min(margins)
    return CriterionResult(
        1, "Pucci closed form vs brute force and the Pucci sandwich",
        worst <= ORACLE_TOL and margin >= -SANDWICH_TOL,
        f"max |closed - brute| = {worst:.3e}, min sandwich margin = {margin:.3e}",
        f"<= {ORACLE_TOL:g} and >= -{SANDWICH_TOL:g}",
    )


def check_halfspace_gamma(scale: SuiteScale) -> CriterionResult:
    e1 = np.array([1.0, 0.0])
    cases = [
        (linear_identity(1), np.array([1.0]), 1.0),
        (Operator.pucci_plus(1.0, 2.0, 2), e1, 0.5),
        (Operator.pucci_minus(0.5, 1.0, 2), e1, 2.0),
    ]
    worst = max(abs(halfspace_gamma(op, e) - expected) for op, e, expected in cases)

    in_range = True
    for op in operator_zoo():
        for tilt in (0.0, 30.0, 90.0):
            if op.n == 1 and tilt != 0.0:
                continue
            gamma = halfspace_gamma(op, halfspace_direction(op.n, tilt))
            in_range &= 1.0 / op.lambda1 - 1e-12 <= gamma <= 1.0 / op.lambda0 + 1e-12
    return CriterionResult(
        2, "half-space coefficient gamma",
        worst <= ORACLE_TOL and in_range,
        f"max |gamma - expected| = {worst:.3e}, all in [1/lambda1, 1/lambda0]: {in_range}",
        f"<= {ORACLE_TOL:g} and gamma in [1/lambda1, 1/lambda0]",
    )


def _preserved_halfspace(nx: int, op: Operator, horizon: float = 0.01) -> tuple[SolveResult, float]:
    grid = SpaceTimeGrid.build(1, 1.0, nx, -horizon, 0.0, 1.0)
    data = fixture_field(grid, op, "halfspace")
    result = solve_free_boundary(op, grid, data, data, Mode.A)
    return result, sup_norm(result.u - data)


def check_halfspace_preservation(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    coarse_result, dev_coarse = _preserved_halfspace(scale.nx1, op)
    fine_result, dev_fine = _preserved_halfspace(2 * scale.nx1 - 1, op)
    h = scale.h1
    # both deviations at rounding level means the discrete half-space is an exact fixed point
    exact = max(dev_coarse, dev_fine) <= 1e-12
    shrinks = exact or dev_coarse >= 3.0 * dev_fine
    passed = (coarse_result.converged and fine_result.converged
              and dev_coarse <= 10 * h * h and dev_fine <= 10 * (h / 2) ** 2 and shrinks)
    return CriterionResult(
        3, "stationary half-space preserved by the mode-A evolution",
        passed,
        f"sup deviation {dev_coarse:.3e} (h), {dev_fine:.3e} (h/2)",
        f"<= 10h^2 = {10 * h * h:.3e}, shrink factor >= 3 unless both <= 1e-12",
    )


def check_nonconvex_example(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -0.05, 0.0, 1.0)
    result = exact_result(grid, op, "nonconvex", Mode.B)
    report = verify_solution(result, op, SolveParams(K=10.0))
    decay = time_decay(result)
    band_sups = [v for _, v, count in decay.rows if count]
    no_decay = bool(band_sups) and min(band_sups) >= 1.9
    h = grid.h
    passed = report.omega_residual <= 10 * h * h and abs(report.complement_bound - 2.0) <= 1e-6 and no_decay
    return CriterionResult(
        4, "non-convex global solution solves the mode-B problem without time decay",
        passed,
        f"omega residual {report.omega_residual:.3e}, |D~2u| off Omega {report.complement_bound:.6g}, "
        f"min band sup|u_t| {min(band_sups) if band_sups else math.nan:.6g}",
        f"residual <= {10 * h * h:.3e}, |D~2u| = 2 off Omega, band sup|u_t| stays near 2",
    )


def _boundary_samples(result: SolveResult, levels: Sequence[int], count: int, margin: float) -> list[tuple]:
    grid = result.grid
    points = []
    for node in free_boundary_nodes(result, levels):
        x, t = grid.node_point(node)
        if np.all(np.abs(x) + margin <= grid.L):
            points.append((x, t))
    if len(points) <= count:
        return points
    picks = np.unique(np.linspace(0, len(points) - 1, count).round().astype(int))
    return [points[k] for k in picks]


def check_nondegeneracy(scale: SuiteScale) -> CriterionResult:
    radii = (1.0 / 16, 1.0 / 8, 1.0 / 4)
    worst = math.inf
    failures = 0
    checked = 0

    grid1 = SpaceTimeGrid.build(1, 1.0, scale.nx1, -0.07, 0.0, 1.0)
    op1 = linear_identity(1)
    stride = max(1, (grid1.nt - 1) // 8)
    levels = [m for m in range(0, grid1.nt, stride) if grid1.ts[m] - radii[-1] ** 2 >= grid1.t_start]
    cases = [
        (exact_result(grid1, op1, "halfspace", Mode.B), op1, levels),
        (exact_result(grid1, op1, "nonconvex", Mode.B), op1, levels),
    ]
    grid2 = SpaceTimeGrid.build(2, 1.0, scale.nx2, -0.07, 0.0, LADDER_KAPPA)
    op2 = Operator.pucci_plus(1.0, 2.0, 2)
    cases.append((exact_result(grid2, op2, "halfspace", Mode.B, tilt_deg=30.0), op2, [grid2.nt - 1]))

    for result, op, lv in cases:
        for x0, t0 in _boundary_samples(result, lv, 6, radii[-1]):
            for r in radii:
                value = nondegeneracy(result, x0, t0, r, op.lambda1)
                checked += 1
                failures += not value.passed
                worst = min(worst, value.margin)

    # 1D half-space at the origin: r²/2 against r²/3
    half = cases[0][0]
    closed = all(
        abs(v.lhs - r * r / 2) <= 1e-12 and abs(v.rhs - r * r / 3) <= 1e-12
        for r in radii
        for v in [nondegeneracy(half, [0.0], 0.0, r, 1.0)]
    )
    h = scale.h2
    return CriterionResult(
        5, "non-degeneracy at free-boundary points of mode-B fixtures",
        failures == 0 and checked > 0 and closed,
        f"{checked - failures}/{checked} rows pass, worst margin {worst:.3e}, closed form r^2/2 vs r^2/3: {closed}",
        f"margin >= -10h^2 (= {-10 * h * h:.3e} on the 2D grid)",
    )


def _ladder_distances(lad, op: Operator) -> list[float]:
    n = op.n
    s = caloric_scale(op)
    target_m = s * np.eye(n)
    target_c = s * eval_f(op, np.eye(n))
    return [math.sqrt(float(np.sum((row.poly.hessian - target_m) ** 2)) + (row.poly.c0 - target_c) ** 2)
            for row in lad.rows]


def check_polynomial_ladder(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -1.0, 0.0, LADDER_KAPPA)
    caloric = ladder(fixture_field(grid, op, "caloric"), op, 0.5, kappa=LADDER_KAPPA)
    bounded = all(row.error <= 1.5 * row.radius ** 2 for row in caloric.rows)
    dist = _ladder_distances(caloric, op)
    monotone = all(b <= a + 1e-9 for a, b in zip(dist, dist[1:]))

    fitted = []
    compatible = all(row.poly.is_compatible(op) for row in caloric.rows)
    for nx in (scale.nx1 // 2 + 1, scale.nx1):
        g = SpaceTimeGrid.build(1, 1.0, nx, -1.0, 0.0, LADDER_KAPPA)
        lad = ladder(fixture_field(g, op, "halfspace"), op, 0.5, kappa=LADDER_KAPPA)
        fitted.append(lad.fitted_C)
        compatible &= all(row.poly.is_compatible(op) for row in lad.rows)
    stable = 0.5 <= fitted[1] / fitted[0] <= 2.0 if fitted[0] > 0 else False
    passed = bounded and monotone and compatible and fitted[1] <= 1.0 and stable
    return CriterionResult(
        6, "polynomial approximation ladder",
        passed,
        f"caloric e_k <= 1.5 rho^2k: {bounded}, D~2P_k monotone: {monotone}, "
        f"half-space C = {fitted[1]:.4g} (2h: {fitted[0]:.4g}), |H(P_k)| <= 1e-10: {compatible}",
        "bounded, monotone, C <= 1 stable within 2x, compatible",
    )


def _thickness_scaling(result: SolveResult, r: float) -> float:
    grid = result.grid
    nx = 2 * int(round(r / grid.h)) + 1
    target = SpaceTimeGrid.build(grid.n, 1.0, nx, -1.0, 1.0, LADDER_KAPPA)
    origin = np.zeros(grid.n)
    rescaled = rescale_result(result, origin, 0.0, r, target)
    return abs(thickness(result, origin, 0.0, r).value - thickness(rescaled, origin, 0.0, 1.0).value)


def check_thickness(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -0.15, 0.15, LADDER_KAPPA)
    h = grid.h
    radii = (0.25, 0.125)
    fixtures = {
        "halfspace": exact_result(grid, op, "halfspace", Mode.A),
        "polynomial": exact_result(grid, op, "polynomial", Mode.A),
        "caloric": exact_result(grid, op, "caloric", Mode.A),
        "nonconvex": exact_result(grid, op, "nonconvex", Mode.B),
        "ramp": exact_result(grid, op, "ramp", Mode.A, sigma=0.0),
    }
    half_err = max(abs(thickness(fixtures["halfspace"], [0.0], 0.0, r).value - 1.0) - 2 * h / r for r in radii)
    poly_zero = all(thickness(fixtures["polynomial"], [0.0], 0.0, r).value == 0.0 for r in radii)

    scaling_excess = max(_thickness_scaling(result, r) - 4 * h / r for result in fixtures.values() for r in radii)

    grid2 = SpaceTimeGrid.build(2, 1.0, scale.nx2, -0.07, 0.07, LADDER_KAPPA)
    tilted = exact_result(grid2, Operator.pucci_plus(1.0, 2.0, 2), "halfspace", Mode.A, tilt_deg=30.0)
    r2 = 0.25
    half_err = max(half_err, abs(thickness(tilted, [0.0, 0.0], 0.0, r2).value - 1.0) - 2 * grid2.h / r2)
    scaling_excess = max(scaling_excess, _thickness_scaling(tilted, r2) - 4 * grid2.h / r2)

    return CriterionResult(
        7, "thickness of the coincidence set",
        half_err <= 0.0 and poly_zero and scaling_excess <= 0.0,
        f"half-space excess over 2h/r {half_err:.3e}, delta_r(P2) == 0: {poly_zero}, "
        f"scaling excess over 4h/r {scaling_excess:.3e}",
        "half-space delta_r = 1 +- 2h/r, P2 exactly 0, scaling identity within 4h/r",
    )


def check_monotonicity(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -1.0, 0.0, LADDER_KAPPA)
    h = grid.h
    e = [1.0, 0.0]
    threshold_exact = monotonicity_threshold(1, 1.0) == 1.0 / 12.0
    fixtures = [
        exact_result(grid, op, "halfspace", Mode.A),
        exact_result(grid, op, "caloric", Mode.A),
        exact_result(grid, op, "polynomial", Mode.A),
        exact_result(grid, op, "nonconvex", Mode.B),
        exact_result(grid, op, "ramp", Mode.A, sigma=-0.5),
    ]
    held = 0
    implications = True
    for result in fixtures:
        value = monotonicity_check(result, e, 1.0, op.lambda1)
        held += value.hypothesis_holds
        implications &= value.hypothesis_holds <= (value.m2 >= -10 * h * h)

    counter = monotonicity_check(fixtures[0], e, 0.0, op.lambda1)
    counter_ok = (not counter.hypothesis_holds and not counter.conclusion_holds
                  and abs(counter.m2 + 0.125) <= 10 * h * h)
    return CriterionResult(
        8, "directional monotonicity",
        threshold_exact and held > 0 and implications and counter_ok,
        f"threshold 1/12 exact: {threshold_exact}, hypothesis held on {held}/{len(fixtures)} fixtures, "
        f"implication: {implications}, C0=0 counter-case m2 = {counter.m2:.6g}",
        "conclusion wherever the hypothesis holds; counter-case fails both with m2 = -1/8 +- 10h^2",
    )


def check_blowup(scale: SuiteScale) -> CriterionResult:
    h = scale.h1
    radii = [32 * h, 16 * h, 8 * h]
    horizon = 0.3 * radii[0] ** 2
    details = []
    passed = True
    for op in (linear_identity(1), Operator.pucci_plus(1.0, 2.0, 1)):
        grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -horizon, 0.0, 1.0)
        data = fixture_field(grid, op, "halfspace")
        result = solve_free_boundary(op, grid, data, data, Mode.A)
        nodes = free_boundary_nodes(result, [grid.nt - 1])
        if not result.converged or not nodes:
            passed = False
            details.append(f"{op.kind.value}: no converged free boundary")
            continue
        for node in nodes:
            x0, t0 = grid.node_point(node)
            fit = blowup_fit(result, op, x0, t0, radii)
            finest = fit.rows[-1]
            slopes = graph_fit(result, x0, t0, radii)
            gamma_err = abs(finest.gamma - fit.gamma_reference) / fit.gamma_reference
            ok = (fit.residuals_decreasing and gamma_err <= 0.1 and finest.m_hat <= 10 * h
                  and slopes.c1_indicator)
            passed &= ok
            details.append(f"{op.kind.value}: gamma err {gamma_err:.2e}, residual {finest.residual:.2e}, "
                           f"m_hat {finest.m_hat:.2e}, C1 {slopes.c1_indicator}")
    return CriterionResult(
        9, "half-space blow-ups and C1 graph slopes of solved fields",
        passed,
        "; ".join(details),
        f"residuals decreasing, gamma within 10%, m_hat <= 10h = {10 * h:.3e}, slopes non-increasing",
    )


def check_density(scale: SuiteScale) -> CriterionResult:
    op = linear_identity(1)
    grid = SpaceTimeGrid.build(1, 1.0, scale.nx1, -1.0, 0.0, LADDER_KAPPA)
    # time steps that do not map onto each other under the scale-r map
    skewed = SpaceTimeGrid.build(1, 1.0, scale.nx1, -1.0, 0.0, 0.825 * LADDER_KAPPA)
    radii = (0.5, 0.25, 0.125)
    masks = [
        exact_result(grid, op, "halfspace", Mode.A),
        exact_result(grid, op, "nonconvex", Mode.B),
        exact_result(grid, op, "caloric", Mode.A),
        exact_result(grid, op, "ramp", Mode.A, sigma=-0.5),
        exact_result(skewed, op, "halfspace", Mode.A),
    ]
    identity_ok = True
    worst = 0.0
    for result in masks:
        report = density_decay(result, radii)
        worst = max(worst, max(report.identity_errors, default=0.0))
        identity_ok &= report.identity_holds

    source = SpaceTimeGrid.build(1, 1.0, scale.nx1, -0.25, 0.0, LADDER_KAPPA)
    half = exact_result(source, op, "halfspace", Mode.A)
    zero = ParabolicPolynomial.zero(1)
    work = scale.nx1 // 4 + 1
    ratios = [decompose(half, zero, op, 0.5, nx=nx, kappa=LADDER_KAPPA).abp_ratio for nx in (work, 2 * work - 1)]
    stable = all(np.isfinite(ratios)) and abs(ratios[1] / ratios[0] - 1.0) <= 0.2
    return CriterionResult(
        10, "complement density scaling identity and ABP ratio",
        identity_ok and stable,
        f"max identity error {worst:.3e}, ABP ratio {ratios[0]:.4g} (h) vs {ratios[1]:.4g} (h/2)",
        "identity within the parabolic-boundary shell of Q_{1/2}, ABP ratio within +-20% under h -> h/2",
    )


CRITERIA: list[Callable[[SuiteScale], CriterionResult]] = [
    check_operator_oracle,
    check_halfspace_gamma,
    check_halfspace_preservation,
    check_nonconvex_example,
    check_nondegeneracy,
    check_polynomial_ladder,
    check_thickness,
    check_monotonicity,
    check_blowup,
    check_density,
]


def run_suite(coarse: bool = False, only: Optional[Sequence[int]] = None,
              echo: Optional[Callable[[str], None]] = None) -> list[CriterionResult]:
    """Run the acceptance criteria in order.

    Args:
        coarse: Halve the resolution (tolerances scale with h)
        only: Criterion numbers to run (default: all)
        echo: Called with each result line as soon as it is available

    Returns:
        One CriterionResult per criterion run; unexpected errors count as failures
    """
    scale = SuiteScale.desk(coarse)
    results = []
    for number, check in enumerate(CRITERIA, start=1):
        if only and number not in only:
            continue
        try:
            result = check(scale)
        except Exception as e:
            logger.exception(f"Criterion {number} raised")
            result = CriterionResult(number, check.__name__.removeprefix("check_").replace("_", " "),
                                     False, f"error: {type(e).__name__}: {e}", "no error")
        results.append(result)
        if echo is not None:
            echo(result.to_string())
    return results
