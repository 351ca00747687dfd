"""Second-order parabolic polynomials, the approximation ladder P_k and the
decomposition diagnostics built on top of it.

Polynomials store the Hessian: P(x, t) = a0 + b0·x + ½⟨M0 x, x⟩ + c0·t.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .elliptic_ops import Operator, SymMatrix, eval_f
from .errors import PreconditionError, RegionError, SolverError
from .fb_solver import SolveParams, SolveResult, interface_distance, rescale_result, solve_dirichlet
from .grid_field import (
    ParabolicCylinder,
    ScalarField,
    SpaceTimeGrid,
    cell_weights,
    cylinder_nodes,
    field_differentials,
    interpolate,
    measure,
    q1_grid,
    rescale_field,
    sup_norm,
)

logger = logging.getLogger(__name__)

COMPATIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class ParabolicPolynomial:
    """P(x, t) = a0 + b0·x + ½⟨M0 x, x⟩ + c0·t."""
    a0: float
    b0: tuple[float, ...]
    M0: SymMatrix
    c0: float

    @classmethod
    def zero(cls, n: int) -> 'ParabolicPolynomial':
        return cls(0.0, (0.0,) * n, SymMatrix.zeros(n), 0.0)

    @property
    def n(self) -> int:
        return self.M0.n

    @property
    def hessian(self) -> np.ndarray:
        return self.M0.to_array()

    def evaluate(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = self.hessian
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, m, x)
        return self.a0 + x @ np.asarray(self.b0) + quad + self.c0 * np.asarray(t, dtype=float)

    def field(self, grid: SpaceTimeGrid) -> ScalarField:
        return ScalarField.from_function(grid, self.evaluate)

    def tilde_norm(self) -> float:
        """|P̃| = Euclidean norm of (M0, c0) in ℝ^{n²+1}."""
        return float(math.sqrt(float(np.sum(self.hessian ** 2)) + self.c0 ** 2))

    def residual(self, op: Operator) -> float:
        """H(P) = F(M0) - c0."""
        return eval_f(op, self.hessian) - self.c0

    def is_compatible(self, op: Operator, tol: float = COMPATIBILITY_TOL) -> bool:
        return abs(self.residual(op)) <= tol

    def rescaled(self, r: float) -> 'ParabolicPolynomial':
        """P(r·y, r²·τ) / r²."""
        return ParabolicPolynomial(self.a0 / (r * r), tuple(b / r for b in self.b0), self.M0, self.c0)

    def add_scaled(self, step: 'ParabolicPolynomial', r: float) -> 'ParabolicPolynomial':
        """P(X) + r²·step(x/r, t/r²)."""
        return ParabolicPolynomial(
            a0=self.a0 + r * r * step.a0,
            b0=tuple(b + r * s for b, s in zip(self.b0, step.b0)),
            M0=SymMatrix.from_array(self.hessian + step.hessian),
            c0=self.c0 + step.c0,
        )

    def describe(self) -> str:
        return (f"a0={self.a0:.6g}, b0={[round(b, 6) for b in self.b0]}, "
                f"M0={self.hessian.round(6).tolist()}, c0={self.c0:.6g}")


def taylor2(v: ScalarField, x0=None, t0: float = 0.0) -> ParabolicPolynomial:
    """Second-order parabolic Taylor polynomial of v at the node nearest (x⁰, t⁰)."""
    grid = v.grid
    x0 = np.zeros(grid.n) if x0 is None else np.asarray(x0, dtype=float)
    node = grid.node_index(x0, t0)
    d = field_differentials(v)
    if not d.valid[node]:
        raise RegionError(f"Taylor expansion at node {node} needs an interior node above the first level")
    return ParabolicPolynomial(
        a0=float(v.values[node]),
        b0=tuple(float(g) for g in d.grad[node]),
        M0=SymMatrix.from_array(d.hess[node]),
        c0=float(d.ut[node]),
    )


def normalize(u: ScalarField, op: Operator, R: float) -> tuple[ScalarField, Operator]:
    """ũ(x, t) = u(x/R, t/R²) on u's grid with F_R(M) = F(R²M)/R².

    H_R(ũ) = H(u)/R² at corresponding points.

    Raises:
        ValueError: If R < 1
        RegionError: If (x/R, t/R²) leaves the grid (the time interval must contain 0)
    """
    if R < 1:
        raise ValueError(f"normalize needs R >= 1, got {R}")
    if R == 1:
        return u, op
    x, t = u.grid.coords()
    values = interpolate(u, x / R, t / (R * R))
    return ScalarField(u.grid, values), op.with_dilation(R)


@dataclass
class LadderRow:
    k: int
    radius: float
    poly: ParabolicPolynomial
    error: float  # sup over Q_{ρ^k} of |u - P_k|

    @property
    def scaled_error(self) -> float:
        return self.error / self.radius ** 2


@dataclass
class LadderResult:
    """Polynomials P_0 = 0, P_1, ... and their errors on shrinking cylinders."""
    rho: float
    rows: list[LadderRow]
    k_max_requested: int
    truncated: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def fitted_C(self) -> float:
        return max((row.scaled_error for row in self.rows), default=0.0)

    def contraction_flags(self, slack: float = 1.5, floor: float = 1e-8) -> list[bool]:
        """e_{k+1} ≤ ρ²·e_k·slack (or below `floor`) for consecutive rows."""
        return [
            nxt.error <= max(self.rho ** 2 * cur.error * slack, floor)
            for cur, nxt in zip(self.rows, self.rows[1:])
        ]

    def member(self, radius: float) -> LadderRow:
        """Ladder row whose ρ^k is nearest to `radius` on a log scale."""
        k = int(round(math.log(radius) / math.log(self.rho)))
        k = min(max(k, 0), len(self.rows) - 1)
        return self.rows[k]

    def csv_columns(self) -> list[str]:
        return ["k", "rho_k", "e_k", "e_k_over_rho2k", "ptilde_norm"]

    def csv_rows(self) -> list[list]:
        return [[row.k, row.radius, row.error, row.scaled_error, row.poly.tilde_norm()] for row in self.rows]

    def to_text(self) -> str:
        lines = [
            f"rho: {self.rho!r}",
            f"levels: {len(self.rows)}",
            f"k_max_requested: {self.k_max_requested}",
            f"truncated: {self.truncated}",
            f"fitted_C: {self.fitted_C!r}",
            f"contraction: {all(self.contraction_flags())}",
        ]
        for row in self.rows:
            lines.append(f"P_{row.k}: {row.poly.describe()}")
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines)


def _check_unit_data(u: ScalarField) -> None:
    grid = u.grid
    origin = (0.0,) * grid.n
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder(origin, 0.0, 1.0))
    if sup_norm(u, interior | boundary) > 1.0 + 1e-12:
        raise PreconditionError(f"Ladder data must satisfy ‖u‖∞ ≤ 1 on Q₁, got {sup_norm(u, interior | boundary):.6g}")


def _cylinder_sup(u: ScalarField, poly: ParabolicPolynomial, radius: float) -> float:
    grid = u.grid
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder((0.0,) * grid.n, 0.0, radius))
    region = interior | boundary
    return sup_norm(u.values - poly.field(grid).values, region)


def resolution_limit(grid: SpaceTimeGrid, rho: float) -> int:
    """Largest k with ρ^k ≥ 4h (at least 8 nodes across Q_{ρ^k})."""
    return max(0, int(math.floor(math.log(4.0 * grid.h) / math.log(rho) + 1e-9)))


def half_cylinder_grid(n: int, h: float, kappa: float = 1.0) -> SpaceTimeGrid:
    """Grid on [-1/2, 1/2]ⁿ × [-1/4, 0], i.e. exactly Q_{1/2}(0)."""
    nx = 2 * int(round(0.5 / h)) + 1
    return SpaceTimeGrid.build(n, 0.5, max(nx, 5), -0.25, 0.0, kappa)


def ladder(
    u: ScalarField,
    op: Operator,
    rho: float = 0.5,
    k_max: Optional[int] = None,
    params: Optional[SolveParams] = None,
    kappa: float = 1.0,
) -> LadderResult:
    """Build P_0 = 0, P_1, ..., P_{k_max} by the inductive rescale-solve-expand step.

    Step k rescales u - P_k from Q_{ρ^k} to Q₁, solves F(D²v + M0(P_k)) - c0(P_k) - ∂ₜv = 0
    on Q_{1/2} with v = u_k on the parabolic boundary, expands v at the origin (the
    time coefficient projected so the step polynomial is operator-compatible), and
    adds it back at scale ρ^k.

    Args:
        u: Field on a grid containing Q₁(0) with ‖u‖∞ ≤ 1 there
        op: Operator F
        rho: Ladder ratio in (0, 1)
        k_max: Requested number of steps; clipped to the resolution limit
        params: Dirichlet solver parameters
        kappa: Time-step coupling of the step grids

    Returns:
        LadderResult; a solver failure truncates the ladder and is noted
    """
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    _check_unit_data(u)
    grid = u.grid
    limit = resolution_limit(grid, rho)
    requested = limit if k_max is None else k_max
    result = LadderResult(rho=rho, rows=[], k_max_requested=requested)
    if requested > limit:
        result.notes.append(f"k_max clipped from {requested} to resolution limit {limit}")
        logger.warning(f"Ladder k_max clipped from {requested} to {limit} (rho^k >= 4h)")
    k_top = min(requested, limit)

    region = ParabolicCylinder((0.0,) * grid.n, 0.0, 0.5)
    poly = ParabolicPolynomial.zero(grid.n)

    for k in range(k_top + 1):
        radius = rho ** k
        result.rows.append(LadderRow(k, radius, poly, _cylinder_sup(u, poly, radius)))
        if k == k_top:
            break
        # step grid spacing h/ρ^k puts every sample on a source node
        work = half_cylinder_grid(grid.n, grid.h / radius, kappa)
        u_k = rescale_field(u, np.zeros(grid.n), 0.0, radius, work) - poly.rescaled(radius).field(work)
        try:
            v_k = solve_dirichlet(op, region, u_k, source=poly.c0, params=params, hessian_shift=poly.hessian)
        except SolverError as e:
            result.truncated = True
            result.notes.append(f"solver failure at level {k}: {e}")
            logger.warning(f"Ladder truncated at level {k}: {e}")
            break
        step = taylor2(v_k)
        c_hat = eval_f(op, poly.hessian + step.hessian) - poly.c0
        step = ParabolicPolynomial(step.a0, step.b0, step.M0, c_hat)
        poly = poly.add_scaled(step, radius)
        logger.debug(f"Ladder level {k}: e={result.rows[-1].error:.3e}, P_{k + 1}: {poly.describe()}")

    return result


@dataclass
class BmoRow:
    radius: float
    k: int
    poly: ParabolicPolynomial
    sup: float

    @property
    def ratio(self) -> float:
        return self.sup / self.radius ** 2


def pointwise_bmo(u: ScalarField, op: Operator, radii: Sequence[float],
                  ladder_result: Optional[LadderResult] = None) -> list[BmoRow]:
    """sup_{Q_r}|u - P_r| / r² with P_r the ladder member at the snapped scale."""
    if ladder_result is None:
        ladder_result = ladder(u, op)
    rows = []
    for r in radii:
        member = ladder_result.member(r)
        rows.append(BmoRow(float(r), member.k, member.poly, _cylinder_sup(u, member.poly, r)))
    return rows


@dataclass
class LpBmoRow:
    k: int
    mean: float
    nodes: int
    excluded: int


def lp_bmo(u: ScalarField, ladder_result: LadderResult, p: float = 2.0,
           exclude_interface: bool = True) -> list[LpBmoRow]:
    """Weighted L^p mean of |D̃²u - D̃²P_k| over Q_{ρ^k/2} for every ladder member.

    Nodes within 2h of the interface between {u = 0} and {u ≠ 0} are excluded
    (and counted) when `exclude_interface` is set.
    """
    if not 1 <= p < math.inf:
        raise ValueError(f"p must lie in [1, inf), got {p}")
    grid = u.grid
    d = field_differentials(u)
    weights = cell_weights(grid)
    near = np.zeros(grid.shape, dtype=bool)
    if exclude_interface:
        near = interface_distance(u.values != 0.0, grid.h) < 2.0 * grid.h

    rows = []
    for row in ladder_result.rows:
        half = 0.5 * row.radius
        if half < grid.h:
            continue
        interior, boundary = cylinder_nodes(grid, ParabolicCylinder((0.0,) * grid.n, 0.0, half))
        region = (interior | boundary) & d.valid
        selected = region & ~near
        excluded = int((region & near).sum())
        if not selected.any():
            rows.append(LpBmoRow(row.k, float("nan"), 0, excluded))
            continue
        diff_h = d.hess[selected] - row.poly.hessian
        diff_t = d.ut[selected] - row.poly.c0
        dev = np.sqrt(np.sum(diff_h.reshape(diff_h.shape[0], -1) ** 2, axis=1) + diff_t ** 2)
        w = weights[selected]
        mean = float((np.sum(w * dev ** p) / np.sum(w)) ** (1.0 / p))
        rows.append(LpBmoRow(row.k, mean, int(selected.sum()), excluded))
    return rows


def _complement_count(result: SolveResult, radius: float, x0=None, t0: float = 0.0) -> int:
    grid = result.grid
    x0 = tuple(np.zeros(grid.n)) if x0 is None else tuple(np.atleast_1d(x0))
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder(x0, t0, radius))
    return int(((interior | boundary) & ~result.mask).sum())


def complement_measure(result: SolveResult, radius: float, x0=None, t0: float = 0.0) -> float:
    """|A_r|: complement of Ω in Q_r(X⁰), counted on source nodes and mapped to Q₁ units.

    Each source node stands for a cell of volume hⁿ·dt, which the parabolic
    rescaling turns into hⁿ·dt / r^{n+2}.
    """
    grid = result.grid
    return _complement_count(result, radius, x0, t0) * grid.h ** grid.n * grid.dt / radius ** (grid.n + 2)


def cylinder_measure(grid: SpaceTimeGrid, radius: float, x0=None, t0: float = 0.0) -> float:
    """|Q_r| counted the same way as `complement_measure`."""
    x0 = tuple(np.zeros(grid.n)) if x0 is None else tuple(np.atleast_1d(x0))
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder(x0, t0, radius))
    return int((interior | boundary).sum()) * grid.h ** grid.n * grid.dt / radius ** (grid.n + 2)


def rescaled_half_complement(result: SolveResult, radius: float) -> tuple[float, float]:
    """|A_r ∩ Q_{1/2}| counted on the scale-r image of the solution, and its shell.

    The mask is rescaled into Q₁ with spacing h/r and κ = dt/h², then cells are
    counted in Q_{1/2} of the rescaled grid. The second value is the measure of
    complement nodes on the discrete parabolic boundary of Q_{1/2}, the layer
    where the rescaled and direct counts may disagree.
    """
    grid = result.grid
    n = grid.n
    nx = max(int(round(2.0 * radius / grid.h)) + 1, 5)
    target = q1_grid(n, nx, kappa=grid.dt / grid.h ** 2)
    origin = (0.0,) * n
    scaled = rescale_result(result, np.zeros(n), 0.0, radius, target)
    interior, boundary = cylinder_nodes(target, ParabolicCylinder(origin, 0.0, 0.5))
    complement = ~scaled.mask
    cell = target.h ** n * target.dt
    return (float(((interior | boundary) & complement).sum()) * cell,
            float((boundary & complement).sum()) * cell)


@dataclass
class DensityRow:
    radius: float
    measure: float               # |A_r|
    half_measure: float          # |A_r ∩ Q_{1/2}|
    ptilde: float                # |P̃_r| (nan without a ladder)
    ratio: float                 # |A_{r/2}| / |A_r| (nan when not available)

    def decays(self, n: int) -> bool:
        return bool(np.isfinite(self.ratio) and self.ratio <= 1.0 / 2 ** (n + 1))


@dataclass
class DensityDecayReport:
    """Density of the complement of Ω on shrinking cylinders."""
    n: int
    rows: list[DensityRow]
    identity_errors: list[float]
    identity_tolerances: list[float] = field(default_factory=list)

    @property
    def identity_holds(self) -> bool:
        return all(err <= tol + 1e-12 for err, tol in zip(self.identity_errors, self.identity_tolerances))

    @property
    def threshold(self) -> Optional[float]:
        """Least |P̃_r| above which every row decays, or None when not observed."""
        rows = [r for r in self.rows if np.isfinite(r.ratio) and np.isfinite(r.ptilde)]
        candidates = sorted({r.ptilde for r in rows})
        for m in candidates:
            if all(r.decays(self.n) for r in rows if r.ptilde >= m):
                return m
        return None

    @property
    def branch(self) -> str:
        """Which side of the |P̃_r| dichotomy the observed sequence falls on."""
        m = self.threshold
        values = [r.ptilde for r in self.rows if np.isfinite(r.ptilde)]
        if m is None or not values:
            return "undetermined"
        tail = values[len(values) // 2:]
        return "liminf >= 3M" if min(tail) >= 3.0 * m else "liminf < 3M"

    def csv_columns(self) -> list[str]:
        return ["r", "A_r", "A_r_cap_Q_half", "ptilde_norm", "ratio", "decays"]

    def csv_rows(self) -> list[list]:
        return [[r.radius, r.measure, r.half_measure, r.ptilde, r.ratio, r.decays(self.n)] for r in self.rows]

    def to_text(self) -> str:
        threshold = self.threshold
        lines = [
            f"decay_factor: {1.0 / 2 ** (self.n + 1)!r}",
            f"identity_factor: {2 ** (self.n + 2)}",
            f"max_identity_error: {max(self.identity_errors, default=0.0)!r}",
            f"identity_holds: {self.identity_holds}",
            f"empirical_M: {'none observed' if threshold is None else repr(threshold)}",
            f"branch: {self.branch}",
        ]
        return "\n".join(lines)


def density_decay(result: SolveResult, radii: Sequence[float],
                  ladder_result: Optional[LadderResult] = None) -> DensityDecayReport:
    """|A_r|, |P̃_r| and the decay ratio |A_{r/2}| / |A_r| for each radius.

    Also records |A_{r/2}| - 2^{n+2}·|A_r ∩ Q_{1/2}| per row (the scaling identity):
    |A_{r/2}| is counted directly on the source grid, |A_r ∩ Q_{1/2}| on the
    rescaled mask. The tolerance per row is 2^{n+2} times the shell measure.
    """
    grid = result.grid
    n = grid.n
    factor = 2 ** (n + 2)
    rows, identity, tolerances = [], [], []
    for r in radii:
        a_r = complement_measure(result, r)
        a_half = ratio = float("nan")
        if 0.5 * r >= grid.h:
            a_half, shell = rescaled_half_complement(result, r)
            a_next = complement_measure(result, 0.5 * r)
            identity.append(abs(a_next - factor * a_half))
            tolerances.append(factor * shell)
            if a_r > 0:
                ratio = a_next / a_r
        ptilde = ladder_result.member(r).poly.tilde_norm() if ladder_result is not None else float("nan")
        rows.append(DensityRow(float(r), a_r, a_half, ptilde, ratio))
    return DensityDecayReport(n, rows, identity, tolerances)


@dataclass
class Decomposition:
    """u_r = P_r + v_r + w_r on Q₁."""
    v: ScalarField
    w: ScalarField
    sup_w: float
    complement: float  # |A_r|

    @property
    def abp_ratio(self) -> float:
        if self.complement <= 0:
            return float("nan")
        return self.sup_w / self.complement ** (1.0 / (self.v.grid.n + 1))


def decompose(result: SolveResult, poly: ParabolicPolynomial, op: Operator, r: float,
              nx: Optional[int] = None, params: Optional[SolveParams] = None, kappa: float = 1.0) -> Decomposition:
    """Split the rescaled field at the origin into polynomial, solved and remainder parts.

    v solves F(M0 + D²v) - c0 - ∂ₜv = 1 on Q₁ with v = u_r - P_r on ∂ₚQ₁; then
    w = u_r - P_r - v.
    """
    grid = result.grid
    if nx is None:
        nx = 2 * int(round(r / grid.h)) + 1
    work = SpaceTimeGrid.build(grid.n, 1.0, max(nx, 5), -1.0, 0.0, kappa)
    rescaled = rescale_result(result, np.zeros(grid.n), 0.0, r, work)
    p_r = poly.rescaled(r).field(work)
    data = rescaled.u - p_r
    q1 = ParabolicCylinder((0.0,) * grid.n, 0.0, 1.0)
    v = solve_dirichlet(op, q1, data, source=1.0 + poly.c0, params=params, hessian_shift=poly.hessian)
    w = data - v
    interior, boundary = cylinder_nodes(work, q1)
    body = interior | boundary
    return Decomposition(
        v=v,
        w=w,
        sup_w=sup_norm(w, body),
        complement=measure(work, body & ~rescaled.mask),
    )
