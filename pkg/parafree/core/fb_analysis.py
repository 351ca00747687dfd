"""Free-boundary geometry and estimators on solved fields.

This module provides:
1. Minimal diameter of point sets and the thickness δ_r of the coincidence set
2. Non-degeneracy and quadratic growth measurements
3. Decay of ∂ₜu toward the free boundary and directional monotonicity
4. Blow-up fits against half-space profiles and the C¹-graph slope indicator
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .elliptic_ops import Operator, halfspace_gamma
from .errors import PreconditionError, RegionError
from .fb_solver import Mode, SolveResult, interface_distance
from .grid_field import (
    ParabolicCylinder,
    SpaceTimeGrid,
    cylinder_nodes,
    field_differentials,
    rescale_field,
    space_distance,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DIRECTIONS_2D = 720


def map_points(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Evaluate an estimator over points, in order, on up to `workers` threads."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def minimal_diameter(points) -> float:
    """Smallest distance between two parallel hyperplanes enclosing the points.

    1D: max - min. 2D: minimal hull width over hull-edge normals (rotating
    calipers). Empty and collinear sets give 0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] == 1:
        return float(pts[:, 0].max() - pts[:, 0].min())
    if pts.shape[1] != 2:
        raise ValueError(f"minimal_diameter supports n <= 2, got points of dimension {pts.shape[1]}")

    pts = np.unique(pts, axis=0)
    if len(pts) < 3:
        return 0.0
    centered = pts - pts.mean(axis=0)
    scale = float(np.abs(centered).max())
    if scale == 0.0 or np.linalg.svd(centered, compute_uv=False)[-1] <= 1e-12 * scale * math.sqrt(len(pts)):
        return 0.0
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return 0.0
    vertices = pts[hull.vertices]
    edges = np.roll(vertices, -1, axis=0) - vertices
    lengths = np.linalg.norm(edges, axis=1)
    edges = edges[lengths > 0] / lengths[lengths > 0, None]
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    proj = vertices @ normals.T
    widths = proj.max(axis=0) - proj.min(axis=0)
    return float(widths.min())


def _check_ball(grid: SpaceTimeGrid, x0: np.ndarray, r: float) -> None:
    if np.any(np.abs(x0) + r > grid.L + 1e-9 * grid.h):
        raise RegionError(f"Ball B_{r}({x0.tolist()}) exceeds the spatial box [-{grid.L}, {grid.L}]")


def _as_point(grid: SpaceTimeGrid, x0) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != grid.n:
        raise ValueError(f"Point has {x0.size} spatial components, grid has n={grid.n}")
    return x0


@dataclass
class ThicknessValue:
    value: float
    t_slice: float


def thickness(result: SolveResult, x0, t0: float, r: float) -> ThicknessValue:
    """δ_r = inf over t ∈ [t⁰ - r², t⁰ + r²] of MD(Λ ∩ B_r(x⁰) × {t}) / r.

    Raises:
        RegionError: If the two-sided window or the ball leaves the grid (the
            message names the truncated side)
    """
    grid = result.grid
    x0 = _as_point(grid, x0)
    _check_ball(grid, x0, r)
    eps_t = 1e-9 * max(grid.dt, grid.h ** 2)
    if t0 - r * r < grid.t_start - eps_t:
        raise RegionError(f"Thickness window bottom t={t0 - r * r:.6g} precedes grid start {grid.t_start}")
    if t0 + r * r > grid.t_end + eps_t:
        raise RegionError(f"Thickness window top t={t0 + r * r:.6g} exceeds grid end {grid.t_end}")

    coords = grid.space_coords().reshape(-1, grid.n)
    inside = (space_distance(grid, x0) <= r + 1e-9 * grid.h).ravel()
    ts = grid.ts
    levels = np.flatnonzero((ts >= t0 - r * r - eps_t) & (ts <= t0 + r * r + eps_t))
    best = ThicknessValue(math.inf, float("nan"))
    for m in levels:
        coincidence = inside & ~result.mask[m].ravel()
        value = minimal_diameter(coords[coincidence] - x0) / r
        if value < best.value:
            best = ThicknessValue(value, float(ts[m]))
    if not math.isfinite(best.value):
        best = ThicknessValue(0.0, float(t0))
    return best


@dataclass
class ThicknessReport:
    """δ_r at sampled free-boundary points against a threshold ε.

    Rows whose window or ball leaves the grid carry a non-empty flag, a NaN
    value, and are left out of the minimum.
    """
    epsilon: float
    rows: list[tuple[tuple[float, ...], float, float, float, str]]  # (x⁰ + (t⁰,), r, δ_r, t_slice, flag)

    @property
    def admissible(self) -> list[float]:
        return [row[2] for row in self.rows if not row[4]]

    @property
    def minimum(self) -> float:
        return min(self.admissible, default=math.nan)

    @property
    def passed(self) -> bool:
        values = self.admissible
        return bool(values) and all(v > self.epsilon for v in values)

    def csv_columns(self) -> list[str]:
        return ["point", "r", "delta_r", "t_slice", "flag"]

    def csv_rows(self) -> list[list]:
        return [[" ".join(repr(v) for v in row[0]), row[1], row[2], row[3], row[4]] for row in self.rows]


def thickness_report(result: SolveResult, points: Sequence[tuple], radii: Sequence[float],
                     epsilon: float, workers: int = 1, flag_regions: bool = False) -> ThicknessReport:
    """Evaluate δ_r(u, z) > ε for sampled free-boundary points z = (x, t) and radii r.

    Args:
        flag_regions: Record RegionError rows as flagged instead of raising
    """
    def one(point):
        *x, t = point
        label = tuple(float(v) for v in point)
        out = []
        for r in radii:
            try:
                value = thickness(result, x, t, r)
            except RegionError as e:
                if not flag_regions:
                    raise
                out.append((label, float(r), math.nan, math.nan, f"RegionError: {e}"))
                continue
            out.append((label, float(r), value.value, value.t_slice, ""))
        return out

    rows = [row for chunk in map_points(one, points, workers) for row in chunk]
    return ThicknessReport(epsilon, rows)


# ---------------------------------------------------------------------------
# Free-boundary points
# ---------------------------------------------------------------------------

def _neighbour_differs(level: np.ndarray) -> np.ndarray:
    out = np.zeros(level.shape, dtype=bool)
    for axis in range(level.ndim):
        diff = np.diff(level, axis=axis) != 0
        lead = [slice(None)] * level.ndim
        trail = [slice(None)] * level.ndim
        lead[axis] = slice(0, -1)
        trail[axis] = slice(1, None)
        out[tuple(lead)] |= diff
        out[tuple(trail)] |= diff
    return out


def free_boundary_nodes(result: SolveResult, levels: Optional[Sequence[int]] = None) -> list[tuple[int, ...]]:
    """Λ nodes with an Ω neighbour in space (grid points of ∂Ω ⊂ closure(Ω))."""
    grid = result.grid
    levels = range(grid.nt) if levels is None else levels
    nodes = []
    for m in levels:
        level = result.mask[m]
        hits = _neighbour_differs(level) & ~level
        nodes.extend((m,) + tuple(int(i) for i in idx) for idx in np.argwhere(hits))
    return nodes


def boundary_points(result: SolveResult) -> np.ndarray:
    """∂Ω as cell-interface midpoints of the mask, rows (x₁[, x₂], t).

    Spatial neighbours give (x_mid, t); time neighbours give (x, t_mid).
    """
    grid = result.grid
    coords = grid.space_coords()
    ts = grid.ts
    mask = result.mask
    chunks = []
    for axis in range(grid.n):
        a = [slice(None)] * (grid.n + 1)
        b = [slice(None)] * (grid.n + 1)
        a[axis + 1] = slice(0, -1)
        b[axis + 1] = slice(1, None)
        hits = np.argwhere(mask[tuple(a)] != mask[tuple(b)])
        if hits.size:
            m = hits[:, 0]
            idx = tuple(hits[:, 1 + k] for k in range(grid.n))
            x = coords[idx].copy()
            x[:, axis] += 0.5 * grid.h
            chunks.append(np.column_stack([x, ts[m]]))
    if grid.nt > 1:
        hits = np.argwhere(mask[1:] != mask[:-1])
        if hits.size:
            m = hits[:, 0]
            idx = tuple(hits[:, 1 + k] for k in range(grid.n))
            chunks.append(np.column_stack([coords[idx], 0.5 * (ts[m] + ts[m + 1])]))
    if not chunks:
        return np.zeros((0, grid.n + 1))
    return np.concatenate(chunks, axis=0)


def _in_closure(result: SolveResult, node: tuple[int, ...]) -> bool:
    m, *idx = node
    level = result.mask[m]
    window = tuple(slice(max(i - 1, 0), i + 2) for i in idx)
    return bool(level[window].any())


def _on_free_boundary(result: SolveResult, node: tuple[int, ...]) -> bool:
    m, *idx = node
    level = result.mask[m]
    window = tuple(slice(max(i - 1, 0), i + 2) for i in idx)
    patch = level[window]
    return bool(patch.any() and not patch.all())


def point_gradient(level: np.ndarray, idx: Sequence[int], h: float) -> np.ndarray:
    """∇u at a node: mean of the second-order forward and backward one-sided differences.

    Exact on functions that are quadratic on each side of the node, which is
    the shape of C^{1,1} solutions across a free boundary through the node.
    Falls back to centered differences where two nodes per side are not available.
    """
    idx = list(idx)
    grad = np.zeros(len(idx))
    for axis in range(len(idx)):
        def at(offset: int) -> float:
            k = list(idx)
            k[axis] += offset
            return float(level[tuple(k)])

        i, size = idx[axis], level.shape[axis]
        if 2 <= i <= size - 3:
            forward = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            backward = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            grad[axis] = 0.5 * (forward + backward)
        elif 1 <= i <= size - 2:
            grad[axis] = (at(1) - at(-1)) / (2.0 * h)
        else:
            raise RegionError(f"Gradient at node {tuple(idx)} needs spatial neighbours")
    return grad


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

@dataclass
class NondegeneracyResult:
    lhs: float
    rhs: float
    passed: bool
    margin: float
    barrier_boundary_max: float
    barrier_sup: float


def nondegeneracy(result: SolveResult, x0, t0: float, r: float, lambda1: float) -> NondegeneracyResult:
    """max_{∂ₚQ_r(X⁰)} u against u(X⁰) + r²/(2nλ₁ + 1), with 10h² slack.

    Also reports the barrier v = u - (|x - x⁰|² - (t - t⁰))/(2nλ₁ + 1):
    its maximum over ∂ₚQ_r and its supremum over Q_r.

    Raises:
        PreconditionError: If the result is not mode B or X⁰ is not in the closure of Ω
        RegionError: If Q_r(X⁰) leaves the grid
    """
    if result.mode != Mode.B:
        raise PreconditionError("Non-degeneracy is stated for Ω ⊃ {∇u ≠ 0} (mode B results only)")
    grid = result.grid
    x0 = _as_point(grid, x0)
    node = grid.node_index(x0, t0)
    if not _in_closure(result, node):
        raise PreconditionError(f"X⁰ = ({x0.tolist()}, {t0}) is not in the closure of Ω")

    interior, boundary = cylinder_nodes(grid, ParabolicCylinder(tuple(x0), t0, r))
    u = result.u.values
    denom = 2.0 * grid.n * lambda1 + 1.0
    lhs = float(u[boundary].max())
    rhs = float(u[node]) + r * r / denom
    margin = lhs - rhs
    passed = margin >= -10.0 * grid.h ** 2

    x, t = grid.coords()
    dist2 = np.sum((x - x0) ** 2, axis=-1)
    v = u - (dist2 - (t - t0)) / denom
    return NondegeneracyResult(lhs, rhs, bool(passed), margin,
                               float(v[boundary].max()), float(v[interior | boundary].max()))


@dataclass
class RegularityReport:
    """Scaled quadratic growth S(r) and the measured bound on |D̃²u|."""
    x0: tuple[float, ...]
    t0: float
    rows: list[tuple[float, float]]  # (r, S(r))
    d2_sup: float
    band_excluded: int
    K: float
    notes: list[str] = field(default_factory=list)

    @property
    def c_bar(self) -> float:
        return max((s for _, s in self.rows), default=math.nan)

    def csv_columns(self) -> list[str]:
        return ["r", "S_r"]

    def csv_rows(self) -> list[list]:
        return [[r, s] for r, s in self.rows]

    def to_text(self) -> str:
        lines = [
            f"point: {list(self.x0) + [self.t0]}",
            f"empirical_C_bar: {self.c_bar!r}",
            f"d2_sup: {self.d2_sup!r}",
            f"d2_within_K: {self.d2_sup <= self.K}",
            f"band_excluded_nodes: {self.band_excluded}",
        ]
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines)


def quadratic_growth(result: SolveResult, x0, t0: float, radii: Sequence[float], K: float = 10.0) -> RegularityReport:
    """S(r) = sup_{Q_r(X⁰)} |u - u(X⁰) - ∇u(X⁰)·(x - x⁰)| / r², plus sup |D̃²u| on Q_{1/2}(X⁰)."""
    grid = result.grid
    x0 = _as_point(grid, x0)
    node = grid.node_index(x0, t0)
    m, *idx = node
    u = result.u.values
    grad = point_gradient(u[m], idx, grid.h)
    x, _ = grid.coords()
    affine = u - float(u[node]) - (x - x0) @ grad

    rows = []
    for r in radii:
        interior, boundary = cylinder_nodes(grid, ParabolicCylinder(tuple(x0), t0, r))
        rows.append((float(r), float(np.abs(affine[interior | boundary]).max()) / (r * r)))

    notes = []
    d = field_differentials(result.u)
    near = interface_distance(result.mask, grid.h) < 2.0 * grid.h
    try:
        interior, boundary = cylinder_nodes(grid, ParabolicCylinder(tuple(x0), t0, 0.5))
        region = (interior | boundary) & d.valid
    except RegionError:
        region = d.valid
        notes.append("Q_1/2(X0) leaves the grid; |D~2u| measured on all valid nodes")
    selected = region & ~near
    excluded = int((region & near).sum())
    d2 = 0.0
    if selected.any():
        hess = np.abs(d.hess[selected]).reshape(int(selected.sum()), -1).max(axis=1)
        d2 = float(np.max(np.maximum(hess, np.abs(d.ut[selected]))))
    if excluded:
        notes.append(f"{excluded} nodes within 2h of the free boundary excluded")
    return RegularityReport(tuple(x0.tolist()), float(t0), rows, d2, excluded, K, notes)


@dataclass
class TimeDecayReport:
    rows: list[tuple[float, float, int]]  # (d, sup |∂ₜu| over dist ∈ [d, 2d), nodes)
    notes: list[str] = field(default_factory=list)

    @property
    def decays(self) -> bool:
        values = [v for _, v, count in self.rows if count]
        return bool(values) and values[-1] <= values[0]

    def csv_columns(self) -> list[str]:
        return ["d", "sup_abs_ut", "nodes"]

    def csv_rows(self) -> list[list]:
        return [list(row) for row in self.rows]


def time_decay(result: SolveResult) -> TimeDecayReport:
    """sup |∂ₜu| over Ω nodes in dyadic distance bands [d, 2d) from ∂Ω, d = 2h, 4h, ..."""
    grid = result.grid
    d = field_differentials(result.u)
    dist = interface_distance(result.mask, grid.h)
    omega = result.mask & d.valid & np.isfinite(dist)
    if not omega.any():
        return TimeDecayReport([], ["empty free boundary: no bands"])
    far = float(dist[omega].max())
    rows = []
    band = 2.0 * grid.h
    while band <= far:
        sel = omega & (dist >= band - 1e-9 * grid.h) & (dist < 2.0 * band - 1e-9 * grid.h)
        count = int(sel.sum())
        value = float(np.abs(d.ut[sel]).max()) if count else math.nan
        rows.append((band, value, count))
        band *= 2.0
    return TimeDecayReport(rows)


@dataclass
class MonotonicityResult:
    m1: float
    m2: float
    threshold: float
    hypothesis_holds: bool
    conclusion_holds: bool

    @property
    def implication_holds(self) -> bool:
        return (not self.hypothesis_holds) or self.conclusion_holds


def monotonicity_threshold(n: int, lambda1: float) -> float:
    return 1.0 / (4.0 * (2.0 * n * lambda1 + 1.0))


def monotonicity_check(result: SolveResult, e, C0: float, lambda1: float,
                       x0=None, t0: Optional[float] = None, radius: float = 1.0) -> MonotonicityResult:
    """Minima of C₀∂ₑu - u over Q_R(X⁰) and Q_{R/2}(X⁰) with e = (e_x, e_t) a unit vector.

    X⁰ defaults to (0, t_end).

    Raises:
        ValueError: If |e| != 1
        RegionError: If Q_R(X⁰) leaves the grid
    """
    grid = result.grid
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.size != grid.n + 1 or abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError(f"e must be a unit vector in R^{grid.n + 1}, got {e.tolist()}")
    x0 = np.zeros(grid.n) if x0 is None else _as_point(grid, x0)
    t0 = grid.t_end if t0 is None else t0

    d = field_differentials(result.u)
    directional = d.grad @ e[:-1] + e[-1] * d.ut
    expr = C0 * directional - result.u.values

    def region_min(r: float) -> float:
        interior, boundary = cylinder_nodes(grid, ParabolicCylinder(tuple(x0), t0, r))
        sel = (interior | boundary) & d.valid
        return float(expr[sel].min()) if sel.any() else math.nan

    m1 = region_min(radius)
    m2 = region_min(0.5 * radius)
    threshold = monotonicity_threshold(grid.n, lambda1)
    return MonotonicityResult(
        m1=m1,
        m2=m2,
        threshold=threshold,
        hypothesis_holds=bool(m1 >= -threshold),
        conclusion_holds=bool(m2 >= -10.0 * grid.h ** 2),
    )


# ---------------------------------------------------------------------------
# Blow-ups and graph slopes
# ---------------------------------------------------------------------------

def direction_net(n: int, count: int = DIRECTIONS_2D) -> np.ndarray:
    """Unit spatial directions: ±1 in 1D, `count` equally spaced angles in 2D."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def blowup_target(n: int) -> SpaceTimeGrid:
    """Q_{1/2}(0) at 65 (1D) or 33 (2D) nodes per axis, κ = 1."""
    return SpaceTimeGrid.build(n, 0.5, 65 if n == 1 else 33, -0.25, 0.0, 1.0)


@dataclass
class BlowupRow:
    r: float
    e: tuple[float, ...]
    gamma: float
    residual: float
    m_hat: float


@dataclass
class BlowupFit:
    """Half-space fits γ[(x·e)₊]²/2 to the blow-ups at X⁰."""
    x0: tuple[float, ...]
    t0: float
    rows: list[BlowupRow]
    gamma_reference: float
    h: float = 0.0

    @property
    def e(self) -> tuple[float, ...]:
        return self.rows[-1].e

    @property
    def residuals_decreasing(self) -> bool:
        """Residuals non-increasing as r shrinks, up to the sampling error 4(h/r)² of row r."""
        return all(b.residual <= a.residual + 4.0 * (self.h / b.r) ** 2 + 1e-12
                   for a, b in zip(self.rows, self.rows[1:]))

    def csv_columns(self) -> list[str]:
        return ["r", "e", "gamma", "gamma_reference", "residual", "m_hat"]

    def csv_rows(self) -> list[list]:
        return [[row.r, " ".join(repr(v) for v in row.e), row.gamma, self.gamma_reference, row.residual, row.m_hat]
                for row in self.rows]


def blowup_fit(result: SolveResult, op: Operator, x0, t0: float, radii: Sequence[float]) -> BlowupFit:
    """Fit half-space profiles to [u(x⁰+ry, t⁰+r²τ) - u(X⁰) - r∇u(X⁰)·y]/r² on Q_{1/2}.

    Raises:
        PreconditionError: If X⁰ is not on ∂Ω, Λ is thin at X⁰ (width below h in
            B_r for the smallest r), radii are not decreasing or some r < 8h
    """
    grid = result.grid
    x0 = _as_point(grid, x0)
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("blowup_fit needs at least one radius")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError(f"Blow-up radii must be decreasing, got {radii}")
    if min(radii) < 8.0 * grid.h:
        raise PreconditionError(f"Radius {min(radii)} is below resolution 8h = {8.0 * grid.h}")
    node = grid.node_index(x0, t0)
    if not _on_free_boundary(result, node):
        raise PreconditionError(f"X⁰ = ({x0.tolist()}, {t0}) is not on the free boundary")

    m, *idx = node
    coincidence = (space_distance(grid, x0) <= radii[-1] + 1e-9 * grid.h) & ~result.mask[m]
    width = minimal_diameter(grid.space_coords()[coincidence])
    if width < grid.h * (1.0 - 1e-9):
        raise PreconditionError(f"Coincidence set is thin at X⁰ = ({x0.tolist()}, {t0}): "
                                f"width {width:.3g} < h in B_{radii[-1]:g}")
    u = result.u.values
    u0 = float(u[node])
    grad = point_gradient(u[m], idx, grid.h)

    target = blowup_target(grid.n)
    y = target.space_coords().reshape(-1, grid.n)
    in_ball = np.linalg.norm(y, axis=1) <= 0.5 + 1e-12
    y = y[in_ball]
    net = direction_net(grid.n)
    phi = 0.5 * np.clip(y @ net.T, 0.0, None) ** 2  # (points, directions)

    rows = []
    for r in radii:
        w_field = rescale_field(result.u, x0, t0, r, target)
        w = w_field.values.reshape(target.nt, -1)[:, in_ball] - u0 / (r * r) - (y @ grad) / r
        w_sum = w.sum(axis=0)
        w_max, w_min = w.max(axis=0), w.min(axis=0)
        scale = max(float(np.abs(w).max()), 1e-300)

        denom = target.nt * np.sum(phi * phi, axis=0)
        gamma = np.where(denom > 0, (w_sum @ phi) / np.where(denom > 0, denom, 1.0), 0.0)
        gamma = np.clip(gamma, 0.0, None)
        fitted = gamma[None, :] * phi
        residual = np.maximum(w_max[:, None] - fitted, fitted - w_min[:, None]).max(axis=0) / scale
        residual = np.where(gamma > 0, residual, np.inf)
        best = int(np.argmin(residual))

        ut = np.diff(w, axis=0) / target.dt if target.nt > 1 else np.zeros_like(w)
        m_hat = float(np.abs(ut).max()) if ut.size else 0.0
        rows.append(BlowupRow(r, tuple(float(v) for v in net[best]), float(gamma[best]),
                              float(residual[best]), m_hat))
        logger.debug(f"Blow-up at r={r:.4g}: e={net[best].round(4).tolist()}, gamma={gamma[best]:.6g}, "
                     f"residual={residual[best]:.3e}")

    gamma_ref = halfspace_gamma(op, np.array(rows[-1].e))
    return BlowupFit(tuple(x0.tolist()), float(t0), rows, gamma_ref, grid.h)


@dataclass
class GraphFitRow:
    r: float
    e: tuple[float, ...]
    slope: float
    points: int
    skipped: bool = False


@dataclass
class GraphFit:
    """Lipschitz slopes of ∂Ω ∩ Q_r(X⁰) as a graph in space-time."""
    h: float
    rows: list[GraphFitRow]

    def _fitted(self) -> list[GraphFitRow]:
        return sorted((row for row in self.rows if not row.skipped), key=lambda row: -row.r)

    @property
    def c1_indicator(self) -> bool:
        """s(r) non-increasing as r decreases, within 2h/r slack."""
        rows = self._fitted()
        return all(b.slope <= a.slope + 2.0 * self.h / b.r for a, b in zip(rows, rows[1:]))

    @property
    def monotone_scale(self) -> Optional[float]:
        """Largest r from which the slope sequence is monotone down to the smallest scale."""
        rows = self._fitted()
        if not rows:
            return None
        start = len(rows) - 1
        while start > 0 and rows[start].slope <= rows[start - 1].slope + 2.0 * self.h / rows[start].r:
            start -= 1
        return rows[start].r

    def csv_columns(self) -> list[str]:
        return ["r", "e", "slope", "points", "skipped"]

    def csv_rows(self) -> list[list]:
        return [[row.r, " ".join(repr(v) for v in row.e), row.slope, row.points, row.skipped] for row in self.rows]


def graph_fit(result: SolveResult, x0, t0: float, scales: Sequence[float]) -> GraphFit:
    """Smallest cone slope s(r) containing the rescaled ∂Ω points of Q_r(X⁰).

    In rescaled coordinates Y = (y, τ), a point is admissible for normal ν when
    |y·ν| - 2h/r ≤ s·|Y - (y·ν)ν|. The normal is chosen from the direction net
    (ties broken by the flattest slab), and rows with fewer than 4 points are skipped.
    """
    grid = result.grid
    x0 = _as_point(grid, x0)
    points = boundary_points(result)
    net = direction_net(grid.n)
    rows = []
    for r in scales:
        r = float(r)
        if len(points):
            y = (points[:, :-1] - x0) / r
            tau = (points[:, -1] - t0) / (r * r)
            keep = (np.linalg.norm(y, axis=1) <= 1.0 + 1e-9) & (tau <= 1e-9) & (tau >= -1.0 - 1e-9)
            y, tau = y[keep], tau[keep]
        else:
            y, tau = np.zeros((0, grid.n)), np.zeros(0)
        if len(y) < 4:
            logger.warning(f"graph_fit: {len(y)} free-boundary points at r={r:.4g}, row skipped")
            rows.append(GraphFitRow(r, (math.nan,) * grid.n, math.nan, len(y), skipped=True))
            continue
        slack = 2.0 * grid.h / r
        normal = np.abs(y @ net.T)  # (points, directions)
        total = np.sum(y * y, axis=1)[:, None] + tau[:, None] ** 2
        tangent = np.sqrt(np.clip(total - normal ** 2, 0.0, None))
        excess = np.clip(normal - slack, 0.0, None)
        ratio = np.where(tangent > 1e-12, excess / np.where(tangent > 1e-12, tangent, 1.0),
                         np.where(excess > 0, np.inf, 0.0))
        slopes = ratio.max(axis=0)
        flatness = normal.max(axis=0)
        best = int(np.lexsort((flatness, slopes))[0])
        rows.append(GraphFitRow(r, tuple(float(v) for v in net[best]), float(slopes[best]), len(y)))
    return GraphFit(grid.h, rows)
