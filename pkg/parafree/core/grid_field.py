"""Space-time grids with parabolic step coupling and the fields that live on them.

Values are stored with shape (nt, nx) for n=1 and (nt, nx, nx) for n=2; index
[m, i, j] is the node (x₁ = xs[i], x₂ = xs[j], t = ts[m]).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .elliptic_ops import SymMatrix
from .errors import RegionError, StencilError

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.25


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform tensor grid on [-L, L]ⁿ × [t_start, t_end].

    Use `SpaceTimeGrid.build` to derive nt from the coupling dt ≤ κh²; the
    explicit constructor is what the field-file reader uses.
    """
    n: int
    L: float
    nx: int
    t_start: float
    t_end: float
    nt: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")
        if self.nx < 5:
            raise ValueError(f"nx must be >= 5, got {self.nx}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.t_end < self.t_start:
            raise ValueError(f"t_end ({self.t_end}) precedes t_start ({self.t_start})")
        if self.nt < 1 or (self.nt == 1 and self.t_end != self.t_start):
            raise ValueError(f"nt={self.nt} cannot cover [{self.t_start}, {self.t_end}]")

    @classmethod
    def build(cls, n: int, L: float, nx: int, t_start: float, t_end: float,
              kappa: float = DEFAULT_KAPPA) -> 'SpaceTimeGrid':
        """Create a grid with nt = ⌈(t_end - t_start)/(κh²)⌉ + 1 equal time steps."""
        if not kappa > 0:
            raise ValueError(f"kappa must be positive, got {kappa}")
        if nx < 5:
            raise ValueError(f"nx must be >= 5, got {nx}")
        h = 2.0 * L / (nx - 1)
        span = t_end - t_start
        steps = math.ceil(span / (kappa * h * h) - 1e-9) if span > 0 else 0
        return cls(n=n, L=float(L), nx=int(nx), t_start=float(t_start), t_end=float(t_end), nt=steps + 1)

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.nx - 1)

    @property
    def dt(self) -> float:
        if self.nt == 1:
            return 0.0
        return (self.t_end - self.t_start) / (self.nt - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.nx)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.nt)

    @property
    def space_shape(self) -> tuple[int, ...]:
        return (self.nx,) * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nt,) + self.space_shape

    @property
    def space_size(self) -> int:
        return self.nx ** self.n

    def space_coords(self) -> np.ndarray:
        """Node coordinates of one time level, shape (*space_shape, n)."""
        axes = np.meshgrid(*([self.xs] * self.n), indexing="ij")
        return np.stack(axes, axis=-1)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, t) at every node: x has shape (*shape, n), t has shape `shape`."""
        x = np.broadcast_to(self.space_coords(), self.shape + (self.n,))
        t = np.broadcast_to(self.ts.reshape((self.nt,) + (1,) * self.n), self.shape)
        return x, t

    def contains(self, x, t, slack: float = 0.0) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        eps = 1e-9 * self.h + slack
        eps_t = 1e-9 * max(self.dt, self.h * self.h) + slack
        return bool(np.all(np.abs(x) <= self.L + eps)
                    and self.t_start - eps_t <= t <= self.t_end + eps_t)

    def node_index(self, x, t) -> tuple[int, ...]:
        """Nearest node (m, i[, j]) to the point (x, t).

        Raises:
            RegionError: If the point lies outside the grid box
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.n:
            raise ValueError(f"Point has {x.size} spatial components, grid has n={self.n}")
        if not self.contains(x, t):
            raise RegionError(f"Point x={x.tolist()}, t={t} lies outside the grid box "
                              f"[-{self.L}, {self.L}]^{self.n} x [{self.t_start}, {self.t_end}]")
        idx = [int(round((xi + self.L) / self.h)) for xi in x]
        m = 0 if self.nt == 1 else int(round((t - self.t_start) / self.dt))
        return (min(max(m, 0), self.nt - 1),) + tuple(min(max(i, 0), self.nx - 1) for i in idx)

    def node_point(self, node: tuple[int, ...]) -> tuple[np.ndarray, float]:
        m, *idx = node
        return np.array([self.xs[i] for i in idx]), float(self.ts[m])

    def header(self) -> str:
        return f"n={self.n}; nx={self.nx}; nt={self.nt}; L={self.L!r}; t0={self.t_start!r}; t1={self.t_end!r}"


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of u on a SpaceTimeGrid (read-only copy of the input)."""
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.size != int(np.prod(self.grid.shape)):
            raise ValueError(f"Field has {arr.size} values, grid needs {int(np.prod(self.grid.shape))}")
        arr = arr.reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("Field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid: SpaceTimeGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> 'ScalarField':
        """Sample fn(x, t) with x of shape (..., n) and t of shape (...)."""
        x, t = grid.coords()
        return cls(grid, np.broadcast_to(fn(x, t), grid.shape))

    @classmethod
    def constant(cls, grid: SpaceTimeGrid, value: float = 0.0) -> 'ScalarField':
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> 'ScalarField':
        return ScalarField(self.grid, values)

    def __sub__(self, other: 'ScalarField') -> 'ScalarField':
        return ScalarField(self.grid, self.values - other.values)

    def __add__(self, other: 'ScalarField') -> 'ScalarField':
        return ScalarField(self.grid, self.values + other.values)


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_r(X⁰) = B_r(x⁰) × (t⁰ - r², t⁰]."""
    x0: tuple[float, ...]
    t0: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))
        if not self.r > 0:
            raise ValueError(f"Cylinder radius must be positive, got {self.r}")


@dataclass
class Differentials:
    """Discrete (∇u, D²u, ∂ₜu) at every node.

    grad and hess are NaN off the spatial interior; ut is also NaN on the first
    level. `valid` marks nodes where all three are defined.
    """
    grad: np.ndarray   # (*shape, n)
    hess: np.ndarray   # (*shape, n, n)
    ut: np.ndarray     # shape
    valid: np.ndarray  # bool, shape


def _interior_slices(n: int) -> tuple[slice, ...]:
    return (slice(None),) + (slice(1, -1),) * n


def _shifted(u: np.ndarray, offsets: tuple[int, ...]) -> np.ndarray:
    """u at spatial offset (di[, dj]) restricted to interior nodes."""
    index: list[slice] = [slice(None)]
    for d in offsets:
        index.append(slice(1 + d, u.shape[len(index)] - 1 + d))
    return u[tuple(index)]


def field_differentials(f: ScalarField) -> Differentials:
    """Centered first/second differences in space, backward difference in time, at all nodes.

    Mixed terms use the four-point cross difference. The stencil is exact on
    polynomials of degree ≤ 2 in x and ≤ 1 in t.
    """
    grid, u = f.grid, f.values
    n, h = grid.n, grid.h
    shape = grid.shape
    grad = np.full(shape + (n,), np.nan)
    hess = np.full(shape + (n, n), np.nan)
    ut = np.full(shape, np.nan)
    valid = np.zeros(shape, dtype=bool)

    inner = _interior_slices(n)
    zero = (0,) * n
    center = _shifted(u, zero)
    for a in range(n):
        plus = tuple(1 if b == a else 0 for b in range(n))
        minus = tuple(-1 if b == a else 0 for b in range(n))
        up, um = _shifted(u, plus), _shifted(u, minus)
        grad[inner + (a,)] = (up - um) / (2.0 * h)
        hess[inner + (a, a)] = (up - 2.0 * center + um) / (h * h)
    if n == 2:
        cross = (_shifted(u, (1, 1)) - _shifted(u, (1, -1)) - _shifted(u, (-1, 1)) + _shifted(u, (-1, -1))) / (4.0 * h * h)
        hess[inner + (0, 1)] = cross
        hess[inner + (1, 0)] = cross

    # grad and hess stay defined on the first level; only ut needs the level below
    if grid.nt > 1:
        ut[1:] = (u[1:] - u[:-1]) / grid.dt
        valid[inner] = True
        valid[0] = False
    ut[~valid] = np.nan
    return Differentials(grad=grad, hess=hess, ut=ut, valid=valid)


def differentials(f: ScalarField, node: tuple[int, ...]) -> tuple[np.ndarray, SymMatrix, float]:
    """(grad, hess, ut) at one node.

    Raises:
        StencilError: If the node is on the spatial boundary or the first time level
    """
    grid = f.grid
    if len(node) != grid.n + 1:
        raise ValueError(f"Node {node} must have {grid.n + 1} indices")
    m, *idx = node
    if m < 1 or m >= grid.nt or any(i < 1 or i > grid.nx - 2 for i in idx):
        raise StencilError(f"Stencil at node {tuple(node)} leaves the grid (need interior space and m >= 1)")

    u, h = f.values, grid.h
    n = grid.n

    def at(level: int, offset: tuple[int, ...]) -> float:
        return float(u[(level,) + tuple(i + d for i, d in zip(idx, offset))])

    zero = (0,) * n
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for a in range(n):
        plus = tuple(1 if b == a else 0 for b in range(n))
        minus = tuple(-1 if b == a else 0 for b in range(n))
        grad[a] = (at(m, plus) - at(m, minus)) / (2.0 * h)
        hess[a, a] = (at(m, plus) - 2.0 * at(m, zero) + at(m, minus)) / (h * h)
    if n == 2:
        hess[0, 1] = hess[1, 0] = (at(m, (1, 1)) - at(m, (1, -1)) - at(m, (-1, 1)) + at(m, (-1, -1))) / (4.0 * h * h)
    ut = (at(m, zero) - at(m - 1, zero)) / grid.dt
    return grad, SymMatrix.from_array(hess), ut


def _check_cylinder(grid: SpaceTimeGrid, cyl: ParabolicCylinder) -> None:
    if len(cyl.x0) != grid.n:
        raise ValueError(f"Cylinder center has {len(cyl.x0)} spatial components, grid has n={grid.n}")
    if cyl.r < grid.h:
        raise RegionError(f"Cylinder radius r={cyl.r} is smaller than the grid step h={grid.h}")
    eps = 1e-9 * grid.h
    for xi in cyl.x0:
        if abs(xi) + cyl.r > grid.L + eps:
            raise RegionError(f"Cylinder B_{cyl.r}({list(cyl.x0)}) exceeds the spatial box [-{grid.L}, {grid.L}]")
    eps_t = 1e-9 * max(grid.dt, grid.h * grid.h)
    if cyl.t0 - cyl.r ** 2 < grid.t_start - eps_t:
        raise RegionError(f"Cylinder bottom t={cyl.t0 - cyl.r ** 2} precedes grid start {grid.t_start}")
    if cyl.t0 > grid.t_end + eps_t:
        raise RegionError(f"Cylinder top t={cyl.t0} exceeds grid end {grid.t_end}")


def space_distance(grid: SpaceTimeGrid, x0) -> np.ndarray:
    """|x - x⁰| on one time level."""
    diff = grid.space_coords() - np.asarray(x0, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def cylinder_nodes(grid: SpaceTimeGrid, cyl: ParabolicCylinder) -> tuple[np.ndarray, np.ndarray]:
    """Partition the nodes of Q_r(X⁰) into interior and parabolic-boundary masks.

    Boundary: |x - x⁰| ∈ (r - h, r] or t ∈ [t⁰ - r², t⁰ - r² + dt). The top cap
    t = t⁰ belongs to the interior.

    Raises:
        RegionError: If r < h or the cylinder leaves the grid box
    """
    _check_cylinder(grid, cyl)
    h = grid.h
    eps = 1e-9 * h
    eps_t = 1e-9 * max(grid.dt, h * h)
    dist = space_distance(grid, cyl.x0)
    ts = grid.ts
    bottom = cyl.t0 - cyl.r ** 2

    in_ball = dist <= cyl.r + eps
    ring = in_ball & (dist > cyl.r - h + eps)
    in_window = (ts >= bottom - eps_t) & (ts <= cyl.t0 + eps_t)
    if grid.nt > 1:
        bottom_cap = in_window & (ts < bottom + grid.dt - eps_t)
    else:
        bottom_cap = in_window

    expand = (slice(None),) + (None,) * grid.n
    window = in_window[expand]
    body = window & in_ball[None]
    boundary = body & (ring[None] | bottom_cap[expand])
    interior = body & ~boundary
    return interior, boundary


def interpolate(f: ScalarField, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Multilinear in space, linear in time. x has shape (..., n), t shape (...).

    Raises:
        RegionError: If any sample point lies outside the grid box
    """
    grid = f.grid
    x = np.asarray(x, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    eps = 1e-9 * grid.h
    eps_t = 1e-9 * max(grid.dt, grid.h * grid.h)
    if np.any(np.abs(x) > grid.L + eps) or np.any(t < grid.t_start - eps_t) or np.any(t > grid.t_end + eps_t):
        raise RegionError("Sampling image leaves the source grid box "
                          f"[-{grid.L}, {grid.L}]^{grid.n} x [{grid.t_start}, {grid.t_end}]")
    x = np.clip(x, -grid.L, grid.L)
    t = np.clip(t, grid.t_start, grid.t_end)

    axes = [grid.xs] * grid.n
    if grid.nt == 1:
        interp = RegularGridInterpolator(axes, f.values[0], method="linear")
        return interp(x)
    interp = RegularGridInterpolator([grid.ts] + axes, f.values, method="linear")
    points = np.concatenate([t[..., None], x], axis=-1)
    return interp(points)


def rescale_field(f: ScalarField, x0, t0: float, r: float, target: SpaceTimeGrid) -> ScalarField:
    """u_r(y, τ) = u(x⁰ + r·y, t⁰ + r²·τ) / r² sampled on the target grid."""
    if not r > 0:
        raise ValueError(f"Rescaling factor must be positive, got {r}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != f.grid.n or target.n != f.grid.n:
        raise ValueError("Rescaling requires matching spatial dimensions")
    y, tau = target.coords()
    values = interpolate(f, x0 + r * y, t0 + r * r * tau)
    return ScalarField(target, values / (r * r))


def cell_weights(grid: SpaceTimeGrid) -> np.ndarray:
    """Trapezoid (clipped dual cell) volume of every node; sums to |box|.

    On a single-level grid the time factor is 1, i.e. spatial measure.
    """
    wx = np.full(grid.nx, grid.h)
    wx[0] = wx[-1] = 0.5 * grid.h
    weights = wx
    for _ in range(grid.n - 1):
        weights = np.multiply.outer(weights, wx)
    if grid.nt == 1:
        wt = np.ones(1)
    else:
        wt = np.full(grid.nt, grid.dt)
        wt[0] = wt[-1] = 0.5 * grid.dt
    return np.multiply.outer(wt, weights)


def measure(grid: SpaceTimeGrid, region: Optional[np.ndarray]) -> float:
    """Space-time volume of a node mask; empty → 0."""
    if region is None:
        return float(cell_weights(grid).sum())
    region = np.asarray(region, dtype=bool)
    if not region.any():
        return 0.0
    return float(cell_weights(grid)[region].sum())


def sup_norm(f: Union[ScalarField, np.ndarray], region: Optional[np.ndarray] = None) -> float:
    """max |f| over a node mask; empty → 0."""
    values = f.values if isinstance(f, ScalarField) else np.asarray(f)
    if region is not None:
        values = values[np.asarray(region, dtype=bool)]
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))


def q1_grid(n: int, nx: int, kappa: float = 1.0, L: float = 1.0) -> SpaceTimeGrid:
    """Grid on [-L, L]ⁿ × [-L², 0]; holds Q_L(0) exactly."""
    return SpaceTimeGrid.build(n, L, nx, -L * L, 0.0, kappa)
