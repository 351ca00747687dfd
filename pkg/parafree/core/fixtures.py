"""Exact global solutions used as data, references and acceptance fixtures."""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from .elliptic_ops import Operator, eval_f, halfspace_gamma
from .fb_solver import Mode, SolveResult
from .grid_field import ScalarField, SpaceTimeGrid

logger = logging.getLogger(__name__)

FIXTURE_NAMES = ("halfspace", "nonconvex", "polynomial", "caloric", "ramp", "zero")


def halfspace_direction(n: int, tilt_deg: float = 0.0) -> np.ndarray:
    """Unit normal e of the half-space fixture, rotated by `tilt_deg` from e₁."""
    theta = np.deg2rad(tilt_deg)
    if n == 1:
        c = np.cos(theta)
        if abs(abs(c) - 1.0) > 1e-12:
            raise ValueError(f"In 1D the tilt must be 0 or 180 degrees, got {tilt_deg}")
        return np.array([np.sign(c)])
    return np.array([np.cos(theta), np.sin(theta)])


def nonconvex_speed(op: Operator) -> float:
    """c = 1 - F(-e₁⊗e₁), so that -c·t - (x₁)₊²/2 solves H = 1 where x₁ > 0."""
    e1 = np.zeros((op.n, op.n))
    e1[0, 0] = 1.0
    return 1.0 - eval_f(op, -e1)


def polynomial_coefficients(op: Operator, a: Optional[Sequence[float]] = None) -> tuple[np.ndarray, float]:
    """(a, b) of P₂ = Σ a_j x_j²/2 + b·t with F(diag a) - b = 1."""
    a = np.ones(op.n) if a is None else np.asarray(a, dtype=float).reshape(-1)
    if a.size != op.n:
        raise ValueError(f"Polynomial fixture needs {op.n} coefficients, got {a.size}")
    return a, eval_f(op, np.diag(a)) - 1.0


def caloric_scale(op: Operator) -> float:
    return 1.0 / max(0.5, eval_f(op, np.eye(op.n)))


def fixture_function(
    op: Operator,
    name: str,
    tilt_deg: float = 0.0,
    sigma: float = 0.0,
    coefficients: Optional[Sequence[float]] = None,
):
    """Return u(x, t) for a named fixture; x has shape (..., n)."""
    n = op.n
    if name == "halfspace":
        e = halfspace_direction(n, tilt_deg)
        gamma = halfspace_gamma(op, e)

        def fn(x, t):
            s = np.clip(x @ e, 0.0, None)
            return 0.5 * gamma * s * s + 0.0 * t
    elif name == "nonconvex":
        c = nonconvex_speed(op)

        def fn(x, t):
            s = np.clip(x[..., 0], 0.0, None)
            return -c * t - 0.5 * s * s
    elif name == "polynomial":
        a, b = polynomial_coefficients(op, coefficients)

        def fn(x, t):
            return 0.5 * np.sum(a * x * x, axis=-1) + b * t
    elif name == "caloric":
        s = caloric_scale(op)
        speed = eval_f(op, np.eye(n))

        def fn(x, t):
            return s * (0.5 * np.sum(x * x, axis=-1) + speed * t)
    elif name == "ramp":
        def fn(x, t):
            return -np.clip(t - sigma, 0.0, None) + 0.0 * x[..., 0]
    elif name == "zero":
        def fn(x, t):
            return 0.0 * t + 0.0 * x[..., 0]
    else:
        raise ValueError(f"Unknown fixture {name!r}; expected one of {', '.join(FIXTURE_NAMES)}")
    return fn


def fixture_field(grid: SpaceTimeGrid, op: Operator, name: str, **options) -> ScalarField:
    """Sample a named fixture on the grid."""
    if grid.n != op.n:
        raise ValueError(f"Grid n={grid.n} does not match operator n={op.n}")
    return ScalarField.from_function(grid, fixture_function(op, name, **options))


def fixture_mask(grid: SpaceTimeGrid, op: Operator, name: str, mode: Union[Mode, str] = Mode.A,
                 **options) -> np.ndarray:
    """Exact Ω of a fixture: {u ≠ 0} in mode A, {∇u ≠ 0} in mode B."""
    mode = Mode(mode)
    x, t = grid.coords()
    if mode == Mode.A:
        u = fixture_field(grid, op, name, **options).values
        return u != 0.0

    if name == "halfspace":
        e = halfspace_direction(op.n, options.get("tilt_deg", 0.0))
        return (x @ e) > 0.0
    if name == "nonconvex":
        return x[..., 0] > 0.0
    if name == "polynomial":
        a, _ = polynomial_coefficients(op, options.get("coefficients"))
        return np.any((a * x) != 0.0, axis=-1)
    if name == "caloric":
        return np.any(x != 0.0, axis=-1)
    if name in ("ramp", "zero"):
        return np.zeros(grid.shape, dtype=bool)
    raise ValueError(f"Unknown fixture {name!r}; expected one of {', '.join(FIXTURE_NAMES)}")


def exact_result(grid: SpaceTimeGrid, op: Operator, name: str, mode: Union[Mode, str] = Mode.A,
                 **options) -> SolveResult:
    """A fixture as a converged SolveResult (field + exact Ω)."""
    field = fixture_field(grid, op, name, **options)
    mask = fixture_mask(grid, op, name, mode, **options)
    logger.debug(f"Built exact fixture {name} on {grid.header()}")
    return SolveResult.from_field(field, mask, mode)
