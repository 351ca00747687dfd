"""Monotone sparse stencils for trace(A·D²u) on one time level.

The 2D mixed term uses the seven-point form: the diagonal pair aligned with the
sign of a₁₂ carries |a₁₂|/h², the axis neighbours lose |a₁₂|/h². The result is
exact on quadratics and has nonnegative off-diagonal weights iff aᵢᵢ ≥ |a₁₂|.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import StencilError
from .grid_field import SpaceTimeGrid

logger = logging.getLogger(__name__)


def check_monotone(a: np.ndarray) -> None:
    """Raise StencilError if the seven-point stencil of A has a negative neighbour weight."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if np.any(np.diag(a) <= 0.0):
        raise StencilError(f"Coefficient matrix has a non-positive diagonal entry:\n{a}")
    if a.shape[0] == 2:
        b = abs(a[0, 1])
        if a[0, 0] < b or a[1, 1] < b:
            raise StencilError(
                "Non-monotone stencil: off-diagonal dominance a_ii >= |a_12| violated for\n"
                f"{a}"
            )


def stencil_weights(a: np.ndarray, h: float) -> list[tuple[tuple[int, ...], float]]:
    """(spatial offset, weight) pairs of the discrete trace(A·D²u)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    h2 = h * h
    if a.shape[0] == 1:
        a11 = a[0, 0]
        return [((0,), -2.0 * a11 / h2), ((1,), a11 / h2), ((-1,), a11 / h2)]

    a11, a12, a22 = a[0, 0], a[0, 1], a[1, 1]
    b = abs(a12)
    weights = [
        ((0, 0), (-2.0 * a11 - 2.0 * a22 + 2.0 * b) / h2),
        ((1, 0), (a11 - b) / h2),
        ((-1, 0), (a11 - b) / h2),
        ((0, 1), (a22 - b) / h2),
        ((0, -1), (a22 - b) / h2),
    ]
    if a12 > 0:
        weights += [((1, 1), b / h2), ((-1, -1), b / h2)]
    elif a12 < 0:
        weights += [((1, -1), b / h2), ((-1, 1), b / h2)]
    return weights


def assemble(grid: SpaceTimeGrid, a: np.ndarray) -> sparse.csr_matrix:
    """Sparse N×N matrix of the stencil; rows of spatial boundary nodes are empty."""
    n, nx = grid.n, grid.nx
    size = grid.space_size
    index = np.arange(size).reshape(grid.space_shape)
    inner = index[(slice(1, -1),) * n].ravel()

    rows, cols, data = [], [], []
    for offset, weight in stencil_weights(a, grid.h):
        if weight == 0.0:
            continue
        neighbour = index[tuple(slice(1 + d, nx - 1 + d) for d in offset)].ravel()
        rows.append(inner)
        cols.append(neighbour)
        data.append(np.full(inner.size, weight))
    return sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )


def interior_flat(grid: SpaceTimeGrid) -> np.ndarray:
    """Boolean mask over flattened space: True off the spatial boundary."""
    mask = np.zeros(grid.space_shape, dtype=bool)
    mask[(slice(1, -1),) * grid.n] = True
    return mask.ravel()


@dataclass
class FamilyStencils:
    """Assembled stencils L_j for every member A_j of a Bellman family."""
    grid: SpaceTimeGrid
    matrices: tuple[np.ndarray, ...]
    sense: str
    operators: list[sparse.csr_matrix]
    centers: np.ndarray  # diagonal weight of each L_j on interior rows
    interior: np.ndarray

    @classmethod
    def build(cls, grid: SpaceTimeGrid, matrices, sense: str = "max") -> 'FamilyStencils':
        if sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
        mats = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in matrices)
        for a in mats:
            if a.shape != (grid.n, grid.n):
                raise ValueError(f"Coefficient matrix shape {a.shape} does not match n={grid.n}")
            check_monotone(a)
        ops = [assemble(grid, a) for a in mats]
        centers = np.array([stencil_weights(a, grid.h)[0][1] for a in mats])
        logger.debug(f"Assembled {len(ops)} stencils on nx={grid.nx}, n={grid.n}")
        return cls(grid, mats, sense, ops, centers, interior_flat(grid))

    def apply(self, u: np.ndarray) -> np.ndarray:
        """L_j u for every j, shape (J, N)."""
        flat = np.asarray(u, dtype=float).ravel()
        return np.stack([op @ flat for op in self.operators], axis=0)

    def shift_constants(self, shift) -> np.ndarray:
        """trace(A_j S) for a constant Hessian shift S (zero when S is None)."""
        if shift is None:
            return np.zeros(len(self.matrices))
        s = np.atleast_2d(np.asarray(shift, dtype=float))
        return np.array([float(np.sum(a * s)) for a in self.matrices])

    def best(self, values: np.ndarray) -> np.ndarray:
        return values.max(axis=0) if self.sense == "max" else values.min(axis=0)
