"""Tests for space-time grids, fields, cylinders and rescaling."""

import numpy as np
import pytest

from parafree.core.errors import RegionError, StencilError
from parafree.core.grid_field import (
    ParabolicCylinder,
    ScalarField,
    SpaceTimeGrid,
    cell_weights,
    cylinder_nodes,
    differentials,
    field_differentials,
    interpolate,
    measure,
    rescale_field,
    sup_norm,
)


def test_build_derives_time_levels():
    """Test nt = ceil(span / (κh²)) + 1 with equal steps."""
    grid = SpaceTimeGrid.build(1, 1.0, 5, -1.0, 0.0, 0.25)
    assert grid.h == 0.5
    assert grid.nt == 17
    assert grid.dt == pytest.approx(1.0 / 16)
    assert grid.ts[0] == -1.0 and grid.ts[-1] == 0.0


def test_build_single_level():
    """Test that an empty time span gives one level and dt = 0."""
    grid = SpaceTimeGrid.build(2, 1.0, 9, 0.0, 0.0)
    assert grid.nt == 1
    assert grid.dt == 0.0
    assert grid.shape == (1, 9, 9)


def test_grid_validation():
    """Test that too few nodes and inverted time intervals are refused."""
    with pytest.raises(ValueError):
        SpaceTimeGrid.build(1, 1.0, 4, -1.0, 0.0)
    with pytest.raises(ValueError):
        SpaceTimeGrid(n=1, L=1.0, nx=9, t_start=0.0, t_end=-1.0, nt=3)
    with pytest.raises(ValueError):
        SpaceTimeGrid(n=3, L=1.0, nx=9, t_start=-1.0, t_end=0.0, nt=3)


def test_node_index_and_point():
    """Test nearest-node lookup and its inverse."""
    grid = SpaceTimeGrid.build(2, 1.0, 9, -1.0, 0.0, 1.0)
    node = grid.node_index([0.25, -0.5], -0.5)
    x, t = grid.node_point(node)
    assert np.allclose(x, [0.25, -0.5])
    assert t == pytest.approx(-0.5)


def test_node_index_outside_raises():
    """Test that a point outside the box raises RegionError."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -1.0, 0.0)
    with pytest.raises(RegionError):
        grid.node_index([1.5], -0.5)
    with pytest.raises(RegionError):
        grid.node_index([0.0], 0.5)


def test_field_rejects_non_finite_values():
    """Test that NaN values are refused."""
    grid = SpaceTimeGrid.build(1, 1.0, 5, -1.0, 0.0)
    values = np.zeros(grid.shape)
    values[1, 2] = np.nan
    with pytest.raises(ValueError, match="finite"):
        ScalarField(grid, values)


def test_field_is_read_only():
    """Test that field values cannot be modified in place."""
    grid = SpaceTimeGrid.build(1, 1.0, 5, -1.0, 0.0)
    field = ScalarField.constant(grid, 1.0)
    with pytest.raises(ValueError):
        field.values[0, 0] = 2.0


def test_differentials_exact_on_parabolic_quadratics():
    """Test that the stencils reproduce D²u and ∂ₜu of u = x²/2 + 3t."""
    grid = SpaceTimeGrid.build(1, 1.0, 17, -0.5, 0.0, 1.0)
    field = ScalarField.from_function(grid, lambda x, t: 0.5 * x[..., 0] ** 2 + 3.0 * t)
    d = field_differentials(field)
    assert not d.valid[0].any()
    assert not d.valid[:, 0].any() and not d.valid[:, -1].any()
    assert np.allclose(d.hess[d.valid][:, 0, 0], 1.0, atol=1e-9)
    assert np.allclose(d.ut[d.valid], 3.0, atol=1e-9)


def test_mixed_derivative_in_2d():
    """Test the cross difference on u = x₁x₂."""
    grid = SpaceTimeGrid.build(2, 1.0, 9, -0.25, 0.0, 1.0)
    field = ScalarField.from_function(grid, lambda x, t: x[..., 0] * x[..., 1] + 0.0 * t)
    grad, hess, ut = differentials(field, (2, 3, 5))
    assert hess.to_array() == pytest.approx(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert grad == pytest.approx([0.25, -0.25])
    assert ut == pytest.approx(0.0)


def test_differentials_off_the_stencil_raise():
    """Test that boundary nodes and the first level have no stencil."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -0.25, 0.0, 1.0)
    field = ScalarField.constant(grid)
    with pytest.raises(StencilError):
        differentials(field, (1, 0))
    with pytest.raises(StencilError):
        differentials(field, (0, 4))


def test_cylinder_partition():
    """Test that the ring and bottom cap are boundary and the top cap is interior."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -1.0, 0.0, 1.0)
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder((0.0,), 0.0, 0.5))
    assert not (interior & boundary).any()
    top = grid.nt - 1
    centre = 4
    assert interior[top, centre]
    assert boundary[top, 2] and boundary[top, 6]
    assert not (interior | boundary)[top, 1]
    bottom = grid.node_index([0.0], -0.25)[0]
    assert boundary[bottom, centre]
    assert not (interior | boundary)[bottom - 1].any()


def test_cylinder_outside_grid_raises():
    """Test that small radii and cylinders leaving the box raise RegionError."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -0.5, 0.0, 1.0)
    with pytest.raises(RegionError):
        cylinder_nodes(grid, ParabolicCylinder((0.0,), 0.0, 0.1))
    with pytest.raises(RegionError):
        cylinder_nodes(grid, ParabolicCylinder((0.75,), 0.0, 0.5))
    with pytest.raises(RegionError):
        cylinder_nodes(grid, ParabolicCylinder((0.0,), 0.0, 0.8))


def test_full_measure_is_box_volume():
    """Test that the clipped dual cells add up to the box volume."""
    grid = SpaceTimeGrid.build(2, 1.0, 9, -0.5, 0.0, 1.0)
    assert cell_weights(grid).sum() == pytest.approx(4.0 * 0.5)
    assert measure(grid, None) == pytest.approx(2.0)
    assert measure(grid, np.zeros(grid.shape, dtype=bool)) == 0.0


def test_sup_norm_of_empty_region():
    """Test that the sup over an empty region is 0."""
    grid = SpaceTimeGrid.build(1, 1.0, 5, -1.0, 0.0)
    field = ScalarField.constant(grid, -3.0)
    assert sup_norm(field) == 3.0
    assert sup_norm(field, np.zeros(grid.shape, dtype=bool)) == 0.0


def test_rescale_quadratic_on_nodes():
    """Test u_r(y) = u(ry)/r² reproduces y²/2 when samples land on source nodes."""
    source = SpaceTimeGrid.build(1, 1.0, 33, -1.0, 0.0, 1.0)
    target = SpaceTimeGrid.build(1, 0.5, 9, -0.25, 0.0, 1.0)
    u = ScalarField.from_function(source, lambda x, t: 0.5 * x[..., 0] ** 2 + 0.0 * t)
    u_r = rescale_field(u, [0.0], 0.0, 0.5, target)
    y, _ = target.coords()
    assert np.allclose(u_r.values, 0.5 * y[..., 0] ** 2, atol=1e-12)


def test_interpolate_outside_raises():
    """Test that sampling outside the source box raises RegionError."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -1.0, 0.0)
    field = ScalarField.constant(grid, 1.0)
    with pytest.raises(RegionError):
        interpolate(field, np.array([[1.5]]), np.array([-0.5]))
    assert interpolate(field, np.array([[0.3]]), np.array([-0.5]))[0] == pytest.approx(1.0)


def test_rescale_cubic_on_nodes():
    """Test that x³ rescaled at r = 1/2 about the origin is y³/2."""
    source = SpaceTimeGrid.build(1, 1.0, 33, -1.0, 0.0, 1.0)
    target = SpaceTimeGrid.build(1, 1.0, 17, -1.0, 0.0, 1.0)
    u = ScalarField.from_function(source, lambda x, t: x[..., 0] ** 3 + 0.0 * t)
    u_r = rescale_field(u, [0.0], 0.0, 0.5, target)
    y, _ = target.coords()
    assert np.allclose(u_r.values, 0.5 * y[..., 0] ** 3, atol=1e-12)


def test_rescale_composes():
    """Test (u_r)_s = u_rs when every sample lands on a node of the grid it reads."""
    fine = SpaceTimeGrid.build(1, 1.0, 65, -1.0, 0.0, 1.0)
    middle = SpaceTimeGrid.build(1, 1.0, 33, -1.0, 0.0, 1.0)
    coarse = SpaceTimeGrid.build(1, 1.0, 17, -1.0, 0.0, 1.0)
    u = ScalarField.from_function(fine, lambda x, t: np.sin(2.0 * x[..., 0]) + x[..., 0] * t + t * t)
    u_r = rescale_field(u, [0.25], 0.0, 0.5, middle)
    composed = rescale_field(u_r, [0.0], 0.0, 0.5, coarse)
    direct = rescale_field(u, [0.25], 0.0, 0.25, coarse)
    assert np.allclose(composed.values, direct.values, atol=1e-10)


def test_cylinder_node_counts_on_five_nodes():
    """Test exact interior and boundary counts of Q₁ and Q_{1/2} with h = 1/2 and dt = 1/4."""
    grid = SpaceTimeGrid.build(1, 1.0, 5, -1.0, 0.0, 1.0)
    assert grid.nt == 5
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder((0.0,), 0.0, 1.0))
    # bottom level (5) plus x = ±1 on the four upper levels
    assert int(boundary.sum()) == 13
    assert int(interior.sum()) == 12
    interior, boundary = cylinder_nodes(grid, ParabolicCylinder((0.0,), 0.0, 0.5))
    # t = -1/4 layer (3) plus x = ±1/2 at t = 0
    assert int(boundary.sum()) == 5
    assert int(interior.sum()) == 1
    assert interior[-1, 2]
