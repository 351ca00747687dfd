"""Tests for the free-boundary estimators."""

import math

import numpy as np
import pytest

from parafree.core.elliptic_ops import Operator
from parafree.core.errors import PreconditionError, RegionError
from parafree.core.fb_analysis import (
    blowup_fit,
    boundary_points,
    direction_net,
    free_boundary_nodes,
    graph_fit,
    map_points,
    minimal_diameter,
    monotonicity_check,
    monotonicity_threshold,
    nondegeneracy,
    point_gradient,
    quadratic_growth,
    thickness,
    thickness_report,
    time_decay,
)
from parafree.core.fb_solver import Mode, solve_free_boundary
from parafree.core.fixtures import exact_result, fixture_field
from parafree.core.grid_field import SpaceTimeGrid, q1_grid


@pytest.fixture
def window_grid():
    """Grid symmetric in time around t = 0 for two-sided thickness windows."""
    return SpaceTimeGrid.build(1, 1.0, 65, -0.15, 0.15, 0.25)


@pytest.fixture
def blowup_grid():
    return SpaceTimeGrid.build(1, 1.0, 129, -0.2, 0.0, 1.0)


def test_minimal_diameter_cases():
    """Test widths of segments, squares, rotated rectangles and degenerate sets."""
    assert minimal_diameter(np.array([[0.0], [3.0], [1.0]])) == pytest.approx(3.0)
    square = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert minimal_diameter(square) == pytest.approx(1.0)
    angle = np.deg2rad(30.0)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    rectangle = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]) @ rotation.T
    assert minimal_diameter(rectangle) == pytest.approx(1.0)
    assert minimal_diameter(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])) == 0.0
    assert minimal_diameter(np.zeros((0, 2))) == 0.0
    with pytest.raises(ValueError):
        minimal_diameter(np.zeros((4, 3)))


def test_map_points_keeps_order():
    """Test that threaded evaluation returns results in input order."""
    assert map_points(lambda v: v * v, range(10), workers=4) == [v * v for v in range(10)]


def test_thickness_of_halfspace(linear_id, window_grid):
    """Test δ_r = 1 at the origin of the half-space (Λ fills half of B_r)."""
    result = exact_result(window_grid, linear_id, "halfspace")
    value = thickness(result, [0.0], 0.0, 0.25)
    assert value.value == pytest.approx(1.0)


def test_thickness_of_polynomial_is_zero(linear_id, window_grid):
    """Test that a single-point coincidence set has zero thickness."""
    result = exact_result(window_grid, linear_id, "polynomial")
    assert thickness(result, [0.0], 0.0, 0.25).value == 0.0


def test_thickness_window_outside_raises(linear_id, window_grid):
    """Test that a window past the grid end names the truncated side."""
    result = exact_result(window_grid, linear_id, "halfspace")
    with pytest.raises(RegionError, match="top"):
        thickness(result, [0.0], 0.1, 0.25)
    with pytest.raises(RegionError, match="bottom"):
        thickness(result, [0.0], -0.1, 0.25)


def test_thickness_report(linear_id, window_grid):
    """Test the report over points and radii against ε."""
    result = exact_result(window_grid, linear_id, "halfspace")
    report = thickness_report(result, [(0.0, 0.0)], [0.25, 0.125], epsilon=0.5, workers=2)
    assert len(report.rows) == 2
    assert report.passed
    assert report.csv_columns() == ["point", "r", "delta_r", "t_slice", "flag"]
    assert all(row[4] == "" for row in report.rows)


def test_thickness_report_flags_truncated_windows(linear_id, window_grid):
    """Test that a window past the grid end raises, or becomes a flagged row when asked."""
    result = exact_result(window_grid, linear_id, "halfspace")
    # t + r² = 0.1625 exceeds the grid end 0.15
    points = [(0.0, 0.0), (0.0, 0.1)]
    with pytest.raises(RegionError):
        thickness_report(result, points, [0.25], epsilon=0.5)
    report = thickness_report(result, points, [0.25], epsilon=0.5, flag_regions=True)
    assert len(report.rows) == 2
    assert report.rows[0][4] == ""
    assert report.rows[1][4].startswith("RegionError")
    assert math.isnan(report.rows[1][2])
    assert report.admissible == [report.rows[0][2]]
    assert report.minimum == report.rows[0][2]
    assert report.passed
    assert report.csv_rows()[1][0] == "0.0 0.1"


def test_free_boundary_nodes_and_points(linear_id, window_grid):
    """Test the grid points and interface midpoints of the half-space boundary."""
    result = exact_result(window_grid, linear_id, "halfspace")
    assert free_boundary_nodes(result, [0]) == [(0, 32)]
    points = boundary_points(result)
    assert points.shape == (window_grid.nt, 2)
    assert np.allclose(points[:, 0], 0.5 * window_grid.h)


def test_point_gradient_at_the_kink(linear_id, window_grid):
    """Test that one-sided averaging gives ∇u = 0 at the half-space boundary."""
    result = exact_result(window_grid, linear_id, "halfspace")
    level = result.u.values[-1]
    assert point_gradient(level, (32,), window_grid.h) == pytest.approx([0.0], abs=1e-14)
    assert point_gradient(level, (48,), window_grid.h) == pytest.approx([0.5])
    with pytest.raises(RegionError):
        point_gradient(level, (0,), window_grid.h)


def test_nondegeneracy_margin(linear_id, short_grid_1d):
    """Test max over ∂ₚQ_r of u against r²/(2nλ₁ + 1) for the half-space."""
    result = exact_result(short_grid_1d, linear_id, "halfspace", Mode.B)
    outcome = nondegeneracy(result, [0.0], 0.0, 0.25, 1.0)
    assert outcome.passed
    assert outcome.lhs == pytest.approx(0.25 ** 2 / 2)
    assert outcome.margin == pytest.approx(0.25 ** 2 / 6)


def test_nondegeneracy_needs_mode_b(linear_id, short_grid_1d):
    """Test that mode A results are refused."""
    result = exact_result(short_grid_1d, linear_id, "halfspace", Mode.A)
    with pytest.raises(PreconditionError, match="mode B"):
        nondegeneracy(result, [0.0], 0.0, 0.25, 1.0)


def test_quadratic_growth_of_halfspace(linear_id, short_grid_1d):
    """Test S(r) = 1/2 and |D̃²u| ≤ 1 for the half-space."""
    result = exact_result(short_grid_1d, linear_id, "halfspace")
    report = quadratic_growth(result, [0.0], 0.0, [0.25, 0.125])
    assert [s for _, s in report.rows] == pytest.approx([0.5, 0.5])
    assert report.c_bar == pytest.approx(0.5)
    assert report.d2_sup <= 1.0 + 1e-9
    assert any("leaves the grid" in note for note in report.notes)


def test_time_decay(linear_id, short_grid_1d):
    """Test |∂ₜu| = c in every band for the nonconvex solution and 0 for the half-space."""
    nonconvex = time_decay(exact_result(short_grid_1d, linear_id, "nonconvex", Mode.B))
    assert nonconvex.rows
    assert all(value == pytest.approx(2.0) for _, value, count in nonconvex.rows if count)
    halfspace = time_decay(exact_result(short_grid_1d, linear_id, "halfspace"))
    assert all(value == 0.0 for _, value, count in halfspace.rows if count)
    assert halfspace.decays


def test_time_decay_without_boundary(linear_id, short_grid_1d):
    """Test that an empty free boundary gives no bands."""
    report = time_decay(exact_result(short_grid_1d, linear_id, "zero"))
    assert report.rows == []
    assert not report.decays


def test_monotonicity(linear_id):
    """Test the threshold value and the implication on the half-space."""
    assert monotonicity_threshold(1, 1.0) == pytest.approx(1.0 / 12.0)
    result = exact_result(q1_grid(1, 33), linear_id, "halfspace")
    plain = monotonicity_check(result, [1.0, 0.0], 0.0, 1.0)
    assert plain.m2 == pytest.approx(-0.125)
    assert not plain.hypothesis_holds
    assert plain.implication_holds
    directional = monotonicity_check(result, [1.0, 0.0], 1.0, 1.0)
    assert directional.hypothesis_holds and directional.conclusion_holds
    with pytest.raises(ValueError, match="unit"):
        monotonicity_check(result, [1.0, 1.0], 1.0, 1.0)


def test_direction_net():
    """Test ±1 in 1D and unit vectors in 2D."""
    assert direction_net(1).tolist() == [[1.0], [-1.0]]
    net = direction_net(2, 8)
    assert net.shape == (8, 2)
    assert np.allclose(np.linalg.norm(net, axis=1), 1.0)


@pytest.mark.slow
def test_blowup_of_halfspace(linear_id, blowup_grid):
    """Test that the blow-ups of the half-space are the half-space."""
    result = exact_result(blowup_grid, linear_id, "halfspace")
    fit = blowup_fit(result, linear_id, [0.0], 0.0, [0.5, 0.25, 0.125])
    assert fit.e == (1.0,)
    assert fit.gamma_reference == pytest.approx(1.0, abs=1e-9)
    assert all(row.gamma == pytest.approx(1.0, rel=0.1) for row in fit.rows)
    assert fit.residuals_decreasing
    assert all(row.m_hat <= 1e-8 for row in fit.rows)


def test_blowup_preconditions(linear_id, blowup_grid):
    """Test thin coincidence sets, radius order and points off ∂Ω."""
    polynomial = exact_result(blowup_grid, linear_id, "polynomial")
    with pytest.raises(PreconditionError, match="thin"):
        blowup_fit(polynomial, linear_id, [0.0], 0.0, [0.5, 0.25, 0.125])
    halfspace = exact_result(blowup_grid, linear_id, "halfspace")
    with pytest.raises(PreconditionError, match="decreasing"):
        blowup_fit(halfspace, linear_id, [0.0], 0.0, [0.25, 0.5])
    with pytest.raises(PreconditionError, match="free boundary"):
        blowup_fit(halfspace, linear_id, [-0.5], 0.0, [0.25, 0.125])


def test_graph_fit_of_halfspace(linear_id, short_grid_1d):
    """Test that the flat boundary has zero slope at every scale."""
    result = exact_result(short_grid_1d, linear_id, "halfspace")
    fit = graph_fit(result, [0.0], 0.0, [0.25, 0.125])
    assert all(not row.skipped for row in fit.rows)
    assert all(row.slope == 0.0 for row in fit.rows)
    assert fit.c1_indicator
    assert fit.monotone_scale == 0.25


def test_graph_fit_skips_sparse_rows(linear_id, short_grid_1d):
    """Test that a result with no boundary skips every row."""
    result = exact_result(short_grid_1d, linear_id, "zero")
    fit = graph_fit(result, [0.0], 0.0, [0.25])
    assert fit.rows[0].skipped
    assert math.isnan(fit.rows[0].slope)
    assert fit.monotone_scale is None


def test_minimal_diameter_grows_with_the_set():
    """Test MD(A) ≤ MD(B) for random subsets A ⊂ B in one and two dimensions."""
    rng = np.random.default_rng(5)
    for n in (1, 2):
        for _ in range(20):
            big = rng.normal(size=(30, n))
            small = big[rng.choice(30, size=8, replace=False)]
            assert minimal_diameter(small) <= minimal_diameter(big) + 1e-12
            assert minimal_diameter(big[:2]) <= minimal_diameter(big) + 1e-12


def test_graph_fit_of_tilted_halfspace(pucci_plus_2d):
    """Test the 30° half-space: zero slope with a normal close to the tilt at every scale."""
    grid = SpaceTimeGrid.build(2, 1.0, 33, -0.07, 0.0, 1.0)
    result = exact_result(grid, pucci_plus_2d, "halfspace", Mode.A, tilt_deg=30.0)
    fit = graph_fit(result, [0.0, 0.0], 0.0, [0.25, 0.125])
    tilt = np.array([np.cos(np.deg2rad(30.0)), np.sin(np.deg2rad(30.0))])
    assert all(not row.skipped and row.points >= 4 for row in fit.rows)
    assert all(row.slope == 0.0 for row in fit.rows)
    assert all(abs(np.dot(row.e, tilt)) >= np.cos(np.deg2rad(5.0)) for row in fit.rows)
    assert fit.c1_indicator


@pytest.mark.slow
@pytest.mark.parametrize("op", [Operator.linear([[1.0]], 1.0, 1.0), Operator.pucci_plus(1.0, 2.0, 1)],
                         ids=["linear", "pucci_plus"])
def test_blowup_of_solved_halfspace(op, blowup_grid):
    """Test the blow-ups of a mode-A solve from half-space data at its free boundary."""
    h = blowup_grid.h
    grid = SpaceTimeGrid.build(1, 1.0, blowup_grid.nx, -0.075, 0.0, 1.0)
    data = fixture_field(grid, op, "halfspace")
    result = solve_free_boundary(op, grid, data, data, Mode.A)
    assert result.converged
    nodes = free_boundary_nodes(result, [grid.nt - 1])
    assert len(nodes) == 1
    x0, t0 = grid.node_point(nodes[0])
    fit = blowup_fit(result, op, x0, t0, [32 * h, 16 * h, 8 * h])
    assert fit.e == (1.0,)
    # γ = 1/λ₁ along e₁ for both operators
    assert fit.gamma_reference == pytest.approx(1.0 / op.lambda1)
    assert all(row.gamma == pytest.approx(fit.gamma_reference, rel=0.1) for row in fit.rows)
    assert fit.residuals_decreasing
    assert all(row.m_hat <= 10 * h for row in fit.rows)
