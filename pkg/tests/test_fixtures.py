"""Tests for the exact global solutions used as data and references."""

import numpy as np
import pytest

from parafree.core.elliptic_ops import Operator, eval_h
from parafree.core.fb_solver import Mode
from parafree.core.fixtures import (
    FIXTURE_NAMES,
    caloric_scale,
    exact_result,
    fixture_field,
    fixture_mask,
    halfspace_direction,
    nonconvex_speed,
    polynomial_coefficients,
)
from parafree.core.grid_field import SpaceTimeGrid, field_differentials


def test_fixture_constants_for_pucci_plus():
    """Test the speed, polynomial and caloric constants of P⁺ with (1, 2) in 2D."""
    op = Operator.pucci_plus(1.0, 2.0, 2)
    # F(-e₁⊗e₁) = -1 for P⁺, F(I) = 4
    assert nonconvex_speed(op) == pytest.approx(2.0)
    a, b = polynomial_coefficients(op)
    assert a.tolist() == [1.0, 1.0]
    assert b == pytest.approx(3.0)
    assert caloric_scale(op) == pytest.approx(0.25)


def test_nonconvex_speed_for_identity(linear_id):
    """Test c = 1 - F(-1) = 2 for the 1D heat operator."""
    assert nonconvex_speed(linear_id) == pytest.approx(2.0)


def test_halfspace_direction():
    """Test the tilted normal and the 1D restriction."""
    assert halfspace_direction(2, 90.0) == pytest.approx([0.0, 1.0])
    assert halfspace_direction(1, 180.0).tolist() == [-1.0]
    with pytest.raises(ValueError, match="1D"):
        halfspace_direction(1, 90.0)


def test_unknown_fixture_raises(linear_id):
    """Test that an unknown fixture name is refused."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -0.1, 0.0)
    with pytest.raises(ValueError, match="Unknown fixture"):
        fixture_field(grid, linear_id, "paraboloid")


def test_polynomial_coefficient_count(linear_id):
    """Test that the coefficient vector must have n entries."""
    with pytest.raises(ValueError):
        polynomial_coefficients(linear_id, [1.0, 2.0])


@pytest.mark.parametrize("name", ["halfspace", "nonconvex", "polynomial"])
def test_fixtures_solve_h_equals_one_in_omega(pucci_plus_2d, name):
    """Test that the discrete H is exactly 1 on Ω away from the free boundary."""
    grid = SpaceTimeGrid.build(2, 1.0, 17, -0.1, 0.0, 1.0)
    result = exact_result(grid, pucci_plus_2d, name, Mode.B)
    d = field_differentials(result.u)
    x, _ = grid.coords()
    away = np.abs(x[..., 0]) > 1.5 * grid.h if name != "polynomial" else np.ones(grid.shape, dtype=bool)
    sel = d.valid & result.mask & away
    assert sel.any()
    h_values = eval_h(pucci_plus_2d, d.hess[sel], d.ut[sel])
    assert np.allclose(h_values, 1.0, atol=1e-9)


def test_caloric_fixture_is_caloric(pucci_plus_2d):
    """Test H = 0 for the caloric polynomial."""
    grid = SpaceTimeGrid.build(2, 1.0, 9, -0.1, 0.0, 1.0)
    d = field_differentials(fixture_field(grid, pucci_plus_2d, "caloric"))
    h_values = eval_h(pucci_plus_2d, d.hess[d.valid], d.ut[d.valid])
    assert np.allclose(h_values, 0.0, atol=1e-9)


def test_masks_by_mode(linear_id):
    """Test that mode A marks u ≠ 0 and mode B marks ∇u ≠ 0."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -0.1, 0.0, 1.0)
    x = grid.xs
    mask_a = fixture_mask(grid, linear_id, "halfspace", Mode.A)
    assert np.array_equal(mask_a[-1], x > 0)
    mask_b = fixture_mask(grid, linear_id, "nonconvex", Mode.B)
    assert np.array_equal(mask_b[0], x > 0)
    # u = -2t is nonzero for t < 0 even where x ≤ 0
    assert fixture_mask(grid, linear_id, "nonconvex", Mode.A)[0].all()
    assert not fixture_mask(grid, linear_id, "zero", Mode.B).any()


def test_every_fixture_samples(linear_id):
    """Test that every named fixture samples to finite values."""
    grid = SpaceTimeGrid.build(1, 1.0, 9, -0.1, 0.0, 1.0)
    for name in FIXTURE_NAMES:
        field = fixture_field(grid, linear_id, name)
        assert np.all(np.isfinite(field.values))
