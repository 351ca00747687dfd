"""Tests for parabolic polynomials, the approximation ladder and the density tools."""

import math

import numpy as np
import pytest

from parafree.core.elliptic_ops import SymMatrix
from parafree.core.errors import PreconditionError, RegionError
from parafree.core.fb_solver import Mode
from parafree.core.fixtures import exact_result, fixture_field
from parafree.core.grid_field import ScalarField, SpaceTimeGrid, q1_grid
from parafree.core.poly_ladder import (
    ParabolicPolynomial,
    complement_measure,
    cylinder_measure,
    decompose,
    density_decay,
    ladder,
    lp_bmo,
    normalize,
    pointwise_bmo,
    rescaled_half_complement,
    resolution_limit,
    taylor2,
)


@pytest.fixture
def caloric(linear_id, q1_grid_1d):
    """u = x²/2 + t on Q₁ with 65 nodes across."""
    return fixture_field(q1_grid_1d, linear_id, "caloric")


def test_polynomial_residual_and_norm(linear_id):
    """Test H(P) = F(M0) - c0 and |P̃| = |(M0, c0)|."""
    poly = ParabolicPolynomial(0.0, (0.0,), SymMatrix.from_array(np.array([[3.0]])), 4.0)
    assert poly.residual(linear_id) == pytest.approx(-1.0)
    assert not poly.is_compatible(linear_id)
    assert poly.tilde_norm() == pytest.approx(5.0)


def test_polynomial_rescaling():
    """Test P(r·y, r²·τ)/r² keeps M0 and c0 and scales a0 and b0."""
    poly = ParabolicPolynomial(1.0, (2.0,), SymMatrix.from_array(np.array([[1.0]])), 3.0)
    scaled = poly.rescaled(0.5)
    assert scaled.a0 == pytest.approx(4.0)
    assert scaled.b0 == pytest.approx((4.0,))
    y, tau = np.array([[0.3]]), np.array([-0.2])
    expected = poly.evaluate(0.5 * y, 0.25 * tau) / 0.25
    assert scaled.evaluate(y, tau) == pytest.approx(expected)


def test_add_scaled_composes_steps():
    """Test P + r²·S(x/r, t/r²) evaluated pointwise."""
    base = ParabolicPolynomial.zero(1)
    step = ParabolicPolynomial(1.0, (1.0,), SymMatrix.from_array(np.array([[2.0]])), 1.0)
    combined = base.add_scaled(step, 0.5)
    x, t = np.array([[0.4]]), np.array([-0.1])
    expected = 0.25 * step.evaluate(x / 0.5, t / 0.25)
    assert combined.evaluate(x, t) == pytest.approx(expected)


def test_taylor2_of_caloric(caloric):
    """Test the Taylor polynomial at the origin of x²/2 + t."""
    poly = taylor2(caloric)
    assert poly.a0 == pytest.approx(0.0, abs=1e-12)
    assert poly.hessian[0, 0] == pytest.approx(1.0)
    assert poly.c0 == pytest.approx(1.0)


def test_taylor2_needs_interior_node(caloric):
    """Test that the spatial boundary has no Taylor expansion."""
    with pytest.raises(RegionError):
        taylor2(caloric, [1.0], -0.5)


def test_normalize(caloric, linear_id):
    """Test that R < 1 is refused and R = 1 is the identity."""
    with pytest.raises(ValueError):
        normalize(caloric, linear_id, 0.5)
    same, op = normalize(caloric, linear_id, 1.0)
    assert same is caloric and op is linear_id


def test_ladder_recovers_caloric_polynomial(caloric, linear_id):
    """Test that the ladder finds the caloric polynomial in one step and keeps it."""
    result = ladder(caloric, linear_id)
    assert len(result.rows) == 4
    assert result.rows[0].error == pytest.approx(1.0)
    assert all(row.error <= 1e-9 for row in result.rows[1:])
    assert all(row.poly.is_compatible(linear_id) for row in result.rows)
    assert all(result.contraction_flags())
    assert not result.truncated
    assert result.rows[-1].poly.hessian[0, 0] == pytest.approx(1.0)
    assert "contraction: True" in result.to_text()


def test_ladder_clips_to_resolution(caloric, linear_id):
    """Test that k_max beyond ρ^k ≥ 4h is clipped and noted."""
    assert resolution_limit(caloric.grid, 0.5) == 3
    result = ladder(caloric, linear_id, k_max=10)
    assert len(result.rows) == 4
    assert any("clipped" in note for note in result.notes)


def test_ladder_preconditions(caloric, linear_id):
    """Test the unit-sup precondition and the range of rho."""
    doubled = ScalarField(caloric.grid, 2.0 * caloric.values)
    with pytest.raises(PreconditionError):
        ladder(doubled, linear_id)
    with pytest.raises(ValueError, match="rho"):
        ladder(caloric, linear_id, rho=1.0)


def test_ladder_member_snaps_on_log_scale(caloric, linear_id):
    """Test the member lookup by radius."""
    result = ladder(caloric, linear_id)
    assert result.member(0.26).k == 2
    assert result.member(2.0).k == 0
    assert result.member(1e-6).k == 3


def test_pointwise_bmo_vanishes_after_first_step(caloric, linear_id):
    """Test sup|u - P_r|/r² is zero once the ladder has the polynomial."""
    rows = pointwise_bmo(caloric, linear_id, [0.5, 0.25])
    assert [row.k for row in rows] == [1, 2]
    assert all(row.ratio <= 1e-8 for row in rows)


def test_lp_bmo_means(caloric, linear_id):
    """Test the mean deviation from P_0 = 0 is √2 and later members give 0."""
    result = ladder(caloric, linear_id)
    rows = lp_bmo(caloric, result, p=2.0)
    assert rows[0].k == 0
    assert rows[0].mean == pytest.approx(math.sqrt(2.0), abs=1e-8)
    assert all(row.mean <= 1e-8 for row in rows[1:])
    with pytest.raises(ValueError):
        lp_bmo(caloric, result, p=0.5)


def test_density_identity_and_measures(linear_id, q1_grid_1d):
    """Test the scaling identity and the complement measure of the half-space."""
    result = exact_result(q1_grid_1d, linear_id, "halfspace", Mode.A)
    report = density_decay(result, [1.0, 0.5, 0.25])
    assert len(report.identity_errors) == 3
    assert max(report.identity_errors) <= 1e-12
    assert complement_measure(result, 1.0) == pytest.approx(1.0, abs=0.1)
    assert cylinder_measure(q1_grid_1d, 1.0) == pytest.approx(2.0, abs=0.1)
    # a half-space complement keeps half of every cylinder, up to ring nodes
    assert all(0.9 <= row.ratio <= 1.25 for row in report.rows)
    assert not any(row.decays(1) for row in report.rows)
    assert "identity_factor: 8" in report.to_text()
    assert report.branch == "undetermined"


def test_density_identity_on_skewed_time_steps(linear_id):
    """Test that the rescaled and direct counts differ by less than the shell when dt does not scale onto itself."""
    # dt = 1/854 here, while the scale-1/2 image uses 214 steps on [-1, 0]
    grid = SpaceTimeGrid.build(1, 1.0, 33, -1.0, 0.0, 0.3)
    result = exact_result(grid, linear_id, "halfspace", Mode.A)
    half, shell = rescaled_half_complement(result, 0.5)
    # 5 complement nodes on each of 54 layers of width 1/214, spacing 1/8
    assert half == pytest.approx(270 * 0.125 / 214)
    assert shell == pytest.approx(58 * 0.125 / 214)
    direct = complement_measure(result, 0.25)
    assert direct == pytest.approx(1080 / 854)

    report = density_decay(result, [0.5])
    assert report.identity_errors[0] == pytest.approx(abs(1080 / 854 - 270 / 214))
    assert report.identity_errors[0] > 1e-3
    assert report.identity_tolerances[0] == pytest.approx(58 / 214)
    assert report.identity_holds
    assert "identity_holds: True" in report.to_text()


def test_decompose_polynomial_has_no_remainder(linear_id):
    """Test w = 0 when u_r is a compatible polynomial and P_r = 0."""
    grid = q1_grid(1, 33)
    result = exact_result(grid, linear_id, "polynomial", Mode.A)
    parts = decompose(result, ParabolicPolynomial.zero(1), linear_id, 0.5)
    assert parts.sup_w <= 1e-9
    assert parts.complement >= 0.0
