"""Shared fixtures: small operators, grids and exact results."""

import numpy as np
import pytest

from parafree.core.elliptic_ops import Operator
from parafree.core.grid_field import SpaceTimeGrid, q1_grid


@pytest.fixture
def linear_id():
    """F(M) = trace(M) in 1D."""
    return Operator.linear([[1.0]], 1.0, 1.0)


@pytest.fixture
def linear_id_2d():
    return Operator.linear(np.eye(2), 1.0, 1.0)


@pytest.fixture
def pucci_plus_2d():
    return Operator.pucci_plus(1.0, 2.0, 2)


@pytest.fixture
def q1_grid_1d():
    """[-1, 1] × [-1, 0] with h = 1/32 and dt = h²."""
    return q1_grid(1, 65, kappa=1.0)


@pytest.fixture
def short_grid_1d():
    """[-1, 1] × [-0.07, 0] with h = 1/32, enough for Q_{1/4} at t = 0."""
    return SpaceTimeGrid.build(1, 1.0, 65, -0.07, 0.0, 1.0)
