"""Tests for YAML run configuration."""

import pytest

from parafree.config import ConfigError, RunConfig, worker_count
from parafree.core.elliptic_ops import OperatorKind
from parafree.core.fb_solver import Mode


def _minimal(**overrides) -> dict:
    data = {
        "operator": {"kind": "linear", "n": 1, "lambda0": 1.0, "lambda1": 1.0, "matrices": [[1.0]]},
        "grid": {"nx": 33, "t_start": -0.05, "t_end": 0.0},
    }
    data.update(overrides)
    return data


def test_minimal_config_defaults(tmp_path):
    """Test that a minimal config fills problem and analysis defaults."""
    config = RunConfig.from_dict(_minimal(), tmp_path)
    assert config.problem.fixture == "halfspace"
    assert config.problem.solve_mode == Mode.A
    assert config.analysis.scales == [0.25, 0.125, 0.0625]
    assert config.analysis.direction(1) == [1.0, 0.0]
    assert config.output == str(tmp_path / "parafree-out")
    grid = config.build_grid()
    assert grid.nx == 33 and grid.n == 1
    assert config.build_operator().kind == OperatorKind.LINEAR


def test_nested_matrices_are_flattened(tmp_path):
    """Test that row-major nested matrices are accepted for a Bellman operator."""
    data = _minimal(operator={
        "kind": "bellman", "n": 2, "lambda0": 1.0, "lambda1": 2.0,
        "matrices": [[[1.0, 0.0], [0.0, 1.0]], [2.0, 0.0, 0.0, 1.0]],
    })
    config = RunConfig.from_dict(data, tmp_path)
    assert config.operator.matrices == [[1.0, 0.0, 0.0, 1.0], [2.0, 0.0, 0.0, 1.0]]
    assert len(config.build_operator().matrices) == 2


def test_inverted_ellipticity_names_the_field(tmp_path):
    """Test that lambda0 > lambda1 is reported on operator.lambda0."""
    data = _minimal(operator={"kind": "pucci_plus", "n": 1, "lambda0": 2.0, "lambda1": 1.0})
    with pytest.raises(ConfigError, match="operator.lambda0"):
        RunConfig.from_dict(data, tmp_path)


def test_matrix_outside_ellipticity_range(tmp_path):
    """Test that coefficient eigenvalues must lie in [lambda0, lambda1]."""
    data = _minimal(operator={"kind": "linear", "n": 1, "lambda0": 1.0, "lambda1": 2.0, "matrices": [[3.0]]})
    with pytest.raises(ConfigError, match="eigenvalues"):
        RunConfig.from_dict(data, tmp_path)


def test_unknown_key(tmp_path):
    """Test that unknown keys are refused with their dotted name."""
    data = _minimal()
    data["grid"]["foo"] = 1
    with pytest.raises(ConfigError, match="grid.foo: unknown key"):
        RunConfig.from_dict(data, tmp_path)


def test_missing_required_field(tmp_path):
    """Test that a missing grid.nx is named."""
    data = _minimal(grid={"t_start": -1.0})
    with pytest.raises(ConfigError, match="grid.nx"):
        RunConfig.from_dict(data, tmp_path)


def test_problem_validation(tmp_path):
    """Test mode, fixture and damping checks."""
    with pytest.raises(ConfigError, match="problem.mode"):
        RunConfig.from_dict(_minimal(problem={"mode": "C"}), tmp_path)
    with pytest.raises(ConfigError, match="problem.fixture"):
        RunConfig.from_dict(_minimal(problem={"fixture": "paraboloid"}), tmp_path)
    with pytest.raises(ConfigError, match="problem.damping"):
        RunConfig.from_dict(_minimal(problem={"damping": 1.5}), tmp_path)
    with pytest.raises(ConfigError, match="problem.field_file"):
        RunConfig.from_dict(_minimal(problem={"field_file": "missing.field"}), tmp_path)


def test_analysis_validation(tmp_path):
    """Test unknown estimators, point lengths and the unit direction."""
    with pytest.raises(ConfigError, match="unknown estimator"):
        RunConfig.from_dict(_minimal(analysis={"estimators": ["curvature"]}), tmp_path)
    with pytest.raises(ConfigError, match="analysis.points"):
        RunConfig.from_dict(_minimal(analysis={"points": [[0.0]]}), tmp_path)
    with pytest.raises(ConfigError, match="unit vector"):
        RunConfig.from_dict(_minimal(analysis={"e": [1.0, 1.0]}), tmp_path)


def test_statement_names(tmp_path):
    """Test that summary labels map known estimators to non-empty strings."""
    names = {"thickness": "Thickness of the contact set", "ladder": "Approximation by polynomials"}
    config = RunConfig.from_dict(_minimal(analysis={"statement_names": names}), tmp_path)
    assert config.analysis.statement_names == names
    assert RunConfig.from_dict(_minimal(), tmp_path).analysis.statement_names == {}
    with pytest.raises(ConfigError, match="expected a mapping"):
        RunConfig.from_dict(_minimal(analysis={"statement_names": ["thickness"]}), tmp_path)
    with pytest.raises(ConfigError, match="unknown estimator 'curvature'"):
        RunConfig.from_dict(_minimal(analysis={"statement_names": {"curvature": "x"}}), tmp_path)
    with pytest.raises(ConfigError, match=r"statement_names\.thickness"):
        RunConfig.from_dict(_minimal(analysis={"statement_names": {"thickness": "  "}}), tmp_path)


def test_missing_file():
    """Test that a missing config file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        RunConfig.from_yaml("/nonexistent/run.yaml")


def test_invalid_yaml(tmp_path):
    """Test that unparsable YAML is a ConfigError."""
    path = tmp_path / "run.yaml"
    path.write_text("operator: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        RunConfig.from_yaml(str(path))


def test_yaml_round_trip(tmp_path):
    """Test to_yaml then from_yaml reproduces the config."""
    config = RunConfig.from_dict(_minimal(analysis={
        "points": [[0.0, -0.01]], "k_max": 2, "statement_names": {"blowup": "Blow-up limits"},
    }), tmp_path)
    path = tmp_path / "saved.yaml"
    config.to_yaml(str(path))
    loaded = RunConfig.from_yaml(str(path))
    assert loaded.to_dict() == config.to_dict()


def test_worker_count(monkeypatch):
    """Test PARAFREE_THREADS parsing."""
    monkeypatch.setenv("PARAFREE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("PARAFREE_THREADS", "zero")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("PARAFREE_THREADS")
    assert worker_count() >= 1
