"""Tests for the binary field format, CSV tables and report text."""

import numpy as np
import pytest

from parafree.core.field_io import (
    MAGIC,
    export_field_csv,
    format_header,
    parse_header,
    parse_report,
    read_csv,
    read_field,
    read_mask,
    write_csv,
    write_field,
    write_mask,
    write_report,
)
from parafree.core.grid_field import ScalarField, SpaceTimeGrid


@pytest.fixture
def field():
    grid = SpaceTimeGrid.build(2, 1.0, 5, -0.3, 0.1, 1.0)
    return ScalarField.from_function(grid, lambda x, t: np.sin(x[..., 0]) * np.exp(t) + x[..., 1] / 3.0)


def test_field_round_trip_is_bit_exact(tmp_path, field):
    """Test that a written field reads back with identical grid and bits."""
    path = write_field(tmp_path / "u.field", field)
    loaded = read_field(path)
    assert loaded.grid == field.grid
    assert np.array_equal(loaded.values, field.values)


def test_header_line(field):
    """Test the header starts with the magic string and parses back to the grid."""
    line = format_header(field.grid)
    assert line.startswith(MAGIC)
    assert parse_header(line) == field.grid


def test_bad_magic_raises(tmp_path):
    """Test that a file without the magic header is refused."""
    path = tmp_path / "bad.field"
    path.write_bytes(b"NOT-A-FIELD; n=1;\n" + b"\0" * 8)
    with pytest.raises(ValueError, match="Not a PARAFREE-FIELD"):
        read_field(path)


def test_missing_header_field_raises():
    """Test that a header without nt is refused."""
    with pytest.raises(ValueError, match="missing"):
        parse_header(f"{MAGIC}; n=1; nx=5; L=1.0; t0=0.0; t1=1.0;")


def test_payload_size_mismatch_raises(tmp_path, field):
    """Test that a truncated payload is refused."""
    path = write_field(tmp_path / "u.field", field)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_field(path)


def test_missing_field_file(tmp_path):
    """Test that a missing file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        read_field(tmp_path / "nope.field")


def test_mask_round_trip(tmp_path, field):
    """Test that masks are stored as 0/1 fields."""
    mask = field.values > 0.2
    path = write_mask(tmp_path / "mask.field", field.grid, mask)
    assert np.array_equal(read_mask(path), mask)


def test_csv_floats_reparse_exactly(tmp_path):
    """Test that floats are written with repr."""
    value = 0.1 + 0.2
    path = write_csv(tmp_path / "t.csv", ["k", "value", "flag"], [[1, value, ""], [2, 1e-300, "thin"]])
    rows = read_csv(path)
    assert float(rows[0]["value"]) == value
    assert rows[1]["flag"] == "thin"
    assert rows[0]["flag"] == ""


def test_export_field_csv(tmp_path, field):
    """Test one row per node with t, x1, x2, u columns."""
    path = export_field_csv(tmp_path / "u.csv", field)
    rows = read_csv(path)
    assert list(rows[0]) == ["t", "x1", "x2", "u"]
    assert len(rows) == field.values.size
    assert float(rows[0]["u"]) == field.values.ravel()[0]


def test_report_round_trip(tmp_path):
    """Test key: value parsing of a written report."""
    path = write_report(tmp_path / "r.txt", "a: 1\nstatus: pass\n\nnote: x: y")
    parsed = parse_report(path.read_text())
    assert parsed["status"] == "pass"
    assert parsed["note"] == "x: y"
