"""Tests for the FreeBoundaryStudy facade and its summary report."""

from pathlib import Path

from parafree.api import STATEMENTS, FreeBoundaryStudy, StatementOutcome, format_summary
from parafree.config import AnalysisConfig
from parafree.core.field_io import read_csv
from parafree.core.grid_field import SpaceTimeGrid


def _outcomes() -> list[StatementOutcome]:
    return [
        StatementOutcome("thickness", "pass", "min delta_r=1.0 vs epsilon=0.5", Path("out/thickness.csv")),
        StatementOutcome("ladder", "report"),
    ]


def test_summary_uses_default_statement_labels():
    """Test that each summary line names the statement, the estimator and the status."""
    text = format_summary(_outcomes(), ["command: analyze"])
    lines = text.splitlines()
    assert lines[0] == "command: analyze"
    assert lines[1] == f"{STATEMENTS['thickness']} [thickness]: pass (min delta_r=1.0 vs epsilon=0.5)"
    assert lines[2] == f"  csv: {Path('out/thickness.csv')}"
    assert lines[3] == f"{STATEMENTS['ladder']} [ladder]: report"


def test_summary_uses_configured_statement_labels():
    """Test that configured labels replace the defaults and unnamed estimators keep theirs."""
    names = {"thickness": "Thickness of the contact set"}
    lines = format_summary(_outcomes(), names=names).splitlines()
    assert lines[0].startswith("Thickness of the contact set [thickness]: pass")
    assert lines[2] == f"{STATEMENTS['ladder']} [ladder]: report"
    assert StatementOutcome("custom", "fail").to_string() == "custom [custom]: fail"


def test_study_thickness_goes_through_the_report(tmp_path, linear_id):
    """Test that a truncated thickness window is a flagged CSV row and does not fail the statement."""
    grid = SpaceTimeGrid.build(1, 1.0, 65, -0.15, 0.15, 0.25)
    analysis = AnalysisConfig(estimators=["thickness"], points=[[0.0, 0.0], [0.0, 0.1]],
                              scales=[0.25], epsilon=0.5)
    study = FreeBoundaryStudy(linear_id, grid, mode="A", fixture="halfspace", analysis=analysis,
                              output_dir=str(tmp_path), workers=1)
    outcomes = study.analyze(study.reference())
    assert [o.estimator for o in outcomes] == ["thickness"]
    assert outcomes[0].status == "pass"
    rows = read_csv(outcomes[0].csv_path)
    assert list(rows[0]) == ["point", "r", "delta_r", "t_slice", "flag"]
    assert rows[0]["flag"] == "" and float(rows[0]["delta_r"]) == 1.0
    assert rows[1]["point"] == "0.0 0.1"
    assert rows[1]["flag"].startswith("RegionError")
