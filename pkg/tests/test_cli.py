"""CLI tests: drive main() in-process and parse the emitted JSON."""

import json
from pathlib import Path

import pytest

from ccdist.cli import main, parse_args, parse_masses
from ccdist.errors import ReportError, UsageError
from ccdist.services.report_service import (
    SCHEMA_VERSION,
    build_report,
    collinear_from_payload,
    emit_report,
    load_report,
    trapezoid_from_payload,
)


def _run(argv, tmp_path: Path, name="report.json"):
    output = tmp_path / name
    code = main(argv + ["--output", str(output)])
    data = json.loads(output.read_text()) if output.exists() else None
    return code, data


def test_parse_inline_masses():
    config = parse_args(["solve-trapezoid", "--masses", "1,1,1,1,1"])
    assert config.command == "solve-trapezoid"
    assert config.masses.masses == [1.0] * 5
    assert config.seed == 0


def test_parse_seed_and_n():
    config = parse_args(["enumerate-moulton", "--masses", "1,2,3,4", "--seed", "7"])
    assert config.masses.n == 4
    assert config.seed == 7


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("CCDIST_SEED", "42")
    assert parse_args(["verify-identities", "--trials", "3"]).seed == 42


def test_non_positive_mass_is_a_usage_error():
    with pytest.raises(UsageError, match="mass must be positive"):
        parse_masses("1,0,1")


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-trapezoid", "--masses", "1,x,1"],
        ["no-such-command"],
        [],
        ["solve-collinear", "--masses", "1,2,3", "--ordering", "1,1,2"],
        ["uniqueness-probe", "--masses", "1,1,1,1,1", "--starts", "1"],
    ],
)
def test_usage_errors_exit_3(argv, capsys):
    assert main(argv) == 3
    assert "error" in capsys.readouterr().err


def test_masses_from_json_file(tmp_path):
    path = tmp_path / "masses.json"
    path.write_text(json.dumps({"masses": [1, 2, 3]}))
    config = parse_args(["solve-collinear", "--input", str(path)])
    assert config.masses.masses == [1.0, 2.0, 3.0]


def test_solve_collinear_report(tmp_path):
    code, data = _run(["solve-collinear", "--masses", "1,1,1"], tmp_path)
    assert code == 0
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["command"] == "solve-collinear"
    assert data["masses"] == [1.0, 1.0, 1.0]
    assert set(data["solution"]["distances"]) == {"r_12", "r_13", "r_23"}
    assert data["provenance"]["seed"] == 0
    assert "generated_at" in data["provenance"]

    solution = collinear_from_payload(data["solution"])
    assert solution.ordering.perm == (1, 2, 3)
    assert solution.gaps == data["solution"]["gaps"]


def test_enumerate_moulton_report(tmp_path):
    code, data = _run(["enumerate-moulton", "--masses", "1,2,3"], tmp_path)
    assert code == 0
    assert data["count"] == 3
    assert len(data["solutions"]) == 3


def test_solve_trapezoid_family_report(tmp_path):
    code, data = _run(["solve-trapezoid", "--family-b", "1.2"], tmp_path)
    assert code == 0
    solution = data["solution"]
    assert set(solution["distances"]) == {
        "r_12", "r_13", "r_14", "r_15", "r_23", "r_24", "r_25", "r_34", "r_35", "r_45"
    }
    assert set(solution["multipliers"]) == {"delta", "omega", "theta"}
    assert len(solution["spectrum"]["zeta"]) == 10
    assert solution["symmetry"]["class"] == "symmetric_isosceles"

    restored = trapezoid_from_payload(solution)
    assert restored.r.entries == [solution["distances"][k] for k in sorted(solution["distances"])]
    assert restored.multipliers.delta == solution["multipliers"]["delta"]
    assert restored.flags.passed


def test_solve_trapezoid_equal_masses_fails(tmp_path, capsys):
    code, data = _run(["solve-trapezoid", "--masses", "1,1,1,1,1"], tmp_path)
    assert code in (1, 2)
    assert data is None
    assert "error" in capsys.readouterr().err


def test_make_fixture_then_cross_validate(tmp_path):
    fixture = tmp_path / "family.json"
    assert main(["make-fixture", "--family-b", "1.2", "--output", str(fixture)]) == 0
    document = load_report(str(fixture))
    assert document["provenance"]["oracle"]["passed"]
    assert document["family"]["base_ratio"] == 1.2

    code, data = _run(["cross-validate", "--input", str(fixture)], tmp_path, "check.json")
    assert code == 0
    assert data["cross_validation"]["passed"]
    assert data["cross_validation"]["oracle"]["lambda"] > 0


def test_reports_are_deterministic(tmp_path):
    _, first = _run(["solve-collinear", "--masses", "1,2,3,4"], tmp_path, "a.json")
    _, second = _run(["solve-collinear", "--masses", "1,2,3,4"], tmp_path, "b.json")
    first["provenance"].pop("generated_at")
    second["provenance"].pop("generated_at")
    assert first == second


def test_verify_identities_report(tmp_path):
    code, data = _run(["verify-identities", "--trials", "20", "--seed", "3"], tmp_path)
    assert code == 0
    assert data["fuzz"]["seed"] == 3
    assert data["fuzz"]["failures"] == []
    assert data["l_basis"]["rank"] == 6


def test_uniqueness_probe_report(tmp_path, monkeypatch):
    monkeypatch.setattr("ccdist.cli.get_probe_box", lambda: ((1.15, 1.25), (2.05, 2.25), 0.02))
    code, data = _run(["uniqueness-probe", "--family-b", "1.2", "--starts", "4"], tmp_path)
    assert code == 0
    assert data["cluster_count"] == 1
    assert data["probe"]["starts"] == 4


def test_report_provenance_summarizes_run_events(tmp_path):
    code, data = _run(["solve-trapezoid", "--family-b", "1.2"], tmp_path)
    assert code == 0
    log = data["provenance"]["log"]
    assert log["events"] >= 1
    assert log["levels"]["success"] >= 1
    assert log["types"]["solver"] >= 1
    assert log["warnings"] == []


def test_non_finite_values_are_not_written(tmp_path):
    report = build_report("solve-collinear", None, {"residual_norm": float("nan")})
    target = tmp_path / "nan.json"
    with pytest.raises(ReportError, match="strict JSON"):
        emit_report(report, str(target))
    assert not target.exists()
