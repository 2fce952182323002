"""CLI subcommands: schemas, exit codes, determinism."""

import csv
import json

import numpy as np
import pytest

from finsler.cli import main


@pytest.fixture()
def euclidean_file(tmp_path):
    path = tmp_path / "euclidean.metric"
    path.write_text("dim = 2\nbuiltin = euclidean\n")
    return str(path)


@pytest.fixture()
def sphere_file(tmp_path):
    path = tmp_path / "sphere.metric"
    path.write_text("dim = 2\nbuiltin = sphere_round\n")
    return str(path)


def test_curvature_record_euclidean(euclidean_file, tmp_path, capsys):
    out = tmp_path / "record.json"
    code = main(
        [
            "curvature",
            "--metric",
            euclidean_file,
            "--x",
            "0,0",
            "--v",
            "1,0",
            "--u",
            "0,1",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["flag_curvature"] == pytest.approx(0.0, abs=1e-14)
    assert doc["L"] == 1.0
    for key in ("metric", "x", "v", "u", "g", "C", "Gamma", "N", "jacobi"):
        assert key in doc
    np.testing.assert_allclose(doc["g"], np.eye(2))


def test_curvature_with_predecessor(sphere_file, capsys):
    code = main(
        [
            "curvature",
            "--metric",
            sphere_file,
            "--x",
            "0.2,0.1",
            "--v",
            "1,0.2",
            "--u",
            "0.1,1",
            "--w",
            "0.5,-0.4",
        ]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["flag_curvature"] == pytest.approx(1.0, abs=1e-6)
    assert doc["flag_curvature_predecessor"] == pytest.approx(1.0, abs=1e-6)


def test_curvature_accepts_bare_builtin_names(capsys):
    code = main(
        ["curvature", "--metric", "euclidean", "--x", "0,0", "--v", "1,0", "--u", "0,1"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["flag_curvature"] == 0.0


def test_geodesic_csv_schema(sphere_file, tmp_path):
    out = tmp_path / "trace.csv"
    code = main(
        [
            "geodesic",
            "--metric",
            sphere_file,
            "--x0",
            "1,0",
            "--v0",
            "0,1",
            "--T",
            "6.5",
            "--tol",
            "1e-9",
            "--points",
            "40",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["t", "x1", "x2", "v1", "v2", "L"]
    assert len(rows) == 41
    energies = np.array([float(r[-1]) for r in rows[1:]])
    assert np.abs(energies - energies[0]).max() <= 1e-8 * energies[0]


def test_verify_default_passes_and_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(
        ["verify", "--plan", "default", "--seed", "7", "--samples", "3", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert "identities" in doc


def test_verify_reports_are_byte_identical_across_runs(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        code = main(
            ["verify", "--plan", "default", "--seed", "3", "--samples", "2", "--out", str(out)]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_plan_file(tmp_path, capsys):
    plan = {
        "metrics": ["euclidean", {"builtin": "funk", "dim": 2}],
        "samples": 2,
        "curve_samples": 1,
        "heavy_samples": 1,
        "seed": 5,
    }
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    assert main(["verify", "--plan", str(path)]) == 0


def test_verify_plan_rejects_unknown_keys(tmp_path, capsys):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"metrics": ["euclidean"], "retries": 3}))
    assert main(["verify", "--plan", str(path)]) == 1
    assert "unknown plan keys" in capsys.readouterr().err


def test_verify_failure_exit_code(tmp_path):
    plan = {
        "metrics": ["funk"],
        "samples": 2,
        "curve_samples": 1,
        "heavy_samples": 0,
        "seed": 5,
        "tolerances": {"koszul": 1e-30},
    }
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    assert main(["verify", "--plan", str(path)]) == 1


def test_table_sphere_grid(sphere_file, tmp_path):
    out = tmp_path / "table.csv"
    code = main(
        ["table", "--metric", sphere_file, "--grid", "5", "--out", str(out)]
    )
    assert code == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["x1", "x2", "L", "flag_curvature"]
    assert len(rows) == 26  # header + 5x5 grid
    ks = np.array([float(r[-1]) for r in rows[1:]])
    np.testing.assert_allclose(ks, 1.0, atol=1e-6)


def test_domain_error_gives_single_diagnostic_and_exit_1(tmp_path, capsys):
    path = tmp_path / "funk.metric"
    path.write_text("dim = 2\nbuiltin = funk\n")
    code = main(
        ["curvature", "--metric", str(path), "--x", "2,0", "--v", "1,0", "--u", "0,1"]
    )
    assert code == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("error:")


def test_unknown_metric_name_errors(capsys):
    code = main(
        ["curvature", "--metric", "nope", "--x", "0,0", "--v", "1,0", "--u", "0,1"]
    )
    assert code == 1
    assert "neither a file nor" in capsys.readouterr().err


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["curvature", "--metric", "euclidean", "--x", "0,0", "--nope", "1"])
    assert exc.value.code == 2


def test_bad_vector_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["curvature", "--metric", "euclidean", "--x", "a,b", "--v", "1,0", "--u", "0,1"])
    assert exc.value.code == 2


def test_verify_global_tolerance_override(tmp_path):
    # one knob: a loose global tolerance passes, an absurdly tight one fails
    assert main(["verify", "--plan", "default", "--seed", "2", "--samples", "2", "--tol", "1e-3"]) == 0
    assert main(["verify", "--plan", "default", "--seed", "2", "--samples", "2", "--tol", "1e-30"]) == 1


def test_verify_plan_file_seed_is_respected(tmp_path):
    plan = {"metrics": ["euclidean"], "samples": 2, "curve_samples": 1,
            "heavy_samples": 0, "seed": 123}
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    out = tmp_path / "rep.json"
    assert main(["verify", "--plan", str(path), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 123
    # explicit flag wins over the file
    assert main(["verify", "--plan", str(path), "--seed", "9", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 9
