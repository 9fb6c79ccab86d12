import csv
import io
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from orbit_thermo.cli import PARTITION_COLUMNS, SCAN_COLUMNS, VERIFY_COLUMNS, cli
from orbit_thermo.orbits import Su2Sphere


@pytest.fixture
def runner():
    return CliRunner()


def test_families(runner):
    result = runner.invoke(cli, ["families"])
    assert result.exit_code == 0
    assert "sl2-nilpotent" in result.stdout
    assert "algebras:" in result.stdout


def test_check_json(runner):
    result = runner.invoke(cli, ["check", "su2"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["schema"] == 1
    assert report["algebra"] == "su2"
    assert report["weyl_order"] == 2


def test_check_unknown_algebra(runner):
    result = runner.invoke(cli, ["check", "nope"])
    assert result.exit_code == 1


def test_classify(runner):
    result = runner.invoke(cli, ["classify", "sl2", "--functional", "0,2,-2", "--seed", "5"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["gibbs_exists"] is True
    assert report["lambda_status"] == "in_cmin_star"


def test_classify_wrong_length(runner):
    result = runner.invoke(cli, ["classify", "sl2", "--functional", "1,2"])
    assert result.exit_code == 1


def test_partition_csv(runner):
    result = runner.invoke(cli, ["partition", "--family", "su2:1", "--at", "0,0,1", "--output", "csv"])
    assert result.exit_code == 0
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == PARTITION_COLUMNS
    row = dict(zip(PARTITION_COLUMNS, rows[1]))
    assert float(row["z"]) == pytest.approx(2 * math.sinh(1.0))
    form = Su2Sphere(1.0).closed_form([0.0, 0.0, 1.0])
    assert [float(v) for v in row["q"].split()] == pytest.approx(-form.grad, abs=1e-9)
    spectrum = [float(v) for v in row["fisher_eigenvalues"].split()]
    assert spectrum == pytest.approx(np.linalg.eigvalsh(form.hess), abs=1e-9)


def test_partition_grid_csv(runner):
    args = ["partition", "--family", "sl2-nilpotent", "--grid", "1,0,0;2,1,0;1,2,0", "--output", "csv"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == PARTITION_COLUMNS
    assert len(rows) == 4
    assert [row[PARTITION_COLUMNS.index("finite")] for row in rows[1:]] == ["True", "True", "False"]
    assert float(rows[1][PARTITION_COLUMNS.index("z")]) == pytest.approx(2 * math.pi)
    assert len(rows[2][PARTITION_COLUMNS.index("fisher_eigenvalues")].split()) == 3


def test_partition_grid_json(runner):
    result = runner.invoke(cli, ["partition", "--family", "su2:1", "--grid", "0,0,1;0,0,2"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["schema"] == 1
    assert [p["z"] for p in report["points"]] == pytest.approx([2 * math.sinh(1.0), math.sinh(2.0)])


@pytest.mark.parametrize("where", [[], ["--at", "0,0,1", "--grid", "0,0,1;0,0,2"]])
def test_partition_needs_one_location(runner, where):
    result = runner.invoke(cli, ["partition", "--family", "su2:1"] + where)
    assert result.exit_code == 1


def test_partition_rejects_method(runner):
    result = runner.invoke(cli, ["partition", "--family", "su2:1", "--at", "0,0,1", "--method", "simpson"])
    assert result.exit_code == 1


def test_verify_csv(runner):
    result = runner.invoke(cli, ["verify", "--family", "su2:1", "--grid", "0,0,1;0,0,2", "--output", "csv"])
    assert result.exit_code == 0
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == VERIFY_COLUMNS
    assert len(rows) == 3
    assert all(row[-1] == "True" for row in rows[1:])


def test_scan_csv(runner):
    result = runner.invoke(cli, ["scan", "--family", "sl2-nilpotent", "--grid", "2,1,0;1,2,0", "--output", "csv"])
    assert result.exit_code == 0
    rows = list(csv.reader(io.StringIO(result.stdout)))
    assert rows[0] == SCAN_COLUMNS
    assert [row[SCAN_COLUMNS.index("observed")] for row in rows[1:]] == ["finite", "divergent"]


def test_csv_not_available_for_check(runner):
    result = runner.invoke(cli, ["check", "sl2", "--output", "csv"])
    assert result.exit_code == 1


def test_expect_file(runner, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"gibbs_exists": True, "weyl_order": 2}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gibbs_exists": False}))
    args = ["classify", "su2", "--functional", "0,0,1"]
    assert runner.invoke(cli, ["check", "su2", "--expect", str(good)]).exit_code == 2
    assert runner.invoke(cli, args + ["--expect", str(bad)]).exit_code == 2
    good.write_text(json.dumps({"gibbs_exists": True}))
    assert runner.invoke(cli, args + ["--expect", str(good)]).exit_code == 0


@pytest.mark.parametrize("tol", ["dual_tol", "dual_tol=abc", "dual_tol=-1", "no_such_key=1"])
def test_bad_tolerance(runner, tol):
    result = runner.invoke(cli, ["check", "sl2", "--tol", tol])
    assert result.exit_code == 1
