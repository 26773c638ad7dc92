import csv
import json
import os
import subprocess
import sys

import pytest

from spherecomp import cli, pipeline
from spherecomp.expmaps import RefocusReport
from spherecomp.pipeline import validate_report

from conftest import ROOT

FAST = """
[sampler]
count = 64
[quadrature]
nodes = 65
[lipschitz]
pairs = 2000
directions = 256
conjugation_points = 100
"""


def scenario(tmp_path, models, extra=""):
    path = tmp_path / "scenario.toml"
    path.write_text(models + FAST + extra)
    return str(path)


ROUND_BUMP = '[model1]\nkind="warped-round"\n[model2]\nkind="warped-bump"\nbeta=1e-4\n'


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name, code", [
    ("round_vs_round", 0), ("round_vs_bump", 0), ("round_vs_synthetic", 2),
    ("bad_isometry", 1), ("perturbed_sphere", 2), ("anisotropic_n3", 2),
])
def test_shipped_scenarios_exit_codes(name, code, capsys, tmp_path):
    out = tmp_path / "r.json"
    got, _, err = run(["run", "--config", f"{ROOT}/configs/{name}.toml", "--out", str(out)], capsys)
    assert got == code
    if code == 1:
        assert "orthogonal" in err and not out.exists()
    else:
        rep = json.loads(out.read_text())
        validate_report(rep)
        assert rep["exit_code"] == code and not rep["violations"]


def test_conjugate_point_rejected(tmp_path, capsys):
    cfg = scenario(tmp_path, '[model1]\nkind="synthetic-constant"\nkappa=0.25\n'
                             '[model2]\nkind="warped-round"\n')
    code, out, err = run(["keylemma", "--config", cfg], capsys)
    assert code == 4
    rep = json.loads(out)
    assert rep["verdict"] == "MODEL_REJECTED" and "conjugate" in rep["error"]


def test_refocus_failure_rejected(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(pipeline, "refocusing_check", lambda m, **kw: RefocusReport(False, 0.2, 64))
    cfg = scenario(tmp_path, '[model1]\nkind="warped-round"\n'
                             '[model2]\nkind="charted-perturbed"\namplitude=1e-3\n')
    code, out, _ = run(["run", "--config", cfg], capsys)
    assert code == 4 and "refocus" in json.loads(out)["error"]


def test_violation_sentinel(tmp_path, capsys, monkeypatch):
    real = pipeline.lipschitz_estimate

    def broken(*a, **kw):
        est = real(*a, **kw)
        est.final_bound_ok = False
        return est
    monkeypatch.setattr(pipeline, "lipschitz_estimate", broken)
    code, out, _ = run(["compare", "--config", scenario(tmp_path, ROUND_BUMP)], capsys)
    rep = json.loads(out)
    assert code == 3 and rep["verdict"] == "INEQUALITY_VIOLATION" and "final_bound" in rep["violations"]


def test_missing_config_is_an_error(capsys):
    code, _, err = run(["run", "--config", "/nonexistent.toml"], capsys)
    assert code == 1 and "error" in err


def test_lambda_command(tmp_path, capsys):
    csv_path, rep_path = tmp_path / "lam.csv", tmp_path / "lam.json"
    code, _, _ = run(["lambda", "--config", scenario(tmp_path, ROUND_BUMP), "--out", str(csv_path),
                      "--report", str(rep_path)], capsys)
    assert code == 0
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["t", "lambda"] and len(rows) == 66
    rep = json.loads(rep_path.read_text())
    assert rep["stages"] == ["lambda"] and rep["lambda_integral"] > 0


def test_constants_command(capsys):
    code, out, _ = run(["constants", "--config", f"{ROOT}/configs/round_vs_round.toml",
                        "--deterministic"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["constants"]["c1"] == pytest.approx(1.0)
    assert "timings" not in rep


def test_compare_curves(tmp_path, capsys):
    curves = tmp_path / "curves.csv"
    code, out, _ = run(["compare", "--config", f"{ROOT}/configs/round_vs_bump.toml",
                        "--curves", str(curves)], capsys)
    assert code == 0
    rows = list(csv.reader(curves.open()))
    assert rows[0] == ["t", "lambda", "phi_max", "envelope_max"]
    assert len(rows) - 1 == 257
    assert "timings" in json.loads(out)


def test_mollify_check_with_grid(tmp_path, capsys):
    grid = tmp_path / "grid.csv"
    cfg = scenario(tmp_path, '[model1]\nkind="warped-round"\n[model2]\nkind="warped-bump"\nbeta=1e-3\n',
                   "[mollifier]\ngrid = 17\n")
    code, out, _ = run(["mollify-check", "--config", cfg, "--grid-csv", str(grid)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["mollifier"]["pass"]
    assert len(grid.read_text().splitlines()) == 17 * 17 + 1


def test_skips_are_reported(tmp_path, capsys):
    cfg = scenario(tmp_path, '[model1]\nkind="warped-round"\n[model2]\nkind="synthetic-constant"\nkappa=1.02\n')
    code, out, _ = run(["run", "--config", cfg], capsys)
    rep = json.loads(out)
    assert code == 2 and set(rep["skipped"]) == {"compare", "mollify"}


def test_sweep(tmp_path, capsys):
    cfg = scenario(tmp_path, ROUND_BUMP)
    outdir = tmp_path / "sweep"
    code, _, _ = run(["sweep", "--config", cfg, "--sweep", "model2.beta=1e-4:1e-2:3",
                      "--outdir", str(outdir), "--stage", "keylemma", "--deterministic"], capsys)
    assert code == 0
    rows = list(csv.DictReader((outdir / "sweep.csv").open()))
    assert len(rows) == 3 and len(list(outdir.glob("point_*.json"))) == 3
    assert [r["hypothesis_met"] for r in rows] == ["True", "False", "False"]
    lam = [float(r["lambda_integral"]) for r in rows]
    assert lam[0] < lam[1] < lam[2]


def test_bad_sweep_spec(tmp_path, capsys):
    code, _, err = run(["sweep", "--config", scenario(tmp_path, ROUND_BUMP), "--sweep", "beta=1:2",
                        "--outdir", str(tmp_path)], capsys)
    assert code == 1 and "sweep" in err


def test_console_script_entry_point(tmp_path):
    env = dict(os.environ, SPHERECOMP_WORKERS="2")
    proc = subprocess.run([sys.executable, "-m", "spherecomp.cli", "constants", "--config",
                           scenario(tmp_path, ROUND_BUMP), "--deterministic"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    validate_report(json.loads(proc.stdout))
