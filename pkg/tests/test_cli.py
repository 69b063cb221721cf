"""Command line driver: flags, config merge, exit codes, determinism."""

import json

import numpy as np
import pytest

from fvar.cli import main
from fvar.io import read_json, read_panel_csv, sample_panel_path


def run(*argv):
    return main(list(argv))


def test_no_subcommand_is_usage_error(capsys):
    assert run() == 1
    assert "subcommand" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert run("frobnicate") == 1


def test_unknown_flag_is_usage_error(tmp_path):
    assert run("stability", "--a", "0", "--b", "0", "--wat", "1",
               "--out", str(tmp_path / "s.json")) == 1


def test_missing_seed_names_the_flag(tmp_path, capsys):
    code = run("simulate", "--model", "sparse", "--n", "4", "--p", "6",
               "--out", str(tmp_path / "p.csv"))
    assert code == 1
    assert "--seed" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0


def test_simulate_writes_panel_truth_and_reruns_identically(tmp_path):
    out = tmp_path / "panel.csv"
    truth = tmp_path / "truth.json"
    args = ("simulate", "--model", "sparse", "--n", "6", "--p", "6",
            "--seed", "3", "--out", str(out), "--truth", str(truth))
    assert run(*args) == 0

    panel = read_panel_csv(out)
    assert panel.values.shape == (6, 6, 50)

    tr = read_json(truth)
    assert tr["model"] == "sparse" and tr["p"] == 6 and tr["d"] == 5
    assert 0.5 <= tr["kappa"] <= 1.0
    support = np.array(tr["support"])
    assert support.shape == (6, 6)
    assert (support.sum(axis=1) == 5).all()
    assert np.array(tr["B"]).shape == (30, 30)
    assert tr["provenance"]["seed"] == 3

    first = out.read_bytes(), truth.read_bytes()
    assert run(*args) == 0
    assert (out.read_bytes(), truth.read_bytes()) == first


def test_simulate_latent_output_is_noise_free_copy(tmp_path):
    out = tmp_path / "obs.csv"
    lat = tmp_path / "lat.csv"
    assert run("simulate", "--model", "banded", "--n", "5", "--p", "3",
               "--seed", "2", "--out", str(out), "--latent-out", str(lat),
               "--noise-sd", "0") == 0
    np.testing.assert_array_equal(read_panel_csv(out).values,
                                  read_panel_csv(lat).values)


def test_stability_identity_model_measure_is_one(tmp_path):
    out = tmp_path / "stab.json"
    assert run("stability", "--a", "0", "--b", "0", "--grid", "256",
               "--out", str(out)) == 0
    rep = read_json(out)
    assert rep["m_fx"] == pytest.approx(1.0, abs=1e-8)
    assert rep["op_norm"] == pytest.approx(0.0, abs=1e-12)
    assert rep["spec_radius"] == pytest.approx(0.0, abs=1e-12)
    assert rep["theta_grid_size"] == 256
    assert rep["a"] == 0.0 and rep["b"] == 0.0 and rep["sigma2"] == 1.0
    assert "tool" in rep["provenance"]


def test_stability_rejects_unstable_model(tmp_path, capsys):
    assert run("stability", "--a", "1.0", "--b", "0", "--out",
               str(tmp_path / "s.json")) == 3
    assert "numerical" in capsys.readouterr().err


def test_config_file_merge_and_flag_priority(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"a": 0.9, "b": 0.0, "theta_grid": 128}))
    out = tmp_path / "rep.json"
    # flag --a overrides the config's 0.9; b and theta_grid come from it
    assert run("stability", "--config", str(cfg), "--a", "0",
               "--out", str(out)) == 0
    rep = read_json(out)
    assert rep["a"] == 0.0 and rep["b"] == 0.0
    assert rep["theta_grid_size"] == 128
    assert rep["m_fx"] == pytest.approx(1.0, abs=1e-8)


def test_config_file_can_supply_the_seed(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5, "model": "banded", "n": 4, "p": 3}))
    out = tmp_path / "p.csv"
    assert run("simulate", "--config", str(cfg), "--out", str(out)) == 0
    assert read_panel_csv(out).values.shape == (4, 3, 50)


def test_fit_on_bundled_sample_panel(tmp_path):
    out = tmp_path / "fit.json"
    assert run("fit", "--input", str(sample_panel_path()), "--seed", "11",
               "--out", str(out), "--q", "2", "--gamma-num", "12") == 0
    fit = read_json(out)

    import jsonschema
    schema = {
        "type": "object",
        "required": ["provenance", "L", "criterion", "n", "p", "q", "eta",
                     "gamma", "df", "rss", "edges", "solver"],
        "properties": {
            "provenance": {"type": "object",
                           "required": ["tool", "seed", "config"]},
            "L": {"const": 1},
            "criterion": {"enum": ["aic", "bic"]},
            "n": {"const": 40},
            "p": {"const": 5},
            "q": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "eta": {"type": "array", "items": {"type": "number"}},
            "gamma": {"type": "array", "items": {"type": "number"}},
            "df": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "rss": {"type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0}},
            "edges": {"type": "array",
                      "items": {"type": "array", "minItems": 4, "maxItems": 4}},
            "solver": {"type": "object",
                       "required": ["iterations", "restarts",
                                    "final_objective", "floored_blocks"]},
        },
    }
    jsonschema.validate(fit, schema)
    assert fit["q"] == [2, 2, 2, 2, 2]
    for k, j, h, norm in fit["edges"]:
        assert 1 <= k <= 5 and 1 <= j <= 5 and h == 1 and norm > 0


def test_fit_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "fit.json"
    kern = tmp_path / "kern"
    args = ("fit", "--input", str(sample_panel_path()), "--seed", "11",
            "--out", str(out), "--q", "1", "--gamma-num", "8",
            "--kernels-out", str(kern))
    assert run(*args) == 0
    first = (out.read_bytes(),
             (tmp_path / "kern.npy").read_bytes(),
             (tmp_path / "kern.json").read_bytes())
    assert run(*args) == 0
    assert (out.read_bytes(),
            (tmp_path / "kern.npy").read_bytes(),
            (tmp_path / "kern.json").read_bytes()) == first


def test_fit_missing_input_is_data_error(tmp_path, capsys):
    assert run("fit", "--input", str(tmp_path / "nope.csv"), "--seed", "1",
               "--out", str(tmp_path / "f.json")) == 2
    assert "data error" in capsys.readouterr().err


def test_fpca_command_outputs(tmp_path):
    panel = tmp_path / "p.csv"
    assert run("simulate", "--model", "banded", "--n", "12", "--p", "3",
               "--seed", "4", "--out", str(panel)) == 0
    comps = tmp_path / "comps.json"
    scores = tmp_path / "scores.csv"
    assert run("fpca", "--input", str(panel), "--seed", "4", "--q", "2",
               "--out", str(comps), "--scores-out", str(scores)) == 0

    summary = read_json(comps)
    assert len(summary["variables"]) == 3
    for var in summary["variables"]:
        assert var["q"] == 2
        assert len(var["eigenvalues"]) == 2
        assert var["eigenvalues"][0] >= var["eigenvalues"][1] > 0

    lines = scores.read_text().splitlines()
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    assert lines[header_at] == "t,j,l,score"
    assert len(lines) - header_at - 1 == 12 * 3 * 2


def test_evaluate_with_directory_output(tmp_path):
    study = tmp_path / "study.json"
    study.write_text(json.dumps({
        "models": ["banded"], "sizes": [[24, 5]], "replicates": 2,
        "methods": ["ls_1"], "gamma_num": 8,
    }))
    out_dir = tmp_path / "results"
    args = ("evaluate", "--study", str(study), "--seed", "11",
            "--out", str(out_dir) + "/")
    assert run(*args) == 0
    res = read_json(out_dir / "results.json")
    assert res["provenance"]["seed"] == 11
    assert res["criterion"] == "bic"
    assert any(r["metric"] == "auroc" for r in res["tables"])
    table_text = (out_dir / "tables.csv").read_text()
    assert "model,n,p,method,metric,mean,se,replicates" in table_text

    first = ((out_dir / "results.json").read_bytes(),
             (out_dir / "tables.csv").read_bytes())
    assert run(*args) == 0
    assert ((out_dir / "results.json").read_bytes(),
            (out_dir / "tables.csv").read_bytes()) == first


def test_evaluate_rejects_incomplete_study(tmp_path, capsys):
    study = tmp_path / "study.json"
    study.write_text(json.dumps({"models": ["banded"], "replicates": 1}))
    assert run("evaluate", "--study", str(study), "--seed", "1",
               "--out", str(tmp_path / "r.json")) == 2
    assert "sizes" in capsys.readouterr().err
    assert run("evaluate", "--study", str(tmp_path / "missing.json"),
               "--seed", "1", "--out", str(tmp_path / "r.json")) == 2


def test_figure1_writes_curves_and_figure(tmp_path):
    out = tmp_path / "fig"
    assert run("figure1", "--out", str(out), "--a-values", "0.0,0.3",
               "--b-values", "0.0,1.0", "--grid", "128") == 0
    lines = (out / "stability_curves.csv").read_text().splitlines()
    header_at = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    assert lines[header_at] == "a,b,op_norm,m_fx"
    assert len(lines) - header_at - 1 == 4
    png = (out / "stability.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_console_script_is_installed():
    import shutil
    import subprocess

    exe = shutil.which("fvar")
    assert exe is not None
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("fvar ")
