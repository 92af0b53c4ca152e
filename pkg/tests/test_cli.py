import json

import numpy as np
import pytest
import yaml

from wpconv import cli
from wpconv.errors import ConfigError


FAST_GRIDS = "grids: {r_min: 1.0e-1, r_max: 1.0e+7, points_per_decade: 80}"


def run_cfg(text, outdir):
    doc = yaml.safe_load(text)
    doc["output_dir"] = str(outdir)
    return cli.run(cli.load_config(doc))


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def test_load_minimal_preset():
    cfg = cli.load_config("{preset: example_3_3, p: 2, d: 1}")
    assert cfg.preset == "example_3_3"
    assert cfg.p == 2 and cfg.d == 1
    assert cfg.seeds["sampler"] == 20_260_809
    assert cfg.samples["n_wpi"] == 1_000_000


def test_load_rejects_out_of_range_preset_parameter():
    with pytest.raises(ConfigError, match="requires 0 < p < 1"):
        cli.load_config("{preset: example_3_2, p: 1.5}")


def test_load_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="bogus"):
        cli.load_config("{preset: example_3_3, bogus: 1}")
    with pytest.raises(ConfigError, match="grids.bogus"):
        cli.load_config("{preset: example_3_3, grids: {bogus: 2}}")


def test_load_requires_exactly_one_of_preset_custom():
    with pytest.raises(ConfigError, match="exactly one"):
        cli.load_config("{stages: [rate]}")
    with pytest.raises(ConfigError, match="exactly one"):
        cli.load_config(
            "{preset: example_3_3, custom: {potential: {family: quadratic}}}")


def test_load_rejects_unknown_stage():
    with pytest.raises(ConfigError, match="unknown stage"):
        cli.load_config("{preset: example_3_3, stages: [frobnicate]}")


def test_custom_config_round_trips():
    text = ("custom:\n"
            "  potential: {family: expression, expression: x**4, d: 1}\n"
            "  source: {kind: uniform, halfwidth: 1.0}\n"
            "stages: [rate]\n")
    cfg = cli.load_config(text)
    dumped = yaml.safe_dump(cfg.to_dict())
    cfg2 = cli.load_config(dumped)
    assert cfg2.to_dict() == cfg.to_dict()
    model, comparison = cli.build_model(cfg)
    assert comparison is None
    assert model.potential.v0(2.0) == pytest.approx(16.0)


def test_overrides_dotted_paths():
    doc = yaml.safe_load("{preset: example_3_3}")
    cli.apply_overrides(doc, ["p=4", "samples.n_wpi=1000", "nu.kind=point_mass"])
    cfg = cli.load_config(doc)
    assert cfg.p == 4
    assert cfg.samples["n_wpi"] == 1000
    assert cfg.nu == {"kind": "point_mass"}
    with pytest.raises(ConfigError, match="expected key=value"):
        cli.apply_overrides(doc, ["oops"])


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def test_run_no_stages_writes_manifest_only(tmp_path):
    status, _ = run_cfg("{preset: example_3_3, stages: []}", tmp_path)
    assert status == 0
    files = {p.name for p in tmp_path.iterdir()}
    assert files == {"manifest.json"}
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["config"]["preset"] == "example_3_3"


def test_run_rate_and_fit(tmp_path):
    status, art = run_cfg(
        "preset: example_3_3\np: 2\nstages: [rate, fit]\n" + FAST_GRIDS,
        tmp_path)
    assert status == 0
    for name in ("alpha.csv", "beta.csv", "fit.json", "manifest.json"):
        assert (tmp_path / name).exists()
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["family"] == "power"
    assert abs(fit["exponent"] - 1.0) < 0.2
    rows = (tmp_path / "beta.csv").read_text().splitlines()
    assert rows[0] == "r,varphi_phi,beta"


def test_fit_auto_runs_rate(tmp_path):
    status, _ = run_cfg(
        "preset: example_3_3\nstages: [fit]\n" + FAST_GRIDS, tmp_path)
    assert status == 0
    assert (tmp_path / "alpha.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["stages"]["rate"]["ok"]


def test_run_infeasible_radius_exits_two(tmp_path):
    status, _ = run_cfg(
        "{preset: example_3_2, p: 0.6, R0: 0.1, stages: [conditions]}",
        tmp_path)
    assert status == 2
    doc = json.loads((tmp_path / "conditions.json").read_text())
    assert doc["psi_positive"] is False
    assert doc["psi_min"] < 0.0


def test_run_artifacts_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    text = "preset: example_3_3\nstages: [rate, fit]\n" + FAST_GRIDS
    run_cfg(text, a)
    run_cfg(text, b)
    for name in ("alpha.csv", "beta.csv", "fit.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    ma.pop("timestamp"), mb.pop("timestamp")
    ma["config"].pop("output_dir"), mb["config"].pop("output_dir")
    assert ma == mb


def test_run_drift_certificate_stage(tmp_path):
    status, _ = run_cfg(
        "{preset: example_3_3, stages: [drift], grids: {certificate_points: 40}}",
        tmp_path)
    assert status == 0
    doc = json.loads((tmp_path / "certificate.json").read_text())
    assert doc["valid"] and doc["violation_fraction"] == 0.0
    assert doc["c0"] == pytest.approx(doc["b"] * doc["lambda_inv_bound"] + 1.0)


def test_run_verify_stage_small(tmp_path):
    text = ("preset: example_3_3\nstages: [verify]\n"
            "samples: {n_wpi: 20000}\n"
            "grids: {r_min: 1.0e-1, r_max: 1.0e+7, points_per_decade: 80, "
            "n_wpi_r: 8, certificate_points: 40}\n")
    status, art = run_cfg(text, tmp_path)
    assert status == 0
    doc = json.loads((tmp_path / "wpi_report.json").read_text())
    assert doc["passed"] and doc["holdout_violations"] == 0
    # closure pulled in rate and drift
    assert (tmp_path / "alpha.csv").exists()
    assert (tmp_path / "certificate.json").exists()


def test_run_decay_stage_small(tmp_path):
    text = ("preset: example_3_3\nstages: [decay]\n"
            "samples: {n_paths: 12, n_inner: 8, dt: 0.01, t_max: 1.0, n_times: 3}\n")
    status, _ = run_cfg(text, tmp_path)
    assert status == 0
    rows = (tmp_path / "decay.csv").read_text().splitlines()
    assert rows[0] == "t,variance,ci_halfwidth"
    assert len(rows) == 4


def test_sweep_single_value_degenerates(tmp_path):
    cfg = cli.load_config(
        "preset: example_3_3\nstages: []\noutput_dir: " + str(tmp_path)
        + "\n" + FAST_GRIDS)
    status, _ = cli.sweep(cfg, "sigma", [1.0])
    assert status == 0
    doc = json.loads((tmp_path / "sweep.json").read_text())
    assert doc["pairs"] == {}
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("s,alpha_sigma_1")


def test_sweep_p_recovers_both_exponents(tmp_path):
    """p-sweep of the lattice preset: fitted power exponents track 2/p."""
    cfg = cli.load_config(
        "preset: example_3_1\nstages: []\noutput_dir: " + str(tmp_path)
        + "\ngrids: {r_min: 1.0, r_max: 1.0e+8, points_per_decade: 100}\n"
        + "fit: {families: [power]}\n")
    status, _ = cli.sweep(cfg, "p", [1.0, 2.0])
    assert status == 0
    doc = json.loads((tmp_path / "sweep.json").read_text())
    exps = {k: v["exponent"] for k, v in doc["fits"].items()}
    assert abs(exps["p=1"] - 2.0) < 0.3
    assert abs(exps["p=2"] - 1.0) < 0.2
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("s,alpha_p=1,alpha_p=2")


def test_main_subcommands(tmp_path, capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "example_3_3" in out and "lemma_3_2" in out
    assert cli.main(["validate", "{preset: example_3_3}"]) == 0
    assert cli.main(["validate", "{preset: example_3_2, p: 1.5}"]) == 1
    assert cli.main(["validate", "{preset: example_3_2}",
                     "--set", "p=1.5"]) == 1
    cfgfile = tmp_path / "cfg.yaml"
    cfgfile.write_text("preset: example_3_3\nstages: []\n")
    assert cli.main(["run", str(cfgfile), "-o", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()
