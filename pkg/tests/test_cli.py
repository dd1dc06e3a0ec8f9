import json
import os

import pytest

from bpire_lab.cli import main
from bpire_lab.config import ConfigError, RunConfig
from bpire_lab.runner import run


def tiny_config(tmp_path, **overrides):
    data = {
        "replicas": {key: 200 for key in (
            "walk_stats", "arcsine", "measure_change", "lemma1", "lemma5",
            "lemma7", "martingale", "gamma", "onedim", "twodim",
            "level_change", "band")},
        "horizons": [20, 40],
        "n_walk": 64,
        "trunc_i": 4,
        "trunc_j": 4,
        "series_trunc": 8,
        "ladder_budget": 4000,
        "out_dir": str(tmp_path / "out"),
        "master_seed": 7,
    }
    data.update(overrides)
    return data


def write_config(tmp_path, name="cfg.json", **overrides):
    path = tmp_path / name
    path.write_text(json.dumps(tiny_config(tmp_path, **overrides)))
    return str(path)


def test_config_defaults_and_roundtrip():
    cfg = RunConfig()
    again = RunConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert cfg.replicas["arcsine"] == 20_000
    assert cfg.delta() == pytest.approx(2e-3)


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="unknown config fields"):
        RunConfig.from_dict({"not_a_field": 1})


def test_config_field_level_messages():
    with pytest.raises(ConfigError, match="alpha"):
        RunConfig(alpha=3.0)
    with pytest.raises(ConfigError, match="t_values"):
        RunConfig(t_values=[2.0, 1.0])
    with pytest.raises(ConfigError, match="replicas.arcsine"):
        RunConfig(replicas={"arcsine": 1})
    with pytest.raises(ConfigError, match="workers"):
        RunConfig(workers=0)


def test_config_stable_spec_scale():
    cfg = RunConfig()
    assert cfg.spec().scale == pytest.approx(1.0 / 2.0 ** 0.5)
    cfg2 = RunConfig(stable_scale=0.7)
    assert cfg2.spec().scale == 0.7


def test_reports_are_deterministic(tmp_path):
    cfg_path = write_config(tmp_path)
    cfg_a = RunConfig.from_json(cfg_path)
    run("walk-stats", cfg_a)
    text_a = open(os.path.join(cfg_a.out_dir, "report.json")).read()

    cfg_b = RunConfig.from_json(cfg_path)
    run("walk-stats", cfg_b)
    text_b = open(os.path.join(cfg_b.out_dir, "report.json")).read()

    assert text_a == text_b  # byte-identical report for identical config


def test_worker_count_invariance(tmp_path):
    base = tiny_config(tmp_path)
    base.pop("out_dir")
    cfg1 = RunConfig.from_dict({**base, "workers": 1, "out_dir": str(tmp_path / "w1")})
    cfg2 = RunConfig.from_dict({**base, "workers": 2, "out_dir": str(tmp_path / "w2")})
    run("arcsine", cfg1)
    run("arcsine", cfg2)
    text1 = open(os.path.join(cfg1.out_dir, "report.json")).read()
    text2 = open(os.path.join(cfg2.out_dir, "report.json")).read()
    assert text1 == text2  # byte-identical regardless of worker count


def test_csv_provenance_headers(tmp_path):
    cfg = RunConfig.from_dict(tiny_config(tmp_path))
    run("arcsine", cfg)
    path = os.path.join(cfg.out_dir, "arcsine_ecdf.csv")
    lines = open(path).read().splitlines()
    assert lines[0].startswith("#")
    header = [ln for ln in lines if ln.startswith("#")]
    assert any("seed" in ln for ln in header)
    data = [ln for ln in lines if not ln.startswith("#")]
    assert data[0] == "x,empirical,model"


def test_cli_unknown_subcommand(tmp_path, capsys):
    code = main(["frobnicate", "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_bad_config_message(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"alpha": 9.0}))
    code = main(["walk-stats", "--config", str(bad)])
    captured = capsys.readouterr()
    assert code == 2
    assert "alpha" in captured.err


def test_cli_missing_config_file(tmp_path):
    assert main(["walk-stats", "--config", str(tmp_path / "none.json")]) == 2


def test_cli_pass_and_fail_exit_codes(tmp_path, capsys):
    # validate-env on the default model passes
    code = main(["validate-env", "--out", str(tmp_path / "ok"), "--seed", "3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "report written" in out

    # an absurdly short walk cannot match the continuous arcsine law
    cfg = write_config(tmp_path, name="fail.json", n_walk=4)
    code = main(["arcsine", "--config", cfg])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_seed_override_changes_statistics(tmp_path):
    cfg_path = write_config(tmp_path)
    assert main(["arcsine", "--config", cfg_path, "--seed", "1",
                 "--out", str(tmp_path / "s1")]) in (0, 1)
    assert main(["arcsine", "--config", cfg_path, "--seed", "2",
                 "--out", str(tmp_path / "s2")]) in (0, 1)
    r1 = json.loads(open(tmp_path / "s1" / "report.json").read())
    r2 = json.loads(open(tmp_path / "s2" / "report.json").read())
    assert r1["records"][0]["statistic"] != r2["records"][0]["statistic"]
    assert r1["records"][0]["seed"] == 1


def test_run_rejects_unknown_subcommand(tmp_path):
    cfg = RunConfig.from_dict(tiny_config(tmp_path))
    with pytest.raises(ValueError):
        run("nonsense", cfg)
