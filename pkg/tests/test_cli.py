import json
import re

import pytest

from diffevo import cli, harness

FAST = ["--set", "evolve.population=32", "--set", "metrics.elites=8", "--set", "schedule.T=4"]


def test_benchmark_filter_gives_requested_rows(tmp_path, capsys):
    code = cli.main(["benchmark", "--benchmark", "himmelblau", "--repeats", "5", "--out", str(tmp_path), *FAST])
    assert code == cli.EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["runs"]) == 5
    assert re.search(r"himmelblau\s+\d+\.\d\d \(\d\.\d\d\)", capsys.readouterr().out)


def test_env_output_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("DIFFEVO_OUT", str(tmp_path / "env"))
    assert cli.main(["two-peaks", "--repeats", "1", "-q", *FAST]) == cli.EXIT_OK
    assert (tmp_path / "env" / "manifest.json").exists()


def test_seed_and_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# quick\nschedule.T = 4\nevolve.population = 32\nmetrics.elites = 8\n")
    assert cli.main(["benchmark", "--config", str(cfg), "--seed", "9", "--repeats", "2",
                     "--benchmark", "beale", "--out", str(tmp_path / "o"), "-q"]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["seeds"] == [9, 10]


@pytest.mark.parametrize("args", [
    ["benchmark", "--set", "schedule.T=1"],
    ["benchmark", "--set", "no.such.key=3"],
    ["benchmark", "--set", "missing-equals"],
    ["cartpole", "--set", "cartpole.arch=\"huge\""],
    ["benchmark", "--config", "/nonexistent/file.cfg"],
])
def test_config_errors_exit_64(args, tmp_path, capsys):
    assert cli.main([*args, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_failed_runs_exit_2(tmp_path, monkeypatch):
    def broken(cfg, label, seed, root):
        raise RuntimeError("no")

    monkeypatch.setitem(harness._RUNNERS, "benchmark", broken)
    assert cli.main(["benchmark", "--repeats", "1", "--out", str(tmp_path), "-q", *FAST]) == cli.EXIT_RUN_FAILED


def test_cartpole_preset_flag(tmp_path):
    assert cli.main(["cartpole", "--preset", "small-ambient", "--repeats", "1", "--out", str(tmp_path),
                     "-q", *FAST]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["runs"][0]["label"] == "small-ambient"


def test_parser_rejects_unknown_experiment():
    with pytest.raises(SystemExit):
        cli.main(["maze"])
