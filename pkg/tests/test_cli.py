"""Tests for the uavalloc command line."""

from pathlib import Path

import pytest
from click.testing import CliRunner

from uavalloc.cli import app
from uavalloc.core.config import CONFIG_FILENAME
from uavalloc.experiments.artifacts import SWEEP_SCHEMA, write_csv
from uavalloc.utils.templates import render_config


@pytest.fixture
def cli_runner():
    """Create a CLI runner for testing Click commands."""
    return CliRunner()


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config):
    """A configuration file holding the tiny test settings."""
    path = tmp_path / "tiny.toml"
    path.write_text(render_config(tiny_config.to_mapping()), encoding="utf-8")
    return path


def test_init_writes_config_once(cli_runner):
    """Test that init writes the template and refuses to overwrite it."""
    with cli_runner.isolated_filesystem():
        result = cli_runner.invoke(app, ["init"])
        assert result.exit_code == 0
        assert f"Created {CONFIG_FILENAME}" in result.output
        text = Path(CONFIG_FILENAME).read_text(encoding="utf-8")

        again = cli_runner.invoke(app, ["init"])
        assert again.exit_code == 0
        assert "already exists" in again.output
        assert Path(CONFIG_FILENAME).read_text(encoding="utf-8") == text


def test_show_config_applies_overrides(cli_runner):
    """Test that --set and --seed reach the merged configuration."""
    with cli_runner.isolated_filesystem():
        result = cli_runner.invoke(
            app, ["--set", "scenario.n_users=4", "--seed", "7", "show-config"]
        )
    assert result.exit_code == 0
    assert "scenario.n_users: 4" in result.output
    assert "experiment.seeds: [7]" in result.output
    assert "config hash:" in result.output


def test_show_config_reads_init_file(cli_runner):
    """Test that a written config file is picked up from the cwd."""
    with cli_runner.isolated_filesystem():
        cli_runner.invoke(app, ["init"])
        text = Path(CONFIG_FILENAME).read_text(encoding="utf-8")
        Path(CONFIG_FILENAME).write_text(
            text.replace("n_users = 10", "n_users = 5"), encoding="utf-8"
        )
        result = cli_runner.invoke(app, ["show-config"])
    assert result.exit_code == 0
    assert "scenario.n_users: 5" in result.output


@pytest.mark.parametrize(
    "args",
    [
        ["--set", "no-equals-sign", "show-config"],
        ["--set", "scenario.colour=3", "show-config"],
        ["--set", "scenario.n_users=-2", "show-config"],
        ["--config", "missing.toml", "show-config"],
    ],
)
def test_bad_configuration_exits(cli_runner, args):
    """Test that configuration errors end with exit code 1."""
    with cli_runner.isolated_filesystem():
        result = cli_runner.invoke(app, args)
    assert result.exit_code == 1


def test_oracle_command(cli_runner, tmp_path):
    """Test that the oracle solves a small scenario and writes its allocation."""
    result = cli_runner.invoke(
        app,
        [
            "--set",
            "scenario.n_users=3",
            "--seed",
            "0",
            "--out-dir",
            str(tmp_path),
            "oracle",
            "--power-grid",
            "11",
        ],
    )
    assert result.exit_code == 0
    assert "Oracle serves" in result.output
    assert (tmp_path / "oracle-seed0" / "allocation.csv").is_file()


def test_oracle_rejects_large_scenarios(cli_runner, tmp_path):
    """Test that the oracle size guard surfaces as an error exit."""
    result = cli_runner.invoke(
        app, ["--set", "scenario.n_users=8", "--out-dir", str(tmp_path), "oracle"]
    )
    assert result.exit_code == 1
    assert "Oracle failed" in result.output


def test_train_and_eval(cli_runner, tmp_path, tiny_config_file):
    """Test training from a config file and replaying the saved models."""
    out = tmp_path / "runs"
    result = cli_runner.invoke(
        app, ["--config", str(tiny_config_file), "--out-dir", str(out), "train"]
    )
    assert result.exit_code == 0
    run_dir = out / "train-seed0"
    assert "Seed 0" in result.output
    assert (run_dir / "manifest.json").is_file()

    replay = cli_runner.invoke(app, ["eval", str(run_dir)])
    assert replay.exit_code == 0
    assert "Joint solution serves" in replay.output
    assert (run_dir / "eval_allocation.csv").is_file()


def test_sweep_rejects_bad_values(cli_runner, tmp_path, tiny_config_file):
    """Test that non-numeric sweep values are refused."""
    result = cli_runner.invoke(
        app,
        [
            "--config",
            str(tiny_config_file),
            "sweep",
            "--axis",
            "height",
            "--values",
            "300,high",
        ],
    )
    assert result.exit_code == 1


def test_plot_rejects_unknown_schema(cli_runner, tmp_path):
    """Test that a CSV without a matching figure fails cleanly."""
    path = write_csv(tmp_path / "rows.csv", "allocation/v1", [{"user": 1}])
    result = cli_runner.invoke(app, ["plot", str(path)])
    assert result.exit_code == 1
    assert "Plotting failed" in result.output


def test_plot_sweep(cli_runner, tmp_path):
    """Test rendering a sweep CSV to an image."""
    pytest.importorskip("matplotlib")
    path = write_csv(
        tmp_path / "sweep.csv",
        SWEEP_SCHEMA,
        [
            {"axis": "height", "value": v, "mean_gain": None, "best_n_s": n}
            for v, n in ((300.0, 2), (400.0, 3))
        ],
    )
    out = tmp_path / "s.png"
    result = cli_runner.invoke(app, ["plot", str(path), "--out", str(out)])
    assert result.exit_code == 0
    assert out.is_file()


def test_sweep_rejects_bad_thresholds(cli_runner, tiny_config_file):
    """Test that non-numeric threshold crosses are refused."""
    result = cli_runner.invoke(
        app,
        [
            "--config",
            str(tiny_config_file),
            "sweep",
            "--axis",
            "total_power",
            "--values",
            "0.5",
            "--thresholds",
            "5e5,low",
        ],
    )
    assert result.exit_code == 1
