"""Tests for the layered configuration."""

import os
from unittest.mock import patch

import pytest

from uavalloc.core.config import (
    DEFAULTS,
    Config,
    build_experiment_config,
    deep_merge,
    default_config,
    load_experiment_config,
    parse_override,
)
from uavalloc.core.errors import ConfigError


@pytest.fixture
def mock_env_vars():
    """Set up mock environment variables for testing."""
    original_env = os.environ.copy()
    os.environ["UAVALLOC_SEED"] = "3,4"
    os.environ["UAVALLOC_OUT_DIR"] = "elsewhere"
    os.environ["UAVALLOC_WORKERS"] = "2"
    yield
    os.environ.clear()
    os.environ.update(original_env)


@pytest.fixture
def clean_env(monkeypatch):
    for name in (
        "UAVALLOC_SEED",
        "UAVALLOC_OUT_DIR",
        "UAVALLOC_WORKERS",
        "UAVALLOC_FULL_SCALE",
    ):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(
        "[scenario]\n"
        "n_users = 4\n"
        "uav_height_m = 300.0\n"
        "\n"
        "[dqn]\n"
        "hidden = [16, 16]\n",
        encoding="utf-8",
    )
    return path


def test_defaults_are_valid():
    cfg = default_config()
    assert cfg.scenario.n_users == 10
    assert cfg.scenario.n_blocks == 200
    assert cfg.scenario.constants.pathloss_los == 2.5
    assert cfg.dqn.hidden == (64, 64)
    assert cfg.ddpg.delta_max == 0.002
    assert cfg.experiment.seeds == (0, 1, 2, 3, 4)


def test_config_hash_is_stable():
    assert default_config().config_hash() == default_config().config_hash()
    changed = default_config().replace({"dqn.gamma": 0.9})
    assert changed.config_hash() != default_config().config_hash()


def test_replace_coerces_and_revalidates():
    cfg = default_config().replace({"scenario.n_users": 4.0, "dqn.hidden": [8]})
    assert cfg.scenario.n_users == 4
    assert isinstance(cfg.scenario.n_users, int)
    assert cfg.dqn.hidden == (8,)

    with pytest.raises(ConfigError, match="dqn.tau"):
        default_config().replace({"dqn.tau": 0.0})


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="dqn.learning_rat"):
        default_config().replace({"dqn.learning_rat": 0.1})
    with pytest.raises(ConfigError, match="Unknown configuration section"):
        default_config().replace({"nosuch.key": 1})


def test_wrong_type_is_named():
    with pytest.raises(ConfigError, match="scenario.n_users"):
        default_config().replace({"scenario.n_users": 2.5})
    with pytest.raises(ConfigError, match="channel.fading"):
        default_config().replace({"channel.fading": "rayleigh"})


def test_sweep_cross_and_convergence_settings():
    cfg = default_config().replace(
        {
            "experiment.sweep_axis": "total_power",
            "experiment.threshold_values": [5.0e5, 1.0e6],
        }
    )
    assert cfg.experiment.threshold_values == (5.0e5, 1.0e6)
    assert cfg.experiment.convergence_max_std == 0.5

    with pytest.raises(ConfigError, match="experiment.threshold_values"):
        cfg.replace({"experiment.threshold_values": [0.0]})
    with pytest.raises(ConfigError, match="experiment.convergence_max_std"):
        default_config().replace({"experiment.convergence_max_std": 0.0})


def test_missing_key_is_named():
    mapping = deep_merge(DEFAULTS, {})
    del mapping["ddpg"]["tau"]
    with pytest.raises(ConfigError, match="ddpg.tau"):
        build_experiment_config(mapping)


def test_total_bandwidth_sets_block_count():
    cfg = default_config().replace({"scenario.total_bandwidth_hz": 480_000.0})
    assert cfg.scenario.n_blocks == 300

    with pytest.raises(ConfigError, match="total_bandwidth_hz"):
        default_config().replace({"scenario.total_bandwidth_hz": 1000.0})


def test_per_user_thresholds_must_match_population():
    cfg = default_config().replace(
        {"scenario.n_users": 2, "scenario.rate_threshold_bps": [1.0e6, 2.0e6]}
    )
    assert cfg.scenario.rate_threshold_bps == (1.0e6, 2.0e6)

    with pytest.raises(ConfigError, match="rate_threshold_bps"):
        default_config().replace({"scenario.rate_threshold_bps": [1.0e6, 2.0e6]})


def test_parse_override():
    assert parse_override("dqn.gamma=0.9") == ("dqn.gamma", 0.9)
    assert parse_override("experiment.seeds=[1, 2]") == ("experiment.seeds", [1, 2])
    assert parse_override("channel.fading=sampled") == ("channel.fading", "sampled")
    assert parse_override("experiment.full_scale=true") == (
        "experiment.full_scale",
        True,
    )
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")


def test_get_config_defaults(clean_env, tmp_path):
    """Test getting configuration with defaults."""
    config = Config(overrides={})
    with patch("pathlib.Path.exists", return_value=False):
        values = config.get_config()
    assert values["scenario"]["n_users"] == DEFAULTS["scenario"]["n_users"]
    assert values["dqn"]["learning_rate"] == DEFAULTS["dqn"]["learning_rate"]


def test_get_config_from_file(clean_env, config_file):
    config = Config(config_file)
    assert config.get_value("scenario.n_users") == 4
    assert config.get_value("scenario.block_hz") == 1600.0
    assert config.get_value("dqn.nosuch", "fallback") == "fallback"

    cfg = config.experiment_config()
    assert cfg.scenario.uav_height_m == 300.0
    assert cfg.dqn.hidden == (16, 16)


def test_missing_explicit_file(clean_env, tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        Config(tmp_path / "absent.toml").get_config()


def test_malformed_file(clean_env, tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[scenario\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="Failed to parse"):
        Config(path).get_config()


def test_environment_layer(mock_env_vars, tmp_path):
    cfg = Config(tmp_path / "absent.toml", full_scale=False)
    cfg.explicit_path = False
    settings = cfg.experiment_config().experiment
    assert settings.seeds == (3, 4)
    assert settings.out_dir == "elsewhere"
    assert settings.workers == 2


def test_overrides_beat_file_and_env(mock_env_vars, config_file):
    cfg = Config(
        config_file,
        overrides={"scenario.n_users": 5, "experiment.seeds": [9]},
    ).experiment_config()
    assert cfg.scenario.n_users == 5
    assert cfg.experiment.seeds == (9,)


def test_full_scale(clean_env, tmp_path):
    absent = tmp_path / "absent.toml"
    cfg = Config(absent, full_scale=True)
    cfg.explicit_path = False
    full = cfg.experiment_config()
    assert full.scenario.n_users == 50
    assert full.scenario.n_blocks == 1000
    assert full.dqn.p_max == 0.05
    assert full.experiment.full_scale is True


def test_full_scale_from_environment(clean_env, monkeypatch, tmp_path):
    monkeypatch.setenv("UAVALLOC_FULL_SCALE", "true")
    cfg = Config(tmp_path / "absent.toml")
    cfg.explicit_path = False
    assert cfg.experiment_config().scenario.n_users == 50


def test_file_values_survive_full_scale(clean_env, config_file):
    cfg = load_experiment_config(config_file, full_scale=True)
    assert cfg.scenario.n_users == 4
    assert cfg.scenario.n_blocks == 1000


def test_get_env(monkeypatch):
    monkeypatch.setenv("UAVALLOC_TEST_VALUE", "present")
    assert Config().get_env("UAVALLOC_TEST_VALUE") == "present"


def test_environment_layer_reads_through_get_env(tmp_path):
    cfg = Config(tmp_path / "absent.toml", full_scale=False)
    cfg.explicit_path = False
    values = {"UAVALLOC_SEED": "6,7", "UAVALLOC_WORKERS": "3"}
    with patch.object(Config, "get_env", side_effect=values.get) as get_env:
        settings = cfg.experiment_config().experiment
    assert settings.seeds == (6, 7)
    assert settings.workers == 3
    get_env.assert_any_call("UAVALLOC_OUT_DIR")
