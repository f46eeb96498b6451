"""Tests for the configuration template."""

import tomllib

import pytest

from uavalloc.core.config import DEFAULTS, build_experiment_config, default_config
from uavalloc.utils.templates import KEY_NOTES, render_config, toml_value


@pytest.mark.parametrize(
    "value, text",
    [
        (True, "true"),
        (False, "false"),
        ("sampled", '"sampled"'),
        (1.0e-16, "1e-16"),
        (1600.0, "1600.0"),
        (200, "200"),
        ([64, 64], "[64, 64]"),
        ((), "[]"),
    ],
)
def test_toml_value(value, text):
    assert toml_value(value) == text


def test_rendered_defaults_parse_back():
    text = render_config()
    assert text.startswith("# uavalloc configuration")
    assert "[scenario.constants]" in text
    assert tomllib.loads(text) == DEFAULTS


def test_rendered_config_carries_notes():
    text = render_config()
    for line in text.splitlines():
        if line.startswith("delta_max"):
            assert line.endswith(f"# {KEY_NOTES['ddpg.delta_max']}")
            break
    else:
        pytest.fail("delta_max missing from the rendered config")


def test_render_custom_values(tiny_config):
    text = render_config(tiny_config.to_mapping())
    parsed = tomllib.loads(text)
    assert parsed["scenario"]["n_users"] == 3
    assert build_experiment_config(parsed) == tiny_config
    assert build_experiment_config(parsed) != default_config()
